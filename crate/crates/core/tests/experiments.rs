use h2sim::evolve::Trajectory;
use h2sim::experiments::{
    emit_sweep, emit_trajectory, formation_experiment, jc_submodel, mu_sweep, run, ExperimentConfig, Format,
    OutputSpec, RunSummary, SweepSummary,
};
use h2sim::hilbert::Mode;

fn short_formation(steps: usize) -> ExperimentConfig {
    let mut cfg = formation_experiment();
    cfg.horizon = steps as f64 * cfg.dt;
    cfg.sample_stride = 1;
    cfg
}

#[test]
fn empty_trajectory_is_header_only() {
    let traj = Trajectory::new(vec!["initial".into(), "H2".into()]);
    assert_eq!(traj.to_csv(), "t,initial,H2,trace\n");
}

#[test]
fn emitted_files_and_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_formation(3);
    let out = run(&cfg).unwrap();
    let spec = OutputSpec { directory: dir.path().join("nested"), formats: vec![Format::Csv, Format::Json, Format::Svg] };
    let files = emit_trajectory(&out.trajectory, &out.summary, &spec, "f").unwrap();
    assert_eq!(files.len(), 3);

    let csv = std::fs::read_to_string(dir.path().join("nested/f.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,initial,final,final_prime,H2,trace"));
    assert_eq!(csv.lines().count(), 1 + 4);
    let row: Vec<&str> = csv.lines().nth(3).unwrap().split(',').collect();
    assert_eq!(row[0], "2.00000000000e-10");

    let text = std::fs::read_to_string(dir.path().join("nested/f.json")).unwrap();
    let back: RunSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(back, out.summary);
    for (name, v) in &back.endpoints {
        let twelve: f64 = format!("{v:.11e}").parse().unwrap();
        assert_eq!(twelve, format!("{:.11e}", out.summary.endpoints[name]).parse::<f64>().unwrap());
    }
    let svg = std::fs::read_to_string(dir.path().join("nested/f.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
}

#[test]
fn io_errors_carry_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let out = run(&short_formation(0)).unwrap();
    let spec = OutputSpec { directory: blocker.join("x"), formats: vec![Format::Csv] };
    let err = emit_trajectory(&out.trajectory, &out.summary, &spec, "f").unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("blocker"));
}

#[test]
fn hash_tracks_physical_parameters_only() {
    let base = formation_experiment();
    let mut cosmetic = base.clone();
    cosmetic.name = "other".into();
    cosmetic.dt = 5e-11;
    cosmetic.output.directory = "elsewhere".into();
    assert_eq!(cosmetic.physical_hash(), base.physical_hash());
    let mut physical = base.clone();
    physical.modes[Mode::NuclearSpin.index()].mu = 0.25;
    assert_ne!(physical.physical_hash(), base.physical_hash());
    let mut physical = base.clone();
    physical.initial.nuclear_up = [true, false];
    assert_ne!(physical.physical_hash(), base.physical_hash());
}

#[test]
fn single_value_sweep_reduces_to_a_run() {
    let base = formation_experiment();
    let t_eval = 5.0 * base.dt;
    let sweep = mu_sweep(&base, Mode::ElectronSpin, &[0.2], t_eval, Some(1)).unwrap();
    let mut cfg = base.clone();
    cfg.modes[Mode::ElectronSpin.index()].mu = 0.2;
    cfg.horizon = t_eval;
    let direct = run(&cfg).unwrap();
    assert_eq!(sweep.rows.len(), 1);
    assert_eq!(sweep.rows[0].p_h2, direct.trajectory.last("H2").unwrap());
}

#[test]
fn sweep_sorts_rejects_duplicates_and_ignores_worker_count() {
    let base = formation_experiment();
    let t = 3.0 * base.dt;
    let a = mu_sweep(&base, Mode::NuclearSpin, &[0.3, 0.0, 0.1], t, Some(1)).unwrap();
    let b = mu_sweep(&base, Mode::NuclearSpin, &[0.1, 0.3, 0.0], t, Some(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.iter().map(|r| r.mu).collect::<Vec<_>>(), [0.0, 0.1, 0.3]);
    assert!(mu_sweep(&base, Mode::NuclearSpin, &[0.1, 0.1], t, None).is_err());
    assert!(mu_sweep(&base, Mode::NuclearSpin, &[1.0], t, None).is_err());
    assert!(mu_sweep(&base, Mode::AtomUp, &[0.1], t, None).is_err());

    let dir = tempfile::tempdir().unwrap();
    let summary = SweepSummary {
        name: "s".into(),
        config_hash: base.physical_hash(),
        mode: a.mode,
        t_eval: t,
        dt: base.dt,
        rows: a.rows.clone(),
        runtime_seconds: 0.0,
    };
    let spec = OutputSpec { directory: dir.path().to_path_buf(), formats: vec![Format::Csv, Format::Json] };
    emit_sweep(&a, &summary, &spec, "s").unwrap();
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("mu,P_H2\n0.00000000000e0,"));
    let back: SweepSummary = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(back, summary);
}

#[test]
fn unknown_observable_is_a_validation_error() {
    let mut cfg = jc_submodel(1e8);
    cfg.observables = formation_experiment().default_observables();
    let err = run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}
