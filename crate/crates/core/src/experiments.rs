//! Shipped scenarios, run orchestration, μ sweeps and file outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evolve::{
    final_configurations, format_sig, h2_projector, integrate, resolve, Configuration, EvolveError,
    Observable, Schedule, SplitStep, Trajectory,
};
use crate::hamiltonian::{build_total, transition_generators, Couplings, HamiltonianParams, Tunnelling};
use crate::hilbert::{Basis, BasisState, Mode, ModeSpec, StateMap, N_MODES, N_SLOTS};
use crate::lindblad::Channel;
use crate::operators::SparseOperator;
use crate::svg::{LineChart, Series};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(EvolveError),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl ExperimentError {
    /// Process exit code: 1 validation, 2 numerical abort, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Validation(_) => 1,
            ExperimentError::Numerical(_) => 2,
            ExperimentError::Io { .. } => 3,
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
        ExperimentError::Io { path: path.to_path_buf(), message: e.to_string() }
    }
}

impl From<EvolveError> for ExperimentError {
    fn from(e: EvolveError) -> Self {
        match e {
            EvolveError::TraceDrift { .. } | EvolveError::NonFinite { .. } | EvolveError::EigenFailure(_) => {
                ExperimentError::Numerical(e)
            }
            other => ExperimentError::Validation(other.to_string()),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Validation(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { directory: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json, Format::Svg] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mode: Mode,
    pub values: Vec<f64>,
    /// Evaluation time, s.
    pub t_eval: f64,
}

fn default_stride() -> usize {
    1
}

fn default_name() -> String {
    "experiment".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub hbar: f64,
    /// Photon register order: ω↑, ω↓, Ω↑, Ω↓, Ωˢ, Ωⁿ.
    pub modes: [ModeSpec; N_MODES],
    pub couplings: Couplings,
    pub tunnelling: Tunnelling,
    pub initial: BasisState,
    /// Step, s.
    pub dt: f64,
    /// Final time, s.
    pub horizon: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    /// Named photon-marginal projectors. Empty means the default set:
    /// initial, final, final_prime, H2.
    #[serde(default)]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Per-step trace renormalization; diagnostic only.
    #[serde(default)]
    pub renormalize: bool,
}

/// Default mode table with the given influx ratios (photon register order)
/// and default cutoffs.
fn standard_modes(mu: [f64; N_MODES]) -> [ModeSpec; N_MODES] {
    let freq = [5e9, 5e9, 1e10, 1e10, 1e9, 1e8];
    let cutoffs = crate::hilbert::Cutoffs::DEFAULT.0;
    Mode::ALL.map(|label| {
        let i = label.index();
        ModeSpec { label, frequency: freq[i], gamma_out: 1e7, mu: mu[i], cutoff: cutoffs[i] }
    })
}

fn state(photons: [u8; N_MODES], occupied: &[usize], apart: bool, nuclear_up: [bool; 2]) -> BasisState {
    let mut electrons = [false; N_SLOTS];
    for &s in occupied {
        electrons[s] = true;
    }
    BasisState { photons, electrons, apart, nuclear_up }
}

/// The formation run: three photons (Ω↑, Ω↓, Ωˢ), both electrons spin-↓ in
/// the atomic ground orbitals, nuclei apart with spins ↑↑.
pub fn formation_experiment() -> ExperimentConfig {
    use crate::hilbert::{slot, Atom, Orbital, Spin};
    let initial = state(
        [0, 0, 1, 1, 1, 0],
        &[slot(Atom::First, Orbital::Ground, Spin::Down), slot(Atom::Second, Orbital::Ground, Spin::Down)],
        true,
        [true, true],
    );
    let mut cfg = ExperimentConfig {
        name: "formation".into(),
        hbar: 1.0,
        modes: standard_modes([0.0, 0.0, 0.5, 0.5, 0.5, 0.5]),
        couplings: Couplings {
            g_atom_up: 1e8,
            g_atom_down: 1e8,
            g_mol_up: 5e7,
            g_mol_down: 5e7,
            g_spin: 1e7,
            g_en: 1e6,
        },
        tunnelling: Tunnelling { zeta2: 1e9, zeta1: 1e7, zeta0: 0.0 },
        initial,
        dt: 1e-10,
        horizon: 0.0012,
        sample_stride: 12_000,
        observables: Vec::new(),
        sweep: None,
        output: OutputSpec::default(),
        renormalize: false,
    };
    cfg.observables = cfg.default_observables();
    cfg
}

/// Standard sweep grid: 0, 0.05, …, 0.5.
pub fn table_mu_values() -> Vec<f64> {
    mu_grid(0.0, 0.5, 0.05).expect("static grid")
}

/// The μ sweep over `mode` (Ωˢ or Ωⁿ) with every other influx mode at 0.5.
pub fn sweep_experiment(mode: Mode) -> ExperimentConfig {
    let mut cfg = formation_experiment();
    cfg.name = format!("sweep_{}", mode.label());
    cfg.sweep = Some(SweepSpec { mode, values: table_mu_values(), t_eval: 0.0012 });
    cfg.sample_stride = cfg.steps().max(1);
    cfg
}

/// Resonant single-excitation pair: atom 1 in the ground orbital (spin ↑)
/// with one Ω↑ photon, closed system, every other field frozen. Nuclear spin
/// 1 is ↓ so the conditional field energies of the two states coincide.
pub fn jc_submodel(g: f64) -> ExperimentConfig {
    use crate::hilbert::{slot, Atom, Orbital, Spin};
    let mut cfg = formation_experiment();
    cfg.name = "jc".into();
    for m in cfg.modes.iter_mut() {
        m.gamma_out = 0.0;
        m.mu = 0.0;
        m.cutoff = if m.label == Mode::AtomUp { 1 } else { 0 };
    }
    cfg.couplings = Couplings { g_atom_up: g, g_atom_down: 0.0, g_mol_up: 0.0, g_mol_down: 0.0, g_spin: 0.0, g_en: 0.0 };
    cfg.tunnelling = Tunnelling { zeta2: 0.0, zeta1: 0.0, zeta0: 0.0 };
    cfg.initial = state([0, 0, 1, 0, 0, 0], &[slot(Atom::First, Orbital::Ground, Spin::Up)], true, [false, true]);
    cfg.dt = 1e-3 / g;
    cfg.horizon = std::f64::consts::PI / g;
    cfg.observables = vec![Observable { name: "initial".into(), configurations: vec![Configuration::of(&cfg.initial)] }];
    cfg
}

/// One atom with modes Ω↑ and Ωˢ (cutoff 2 each), one leak/influx channel
/// pair on Ω↑ (γ = 10⁷, μ = 0.5), formation couplings.
pub fn oracle_submodel() -> ExperimentConfig {
    use crate::hilbert::{slot, Atom, Orbital, Spin};
    let mut cfg = formation_experiment();
    cfg.name = "oracle".into();
    for m in cfg.modes.iter_mut() {
        let keep = matches!(m.label, Mode::AtomUp | Mode::ElectronSpin);
        m.cutoff = if keep { 2 } else { 0 };
        m.gamma_out = if m.label == Mode::AtomUp { 1e7 } else { 0.0 };
        m.mu = if m.label == Mode::AtomUp { 0.5 } else { 0.0 };
    }
    cfg.couplings.g_atom_down = 0.0;
    cfg.couplings.g_mol_up = 0.0;
    cfg.couplings.g_mol_down = 0.0;
    cfg.couplings.g_en = 0.0;
    cfg.tunnelling = Tunnelling { zeta2: 0.0, zeta1: 0.0, zeta0: 0.0 };
    cfg.initial = state([0, 0, 1, 0, 1, 0], &[slot(Atom::First, Orbital::Ground, Spin::Up)], true, [false, true]);
    cfg.dt = 1e-11;
    cfg.horizon = 1e-6;
    cfg.observables = vec![Observable { name: "initial".into(), configurations: vec![Configuration::of(&cfg.initial)] }];
    cfg
}

/// Evenly spaced grid `from, from + step, …` up to `to` (inclusive within
/// rounding), each value rounded to 12 significant digits.
pub fn mu_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, ExperimentError> {
    if !(step > 0.0) || !from.is_finite() || !to.is_finite() || to < from {
        return Err(invalid(format!("bad grid from {from} to {to} step {step}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| format_sig(from + i as f64 * step).parse().expect("formatted float")).collect())
}

impl ExperimentConfig {
    pub fn params(&self) -> HamiltonianParams {
        HamiltonianParams {
            hbar: self.hbar,
            frequencies: self.modes.map(|m| m.frequency),
            couplings: self.couplings,
            tunnelling: self.tunnelling,
        }
    }

    pub fn steps(&self) -> usize {
        if self.horizon <= 0.0 {
            0
        } else {
            (self.horizon / self.dt).round() as usize
        }
    }

    pub fn default_observables(&self) -> Vec<Observable> {
        let [f, fp] = final_configurations();
        vec![
            Observable { name: "initial".into(), configurations: vec![Configuration::of(&self.initial)] },
            Observable { name: "final".into(), configurations: vec![f] },
            Observable { name: "final_prime".into(), configurations: vec![fp] },
            Observable { name: "H2".into(), configurations: h2_projector() },
        ]
    }

    pub fn observables(&self) -> Vec<Observable> {
        if self.observables.is_empty() {
            self.default_observables()
        } else {
            self.observables.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        for (i, m) in self.modes.iter().enumerate() {
            if m.label.index() != i {
                return Err(invalid(format!("mode table entry {i} is {}, expected {}", m.label, Mode::ALL[i])));
            }
            m.validate().map_err(invalid)?;
        }
        self.params().validate().map_err(invalid)?;
        self.initial.check_cutoffs(&crate::hilbert::Cutoffs::from_modes(&self.modes)).map_err(invalid)?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(invalid(format!("horizon must be non-negative, got {}", self.horizon)));
        }
        if self.sample_stride == 0 {
            return Err(invalid("sample_stride must be at least 1"));
        }
        let mut names = std::collections::BTreeSet::new();
        for o in &self.observables {
            if o.name.is_empty() || o.name.contains(',') || !names.insert(o.name.as_str()) || o.name == "t" || o.name == "trace" {
                return Err(invalid(format!("observable name `{}` is empty, reserved, duplicated or contains a comma", o.name)));
            }
        }
        if let Some(s) = &self.sweep {
            if !matches!(s.mode, Mode::ElectronSpin | Mode::NuclearSpin) {
                return Err(invalid(format!("sweep mode must be Omega_s or Omega_n, got {}", s.mode)));
            }
            if !(s.t_eval > 0.0) || s.t_eval > self.horizon {
                return Err(invalid(format!("evaluation time {} must lie in (0, horizon = {}]", s.t_eval, self.horizon)));
            }
            check_mu_values(&s.values)?;
        }
        Ok(())
    }

    /// SHA-256 over the physical parameters: ħ, mode table, couplings,
    /// tunnelling and initial state.
    pub fn physical_hash(&self) -> String {
        let physical = serde_json::json!({
            "hbar": self.hbar,
            "modes": self.modes,
            "couplings": self.couplings,
            "tunnelling": self.tunnelling,
            "initial": self.initial,
        });
        let digest = Sha256::digest(physical.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig, ExperimentError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(invalid)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn check_mu_values(values: &[f64]) -> Result<(), ExperimentError> {
    if values.is_empty() {
        return Err(invalid("sweep needs at least one μ value"));
    }
    for &v in values {
        if !(0.0..1.0).contains(&v) {
            return Err(invalid(format!("μ = {v} outside [0, 1)")));
        }
    }
    Ok(())
}

/// Reachable basis, Hamiltonian and channels of a configuration.
#[derive(Debug, Clone)]
pub struct Model {
    pub basis: Basis,
    pub hamiltonian: SparseOperator,
    pub channels: Vec<Channel>,
}

pub fn build_model(cfg: &ExperimentConfig) -> Result<Model, ExperimentError> {
    cfg.validate()?;
    let params = cfg.params();
    let generators = transition_generators(&params, &cfg.modes);
    let refs: Vec<&dyn StateMap> = generators.iter().map(|m| m as &dyn StateMap).collect();
    let basis = crate::hilbert::enumerate_reachable(cfg.initial, &refs, cfg.modes).map_err(invalid)?;
    let hamiltonian = build_total(&basis, &params).map_err(invalid)?;
    let channels = Channel::all(&basis).map_err(invalid)?;
    Ok(Model { basis, hamiltonian, channels })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub config_hash: String,
    pub basis_dim: usize,
    pub blocks: usize,
    pub steps: usize,
    pub dt: f64,
    pub horizon: f64,
    pub endpoints: BTreeMap<String, f64>,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
}

/// Evolves the configured initial state and samples the observables.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let start = Instant::now();
    let model = build_model(cfg)?;
    let observables: Vec<(String, Vec<usize>)> = cfg
        .observables()
        .iter()
        .map(|o| resolve(&model.basis, o).map(|idx| (o.name.clone(), idx)))
        .collect::<Result<_, _>>()?;
    let engine = SplitStep::new(&model.hamiltonian, &model.channels, cfg.dt, cfg.hbar)?.with_renormalization(cfg.renormalize);
    let initial = model.basis.index_of(&cfg.initial).expect("initial state is in its own reachable basis");
    let schedule = Schedule::new(cfg.dt, cfg.horizon, cfg.sample_stride)?;
    let (trajectory, _) = integrate(&engine, engine.pure_state(initial), &observables, schedule)?;
    let endpoints = trajectory.names.iter().filter_map(|n| trajectory.last(n).map(|v| (n.clone(), v))).collect();
    let summary = RunSummary {
        name: cfg.name.clone(),
        config_hash: cfg.physical_hash(),
        basis_dim: model.basis.len(),
        blocks: engine.propagator().partition().len(),
        steps: trajectory.steps,
        dt: cfg.dt,
        horizon: cfg.horizon,
        endpoints,
        max_trace_drift: trajectory.max_trace_drift(),
        min_eigenvalue: trajectory.min_probe().unwrap_or(0.0),
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { trajectory, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub p_h2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mode: Mode,
    pub t_eval: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn value_at(&self, mu: f64) -> Option<f64> {
        self.rows.iter().find(|r| (r.mu - mu).abs() < 1e-12).map(|r| r.p_h2)
    }

    /// `mu,P_H2` with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu,P_H2\n");
        for r in &self.rows {
            out.push_str(&format!("{},{}\n", format_sig(r.mu), format_sig(r.p_h2)));
        }
        out
    }

    /// Largest drop between consecutive rows (0 when non-decreasing).
    pub fn worst_decrease(&self) -> f64 {
        self.rows.windows(2).map(|w| (w[0].p_h2 - w[1].p_h2).max(0.0)).fold(0.0, f64::max)
    }
}

/// One run per μ value of `mode`, each evaluated at `t_eval`. Values are
/// sorted ascending; duplicates are rejected. Runs execute on up to
/// `workers` threads (all available when `None`); the result does not
/// depend on the thread count.
pub fn mu_sweep(
    base: &ExperimentConfig,
    mode: Mode,
    values: &[f64],
    t_eval: f64,
    workers: Option<usize>,
) -> Result<SweepResult, ExperimentError> {
    check_mu_values(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("duplicate μ values in sweep"));
    }
    if !matches!(mode, Mode::ElectronSpin | Mode::NuclearSpin) {
        return Err(invalid(format!("sweep mode must be Omega_s or Omega_n, got {mode}")));
    }
    if !(t_eval > 0.0) || !t_eval.is_finite() {
        return Err(invalid(format!("evaluation time must be positive, got {t_eval}")));
    }
    let configs: Vec<ExperimentConfig> = sorted
        .iter()
        .map(|&mu| {
            let mut c = base.clone();
            c.modes[mode.index()].mu = mu;
            c.horizon = t_eval;
            c.sweep = None;
            c.sample_stride = c.steps().max(1);
            c.observables = vec![Observable { name: "H2".into(), configurations: h2_projector() }];
            c
        })
        .collect();
    let job = || -> Result<Vec<f64>, ExperimentError> {
        configs
            .par_iter()
            .map(|c| run(c).map(|out| out.trajectory.last("H2").unwrap_or(0.0)))
            .collect()
    };
    let values = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(invalid)?
            .install(job)?,
        None => job()?,
    };
    Ok(SweepResult {
        mode,
        t_eval,
        rows: sorted.into_iter().zip(values).map(|(mu, p_h2)| SweepRow { mu, p_h2 }).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub name: String,
    pub config_hash: String,
    pub mode: Mode,
    pub t_eval: f64,
    pub dt: f64,
    pub rows: Vec<SweepRow>,
    pub runtime_seconds: f64,
}

fn write(path: &Path, contents: &str) -> Result<PathBuf, ExperimentError> {
    fs::write(path, contents).map_err(|e| ExperimentError::io(path, e))?;
    Ok(path.to_path_buf())
}

fn ensure_dir(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))
}

/// Writes `<stem>.csv`, `<stem>.json` and `<stem>.svg` (as requested) into
/// the output directory.
pub fn emit_trajectory(
    traj: &Trajectory,
    summary: &RunSummary,
    output: &OutputSpec,
    stem: &str,
) -> Result<Vec<PathBuf>, ExperimentError> {
    ensure_dir(&output.directory)?;
    let mut written = Vec::new();
    for f in &output.formats {
        let path = output.directory.join(format!("{stem}.{}", extension(*f)));
        let body = match f {
            Format::Csv => traj.to_csv(),
            Format::Json => serde_json::to_string_pretty(summary).expect("summary serializes") + "\n",
            Format::Svg => LineChart {
                title: format!("{}: configuration probabilities", summary.name),
                x_label: "t (s)".into(),
                y_label: "probability".into(),
                series: traj
                    .names
                    .iter()
                    .zip(&traj.series)
                    .map(|(n, s)| Series { name: n.clone(), points: traj.times.iter().copied().zip(s.iter().copied()).collect() })
                    .collect(),
            }
            .render(),
        };
        written.push(write(&path, &body)?);
    }
    Ok(written)
}

pub fn emit_sweep(
    sweep: &SweepResult,
    summary: &SweepSummary,
    output: &OutputSpec,
    stem: &str,
) -> Result<Vec<PathBuf>, ExperimentError> {
    ensure_dir(&output.directory)?;
    let mut written = Vec::new();
    for f in &output.formats {
        let path = output.directory.join(format!("{stem}.{}", extension(*f)));
        let body = match f {
            Format::Csv => sweep.to_csv(),
            Format::Json => serde_json::to_string_pretty(summary).expect("summary serializes") + "\n",
            Format::Svg => LineChart {
                title: format!("P(H2) at t = {} s", format_sig(sweep.t_eval)),
                x_label: format!("mu of {}", sweep.mode.label()),
                y_label: "P(H2)".into(),
                series: vec![Series { name: "H2".into(), points: sweep.rows.iter().map(|r| (r.mu, r.p_h2)).collect() }],
            }
            .render(),
        };
        written.push(write(&path, &body)?);
    }
    Ok(written)
}

fn extension(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Svg => "svg",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formation_defaults() {
        let cfg = formation_experiment();
        cfg.validate().unwrap();
        assert_eq!(cfg.steps(), 12_000_000);
        assert_eq!(cfg.modes.map(|m| m.mu), [0.0, 0.0, 0.5, 0.5, 0.5, 0.5]);
        assert!(cfg.modes.iter().all(|m| m.gamma_out == 1e7));
        assert_eq!(cfg.initial.to_string(), "|001110;00010001;111>");
        let names: Vec<String> = cfg.observables().into_iter().map(|o| o.name).collect();
        assert_eq!(names, ["initial", "final", "final_prime", "H2"]);
    }

    #[test]
    fn grid_matches_table() {
        let g = table_mu_values();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.15);
        assert_eq!(g[10], 0.5);
        assert!(mu_grid(0.5, 0.0, 0.1).is_err());
        assert_eq!(mu_grid(0.0, 0.0, 0.1).unwrap(), vec![0.0]);
    }

    #[test]
    fn config_round_trip_and_hash() {
        let cfg = formation_experiment();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let mut other = cfg.clone();
        other.dt = 2e-10;
        other.name = "x".into();
        assert_eq!(other.physical_hash(), cfg.physical_hash());
        other.couplings.g_en = 2e6;
        assert_ne!(other.physical_hash(), cfg.physical_hash());
        assert_eq!(cfg.physical_hash().len(), 64);
    }

    #[test]
    fn validation_errors() {
        let mut cfg = formation_experiment();
        cfg.dt = 0.0;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 1);
        let mut cfg = formation_experiment();
        cfg.initial.photons[0] = 2;
        assert!(cfg.validate().is_err());
        let mut cfg = sweep_experiment(Mode::ElectronSpin);
        cfg.sweep.as_mut().unwrap().t_eval = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = sweep_experiment(Mode::ElectronSpin);
        cfg.sweep.as_mut().unwrap().mode = Mode::AtomUp;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_json("{}").is_err());
    }

    #[test]
    fn zero_horizon_run() {
        let mut cfg = formation_experiment();
        cfg.horizon = 0.0;
        let out = run(&cfg).unwrap();
        assert_eq!(out.trajectory.times, vec![0.0]);
        assert!((out.trajectory.last("initial").unwrap() - 1.0).abs() < 1e-12);
        assert!(out.trajectory.last("H2").unwrap().abs() < 1e-12);
        assert_eq!(out.summary.basis_dim, 6804);
    }

    #[test]
    fn submodels_are_small() {
        assert_eq!(build_model(&jc_submodel(1e8)).unwrap().basis.len(), 2);
        let m = build_model(&oracle_submodel()).unwrap();
        assert!(m.basis.len() <= 40, "{}", m.basis.len());
    }
}
