use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use h2sim::evolve::format_sig;
use h2sim::experiments::{
    build_model, emit_sweep, emit_trajectory, formation_experiment, mu_grid, mu_sweep, run, sweep_experiment,
    ExperimentConfig, ExperimentError, SweepSummary,
};
use h2sim::hilbert::{Mode, ModeSpec};
use h2sim::lindblad::gibbs_stationarity_residual;

#[derive(Parser)]
#[command(name = "h2sim", version, about = "Open cavity-QED simulation of H2 association and dissociation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepMode {
    OmegaS,
    OmegaN,
}

impl SweepMode {
    fn mode(self) -> Mode {
        match self {
            SweepMode::OmegaS => Mode::ElectronSpin,
            SweepMode::OmegaN => Mode::NuclearSpin,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpWhat {
    Basis,
    Hamiltonian,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one trajectory and write CSV, JSON and SVG outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Step override, s.
        #[arg(long)]
        dt: Option<f64>,
        /// Horizon override, s.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Tabulate P(H2) at the evaluation time over a grid of influx ratios.
    Sweep {
        #[arg(long, value_enum)]
        mode: SweepMode,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 0.5)]
        to: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Evaluation time, s.
        #[arg(long, default_value_t = 0.0012)]
        t_eval: f64,
        /// Base configuration (defaults to the formation scenario).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        /// Concurrent sweep points (defaults to all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Stationarity residual of the truncated Gibbs state of one free mode.
    GibbsCheck {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        cutoff: u8,
        #[arg(long, default_value_t = 1e7)]
        gamma: f64,
        #[arg(long, default_value_t = 1e9)]
        frequency: f64,
    },
    /// Print the reachable basis (JSON) or the Hamiltonian (CSV triplets).
    Dump {
        #[arg(long, value_enum)]
        what: DumpWhat,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_or_default(path: Option<&PathBuf>, default: ExperimentConfig) -> Result<ExperimentConfig, ExperimentError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(default),
    }
}

fn execute(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Run { config, out, dt, horizon } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dt) = dt {
                cfg.dt = dt;
            }
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            if let Some(dir) = out {
                cfg.output.directory = dir;
            }
            cfg.validate()?;
            let result = run(&cfg)?;
            let files = emit_trajectory(&result.trajectory, &result.summary, &cfg.output, &cfg.name)?;
            let s = &result.summary;
            println!(
                "{}: {} states, {} blocks, {} steps in {:.2} s, max trace drift {:.3e}",
                s.name, s.basis_dim, s.blocks, s.steps, s.runtime_seconds, s.max_trace_drift
            );
            for (name, value) in &s.endpoints {
                println!("  {name} = {}", format_sig(*value));
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep { mode, from, to, step, t_eval, config, out, dt, workers } => {
            let start = Instant::now();
            let mut base = load_or_default(config.as_ref(), sweep_experiment(mode.mode()))?;
            if let Some(dt) = dt {
                base.dt = dt;
            }
            if let Some(dir) = out {
                base.output.directory = dir;
            }
            base.horizon = t_eval;
            base.sweep = None;
            base.validate()?;
            let values = mu_grid(from, to, step)?;
            let sweep = mu_sweep(&base, mode.mode(), &values, t_eval, workers)?;
            let summary = SweepSummary {
                name: format!("sweep_{}", mode.mode().label()),
                config_hash: base.physical_hash(),
                mode: mode.mode(),
                t_eval,
                dt: base.dt,
                rows: sweep.rows.clone(),
                runtime_seconds: start.elapsed().as_secs_f64(),
            };
            let files = emit_sweep(&sweep, &summary, &base.output, &summary.name)?;
            print!("{}", sweep.to_csv());
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::GibbsCheck { mu, cutoff, gamma, frequency } => {
            let spec = ModeSpec { label: Mode::ElectronSpin, frequency, gamma_out: gamma, mu, cutoff };
            spec.validate().map_err(|e| ExperimentError::Validation(e.to_string()))?;
            let residual = gibbs_stationarity_residual(&spec, 1.0).map_err(|e| ExperimentError::Validation(e.to_string()))?;
            let bound = gamma * mu.powi(i32::from(cutoff));
            println!("residual {} bound {} {}", format_sig(residual), format_sig(bound), if residual <= bound { "ok" } else { "exceeded" });
        }
        Command::Dump { what, config } => {
            let cfg = load_or_default(config.as_ref(), formation_experiment())?;
            let model = build_model(&cfg)?;
            match what {
                DumpWhat::Basis => {
                    println!("{}", serde_json::to_string_pretty(&model.basis.to_json()).expect("basis serializes"))
                }
                DumpWhat::Hamiltonian => print!("{}", model.hamiltonian.to_csv()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
