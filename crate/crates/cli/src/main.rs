use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pbvqo::hamiltonians::{HardwareModel, ProblemGraph};
use pbvqo::simulator::EvolutionConfig;
use pbvqo::workflows::{PbvqoProblem, DEFAULT_COUPLING_BOUND, DEFAULT_DURATION, DEFAULT_OMEGA};
use pbvqo_cli::config::ExperimentConfig;
use pbvqo_cli::trace::{export_pulse_trace, write_trace};
use pbvqo_cli::{runner, CliError};

#[derive(Parser)]
#[command(name = "pbvqo", version, about = "Pulse-based variational optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the parallel ensemble.
        #[arg(long)]
        workers: Option<usize>,
        /// Fixed integration step; overrides `problem.divisions` and `problem.dt`.
        #[arg(long, allow_hyphen_values = true)]
        dt_override: Option<f64>,
    },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
    /// Write t, P, F and phi_ext for a parameter vector `[A..., phi...]` as CSV.
    ExportPulse {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        params: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_DURATION)]
        duration: f64,
        #[arg(long, default_value_t = DEFAULT_COUPLING_BOUND)]
        coupling_bound: f64,
        #[arg(long, default_value_t = 501)]
        samples: usize,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute summary tables of an output directory from its run records.
    Report {
        dir: PathBuf,
        /// Compare against the tables on disk instead of rewriting them.
        #[arg(long)]
        check: bool,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::from_path(path)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            workers,
            dt_override,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = Some(o);
            }
            if let Some(dt) = dt_override {
                cfg.problem.dt = Some(dt);
            }
            if let Some(w) = workers {
                if w == 0 {
                    return Err(CliError::Validation("--workers: must be at least 1".to_owned()));
                }
                if !pbvqo::parallel::configure_workers(w) {
                    eprintln!("warning: --workers {w} ignored");
                }
            }
            let dir = runner::run_experiment(&cfg)?;
            println!("{}", dir.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!("{}: ok ({}, output {})", config.display(), cfg.kind.as_str(), cfg.resolved_out_dir().display());
            Ok(())
        }
        Command::ExportPulse {
            params,
            duration,
            coupling_bound,
            samples,
            out,
        } => {
            let bad = |e: pbvqo::Error| CliError::Validation(e.to_string());
            if params.is_empty() || !params.len().is_multiple_of(2) {
                return Err(CliError::Validation(format!(
                    "--params: expected 2n values [A..., phi...], got {}",
                    params.len()
                )));
            }
            let problem = PbvqoProblem::new(
                HardwareModel::uniform(2, DEFAULT_OMEGA, coupling_bound).map_err(bad)?,
                ProblemGraph::ring(2).map_err(bad)?,
                params.len() / 2,
                duration,
                EvolutionConfig::default(),
            )
            .map_err(bad)?;
            let rows = export_pulse_trace(&params, &problem, samples)?;
            match out {
                Some(path) => write_trace(&path, &rows),
                None => {
                    println!("t,P,F,phi_ext");
                    for r in rows {
                        println!("{},{},{},{}", r.t, r.p, r.f, r.phi_ext);
                    }
                    Ok(())
                }
            }
        }
        Command::Report { dir, check } => {
            let tables = runner::report(&dir, check)?;
            let verb = if check { "up to date" } else { "rewritten" };
            println!("{}: {verb}", tables.join(", "));
            Ok(())
        }
    }
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
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
