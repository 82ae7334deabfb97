use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use omnihex::harness::{run_experiment, run_sweep, write_csv, Config, ControllerKind, ExperimentSpec};
use omnihex::model::Group;

#[derive(Parser)]
#[command(name = "omnihex", about = "Closed-loop tiltrotor hexacopter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its time series.
    Run {
        #[arg(long)]
        group: Group,
        #[arg(long)]
        controller: ControllerKind,
        /// Trajectory period (s); defaults to the config value.
        #[arg(long)]
        period: Option<f64>,
        /// Run length (s); defaults to one period.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the configured matrix and write summary.csv plus per-run files.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn load(path: Option<&PathBuf>) -> omnihex::Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn real_main() -> omnihex::Result<bool> {
    match Cli::parse().command {
        Command::Run { group, controller, period, duration, config, out, seed } => {
            let cfg = load(config.as_ref())?;
            let period = period.unwrap_or(cfg.trajectory.period);
            let spec = ExperimentSpec {
                seed: seed.unwrap_or(cfg.run.seed),
                ..ExperimentSpec::new(group, controller, period, duration.unwrap_or(period))
            };
            let outcome = run_experiment(&spec, &cfg)?;
            let file = std::fs::File::create(&out)?;
            write_csv(std::io::BufWriter::new(file), &outcome, cfg.run.csv_timing)?;
            let m = &outcome.metrics;
            println!(
                "{}: position RMSE {:.4} m, attitude RMSE {:.4}, mean solve {:.3} ms, backup steps {}",
                spec.label(),
                m.position_rmse,
                m.attitude_rmse,
                m.mean_solve_ms,
                m.backup_steps
            );
            if let Some(reason) = &outcome.failure {
                eprintln!("run failed: {reason}");
            }
            Ok(!outcome.failed())
        }
        Command::Sweep { config, out_dir } => {
            let cfg = load(config.as_ref())?;
            let out = run_sweep(&cfg, Some(&out_dir))?;
            for r in &out.results {
                if let Some(e) = &r.error {
                    eprintln!("{} {} T={}: {e}", r.cell.group, r.cell.controller, r.cell.period);
                }
            }
            println!("wrote {} rows to {}", out.summary.len(), out_dir.join("summary.csv").display());
            Ok(!out.any_failed())
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
