use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qbc_core::exec::with_workers;
use qbc_core::experiment::{run, ExperimentConfig, RunOptions};
use qbc_core::Execution;

/// Runs one qbc experiment from a JSON config and writes CSV/JSON results.
#[derive(Debug, Parser)]
#[command(name = "qbc", version)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` or `results`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random-state property checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Run scans on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

fn workers_from_env() -> Result<Option<usize>, String> {
    match std::env::var("QBC_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("QBC_WORKERS must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match ExperimentConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qbc: {e}");
            return ExitCode::from(2);
        }
    };
    let workers = match workers_from_env() {
        Ok(w) => w,
        Err(e) => {
            eprintln!("qbc: {e}");
            return ExitCode::from(2);
        }
    };
    let out = args.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let opts = RunOptions {
        seed: args.seed,
        tol_scale: args.tol_scale,
        exec: if args.sequential { Execution::Sequential } else { Execution::Parallel },
    };
    match with_workers(workers, || run(&cfg, &out, &opts)) {
        Ok(outcome) => {
            println!("{}", outcome.csv.display());
            println!("{}", outcome.json.display());
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("qbc: {} reported failed checks", cfg.command.name());
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("qbc: {e}");
            ExitCode::FAILURE
        }
    }
}
