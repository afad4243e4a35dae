use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use opframe::experiment::{run_config_file, ConfigOrRunError, Overrides, RunOptions};

/// Run a configured experiment and write its CSV data and verdict.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 for
/// usage or configuration errors.
#[derive(Parser, Debug)]
#[command(name = "opframe", version)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials; overrides the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Number of steps; overrides the config.
    #[arg(long)]
    steps: Option<usize>,
    /// Store term vectors in paths.jsonl.
    #[arg(long)]
    full_paths: bool,
    /// Worker threads for trial batches. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let overrides = Overrides {
        seed: cli.seed,
        n_trials: cli.trials,
        n_steps: cli.steps,
    };
    let opts = RunOptions {
        out_dir: cli.out,
        full_paths: cli.full_paths,
        workers: cli.workers,
        base_dir: None,
    };
    match run_config_file(&cli.config, &overrides, &opts) {
        Ok(verdict) => {
            for c in &verdict.checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                println!("{status}  {}  measured={:e} bound={:e} margin={:e}", c.name, c.measured, c.bound, c.margin);
            }
            println!("{}: {}", verdict.experiment.name(), if verdict.pass { "pass" } else { "fail" });
            ExitCode::from(if verdict.pass { 0 } else { 1 })
        }
        Err(ConfigOrRunError::Config(problems)) => {
            for p in problems {
                eprintln!("config error: {p}");
            }
            ExitCode::from(2)
        }
        Err(ConfigOrRunError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
