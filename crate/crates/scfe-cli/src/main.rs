//! `scfe`: sparse, plausible, actionable counterfactual explanations.
//!
//! Five subcommands driven by one key=value config file: `train` fits and
//! saves a classifier, `explain` produces a single counterfactual, and
//! `benchmark`, `robustness`, and `demo` write the experiment CSVs. Exit
//! codes: 0 success, 2 configuration or input errors, 3 numeric failures
//! during optimization.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scfe_core::ScfeError;

use config::{CliConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "scfe",
    version,
    about = "Sparse, plausible, actionable counterfactual explanations",
    after_help = config::key_help()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier on the configured dataset and save it
    Train(RunArgs),
    /// Generate one counterfactual and print it as CSV
    Explain(ExplainArgs),
    /// Explain every eligible test point; write instance and report CSVs
    Benchmark(RunArgs),
    /// Re-explain under seeded input perturbations; write the median shifts
    Robustness(RunArgs),
    /// Trace plain vs KDE-regularized trajectories on the 2-D blob world
    Demo(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// KEY=VALUE config file; see the key list under --help
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Master seed; every random stream derives from it
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker count: 1 sequential, 0 all cores
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Artifact directory; falls back to SCFE_OUT_DIR, then "."
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Override one config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Test row to explain (default 0)
    #[arg(long, value_name = "N", conflicts_with = "input_row")]
    index: Option<usize>,
    /// Raw feature values, comma separated, explained instead of a test row
    #[arg(long, value_name = "V0,V1,...")]
    input_row: Option<String>,
    /// Also write the printed CSV to this file
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn resolve(args: &RunArgs) -> Result<CliConfig, ScfeError> {
    let overrides = Overrides {
        seed: args.seed,
        jobs: args.jobs,
        out_dir: args.out_dir.clone(),
        set: args.set.clone(),
    };
    config::load(&args.config, std::env::var("SCFE_OUT_DIR").ok(), &overrides)
}

fn dispatch(cli: Cli) -> Result<(), ScfeError> {
    match cli.command {
        Command::Train(args) => commands::cmd_train(&resolve(&args)?),
        Command::Explain(args) => {
            let cfg = resolve(&args.run)?;
            commands::cmd_explain(&cfg, args.index, args.input_row.as_deref(), args.out.as_deref())
        }
        Command::Benchmark(args) => commands::cmd_benchmark(&resolve(&args)?),
        Command::Robustness(args) => commands::cmd_robustness(&resolve(&args)?),
        Command::Demo(args) => commands::cmd_demo(&resolve(&args)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                ScfeError::Numeric(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
