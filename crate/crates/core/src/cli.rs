//! Command-line interface: `fit`, `prioritize`, `evaluate`, `stats`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiment::{cmd_evaluate, cmd_fit, cmd_prioritize, cmd_stats, ExperimentConfig, Overrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dnn-tip", version, about = "Test input prioritization for deep neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit neuron statistics and surprise models on the training traces.
    Fit(CommonArgs),
    /// Rank the test inputs with every configured approach.
    Prioritize(CommonArgs),
    /// Compute APFDs, active-learning selections, and pairwise statistics.
    Evaluate(CommonArgs),
    /// Recompute pairwise statistics from an existing APFD table.
    Stats(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding `out_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Restrict the experiment to the run(s) with this seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for surprise scoring.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_DATA
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (Command::Fit(args) | Command::Prioritize(args) | Command::Evaluate(args) | Command::Stats(args)) =
        &cli.command;
    let overrides = Overrides {
        out_dir: args.out.clone(),
        seed: args.seed,
        threads: args.threads,
    };
    let result = ExperimentConfig::load(&args.config, &overrides).and_then(|cfg| match cli.command {
        Command::Fit(_) => cmd_fit(&cfg).map(|files| log::info!("wrote {} model file(s)", files.len())),
        Command::Prioritize(_) => cmd_prioritize(&cfg).map(|t| log::info!("{} ranking(s) written", t.len())),
        Command::Evaluate(_) => cmd_evaluate(&cfg).map(|rows| log::info!("{} APFD row(s) written", rows.len())),
        Command::Stats(_) => cmd_stats(&cfg).map(|s| log::info!("{} comparison(s) written", s.len())),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
