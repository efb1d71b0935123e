//! Command-line driver for the feedmodel pipeline.
//!
//! Every command reads a [`RunConfig`], fans per-user work out over a
//! thread pool of `jobs` workers, and writes its files from a single
//! collector in sorted key order, so output bytes do not depend on `jobs`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use commands::{
    cmd_ablate, cmd_eval, cmd_predict, cmd_stats, cmd_synth, cmd_train, AblationSummary, EvalSummary, MaskRow,
    StatsSummary, SynthSummary, TraceRequest, TrainSummary,
};
pub use config::{GlobalOpts, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("no valid users: {0}")]
    NoValidUsers(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoValidUsers(_) => 3,
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }

    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

#[derive(Debug, Parser)]
#[command(name = "feedmodel", version, about = "Per-user interaction prediction for ranked feeds")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic post log, event log, and word-vector table.
    Synth,
    /// Train one model bundle per valid user.
    Train,
    /// Score the test partitions with the saved bundles.
    Eval {
        /// Write a prediction trace for USER:TYPE (repeatable).
        #[arg(long, value_name = "USER:TYPE")]
        trace: Vec<TraceRequest>,
    },
    /// Retrain over all 64 feature masks and compare AUCs.
    Ablate,
    /// Distribution tables by rank, score, age, and readability.
    Stats,
    /// Per-class probabilities for every post in the post log.
    Predict {
        #[arg(long, value_name = "PATH")]
        bundle: PathBuf,
        /// Observation time (unix seconds); defaults to each post's creation time.
        #[arg(long, value_name = "T")]
        observed_at: Option<i64>,
    },
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.opts)?;
    match &cli.command {
        Command::Synth => println!("{}", cmd_synth(&cfg)?),
        Command::Train => println!("{}", cmd_train(&cfg)?),
        Command::Eval { trace } => println!("{}", cmd_eval(&cfg, trace)?),
        Command::Ablate => println!("{}", cmd_ablate(&cfg)?),
        Command::Stats => println!("{}", cmd_stats(&cfg)?),
        Command::Predict { bundle, observed_at } => {
            let path = cmd_predict(&cfg, bundle, *observed_at)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

/// Parses arguments, runs, and maps errors to exit codes.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("feedmodel: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
