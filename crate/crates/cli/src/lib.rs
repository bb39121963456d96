//! Command-line front end for the `popleak` toolkit.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 experiment
//! failure (for example a convergence estimate that never settles).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

mod commands;
pub mod config;
mod output;

pub use config::{ExperimentConfig, Preset, StrategyArg};

#[derive(Debug, Parser)]
#[command(name = "popleak", version, about = "Leak-robust detection in population protocols")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a protocol file and print its species, reactions and catalysts.
    Validate {
        file: PathBuf,
    },
    /// Print the detection protocol with `--s` alert levels in protocol-file syntax.
    Generate {
        #[arg(long, default_value_t = 14)]
        s: u32,
        /// Emit the truncated unbounded-level variant instead.
        #[arg(long)]
        ideal: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stationary level probabilities.
    Steady(ExperimentArgs),
    /// Simulate trajectories.
    Simulate(SimulateArgs),
    /// Estimate convergence time to the stationary profile.
    Mix(MixArgs),
    /// Potential-decay experiment without the detected species.
    Clean(CleanArgs),
    /// Remove (and optionally restore) the detected species mid-run.
    Stabilize(StabilizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by the experiment commands. Unset values come from the
/// preset, then from per-command defaults.
#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub k: Option<u64>,
    /// Alert levels; `steady` accepts a comma-separated sweep.
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<u32>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// none, fp, fn or custom:<file>
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long, env = "POPLEAK_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Horizon in parallel time (interactions / n).
    #[arg(long)]
    pub time: Option<f64>,
    /// Snapshot interval in parallel time.
    #[arg(long)]
    pub record_every: Option<f64>,
    /// Output file, or directory when the command emits several conditions.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    /// Track individual molecules instead of species counts.
    #[arg(long)]
    pub molecules: bool,
    /// Include every interaction in JSON output.
    #[arg(long)]
    pub events: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MixArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    #[arg(long, default_value_t = 0.02)]
    pub epsilon: f64,
    /// Population sizes to sweep; defaults to `--n`.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CleanInit {
    /// Every molecule at the first alert level.
    X1,
    /// Every molecule at the last alert level.
    Top,
}

#[derive(Debug, Clone, Args)]
pub struct CleanArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    #[arg(long, value_enum, default_value_t = CleanInit::X1)]
    pub init: CleanInit,
}

#[derive(Debug, Clone, Args)]
pub struct StabilizeArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    /// Parallel time at which every detected molecule is removed.
    #[arg(long, default_value_t = 100.0)]
    pub remove_at: f64,
    /// Parallel time at which `--k` detected molecules are restored.
    #[arg(long)]
    pub readd_at: Option<f64>,
    /// Parallel time allowed for the output to follow each change.
    #[arg(long, default_value_t = 40.0)]
    pub window: f64,
    #[arg(long, default_value_t = 0.05)]
    pub low: f64,
    #[arg(long, default_value_t = 0.62)]
    pub high: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {err}")]
    Parse {
        path: String,
        err: popleak::ParseError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Experiment(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Parse { .. } => 1,
            CliError::Io { .. } => 2,
            CliError::Experiment(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Runs a parsed command, writing human-readable output to `stdout` and
/// warnings to `stderr`.
pub fn run(
    cli: Cli,
    stdout: &mut dyn std::io::Write,
    stderr: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { file } => commands::validate(&file, stdout, stderr),
        Command::Generate { s, ideal, out } => commands::generate(s, ideal, out.as_deref(), stdout),
        Command::Steady(args) => commands::steady(&args, stdout),
        Command::Simulate(args) => commands::simulate(&args, stdout),
        Command::Mix(args) => commands::mix(&args, stdout),
        Command::Clean(args) => commands::clean(&args, stdout),
        Command::Stabilize(args) => commands::stabilize(&args, stdout),
    }
}
