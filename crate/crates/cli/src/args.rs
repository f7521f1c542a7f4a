use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "edgecache", version, about = "Trace-driven edge cache simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Slot a timestamped request log into a trace file.
    Ingest(IngestArgs),
    /// Generate a synthetic non-stationary trace.
    Synth(SynthArgs),
    /// Run one policy over a trace and export the result.
    Run(RunArgs),
    /// Run several policies on the same trace and export a comparison.
    Compare(CompareArgs),
    /// Print the summary of a previously exported report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Request log, one event per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Output trace file.
    #[arg(long)]
    pub out: PathBuf,
    /// Slot length in seconds.
    #[arg(long, default_value_t = 86_400)]
    pub slot_duration: u64,
    /// Timestamp of the start of slot 0 [default: earliest event].
    #[arg(long)]
    pub origin: Option<i64>,
    /// Zero-based column of the file id.
    #[arg(long, default_value_t = 1)]
    pub file_column: usize,
    /// Zero-based column of the timestamp.
    #[arg(long, default_value_t = 3)]
    pub timestamp_column: usize,
    /// Field delimiter.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Optional `file_id,release_timestamp` table.
    #[arg(long)]
    pub release: Option<PathBuf>,
    /// Drop files whose supplied release precedes the origin.
    #[arg(long)]
    pub drop_old_releases: bool,
    /// Keep only the first N slots [default: all].
    #[arg(long)]
    pub slots: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator settings (TOML) [default: built-in demo settings].
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of slots [default: 1000].
    #[arg(long)]
    pub slots: Option<usize>,
    /// Generator seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output trace file.
    #[arg(long)]
    pub out: PathBuf,
}

/// Settings shared by `run` and `compare`; each overrides the config file.
#[derive(Debug, Args)]
pub struct RunOverrides {
    /// Run settings: TOML, or JSON (a config or a report manifest).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cache capacity M in files [default: 10].
    #[arg(long = "capacity", short = 'M')]
    pub capacity: Option<usize>,
    /// Replacement cost weight with unit hit weight [default: 1].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Hit weight lambda_r [default: 1].
    #[arg(long)]
    pub lambda_r: Option<f64>,
    /// Replacement cost weight lambda_c [default: 1].
    #[arg(long)]
    pub lambda_c: Option<f64>,
    /// Discount factor [default: 0.9].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Base learning rate [default: 0.1].
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Learning-rate decay per slot of sample age [default: 0.99].
    #[arg(long)]
    pub beta0: Option<f64>,
    /// Imaginary rollouts per slot [default: 5].
    #[arg(long = "rollouts", short = 'K')]
    pub rollouts: Option<usize>,
    /// Imagination window in slots [default: 30].
    #[arg(long)]
    pub delta_t: Option<usize>,
    /// Oldest age group of the demand predictor [default: 60].
    #[arg(long)]
    pub age_cap: Option<usize>,
    /// Seed of the learning agents [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use only the first N slots of the trace [default: all].
    #[arg(long)]
    pub slots: Option<usize>,
    /// Slots per windowed hit-ratio point [default: 50].
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Report file [default: summary on stdout only].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format, csv or json [default: from the --out extension, else json].
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Trace file [default: bundled demo trace].
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Policy: lru, lfuda, most_popular, optimal, origin_ql or rlma [default: rlma].
    #[arg(long)]
    pub policy: Option<String>,
    #[command(flatten)]
    pub run: RunOverrides,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Trace file [default: bundled demo trace].
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Comma-separated policies [default: all six].
    #[arg(long, value_delimiter = ',')]
    pub policies: Vec<String>,
    /// Runs executed concurrently.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[command(flatten)]
    pub run: RunOverrides,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report previously written by `run` or `compare` (csv or json).
    #[arg(long)]
    pub input: PathBuf,
    /// Re-export the report here (json input only).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the re-export [default: from the --out extension].
    #[arg(long)]
    pub format: Option<String>,
}
