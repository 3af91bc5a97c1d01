use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rcassoc::LogitType;

#[derive(Debug, Parser)]
#[command(
    name = "rcassoc",
    version,
    about = "Fit and check RC(K) association models with divergence-scaled interactions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model to a counts table.
    Fit(FitArgs),
    /// Fit a grid of powers for several logit pairs.
    Sweep(SweepArgs),
    /// Recover a table from its marginal logits and interactions.
    Reconstruct(ReconstructArgs),
    /// Positive-dependence report for a table, or for random tables.
    Check(CheckArgs),
    /// Verify the built-in tables where nonnegative interactions coexist
    /// with a negative log-odds ratio.
    Counterexamples(CounterexampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Logit type of the row variable (L, G, C or R).
    #[arg(long, default_value = "L")]
    pub rows_logit: LogitType,
    /// Logit type of the column variable.
    #[arg(long, default_value = "L")]
    pub cols_logit: LogitType,
    /// Rank of the interaction matrix.
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    /// Extra linear constraint: row-effects, column-effects,
    /// marginal-homogeneity or marginal-shift. Repeatable.
    #[arg(long = "constraint")]
    pub constraints: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Counts file (comma or whitespace separated; `-` reads stdin).
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Cressie-Read power; 0 is Kullback-Leibler.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub input: PathBuf,
    /// Comma-separated logit pairs, e.g. LL,GG,CC.
    #[arg(long, default_value = "LL,GG,CC")]
    pub pairs: String,
    /// Grid of powers as min:max:step.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "lambda")]
    pub lambda_grid: Option<String>,
    /// A single power.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    #[arg(long = "constraint")]
    pub constraints: Vec<String>,
    /// Number of worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// JSON output of `fit`; supplies logit types, power, logits and
    /// interactions. Explicit flags override it.
    #[arg(long)]
    pub from_fit: Option<PathBuf>,
    /// File with the row marginal logits.
    #[arg(long)]
    pub row_logits: Option<PathBuf>,
    /// File with the column marginal logits.
    #[arg(long)]
    pub col_logits: Option<PathBuf>,
    /// File with the interaction matrix, one row per line.
    #[arg(long)]
    pub gamma: Option<PathBuf>,
    #[arg(long)]
    pub rows_logit: Option<LogitType>,
    #[arg(long)]
    pub cols_logit: Option<LogitType>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Counts file. Omit with --random.
    #[arg(required_unless_present = "random")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Comma-separated logit pairs to summarize (default: all sixteen).
    #[arg(long)]
    pub pairs: Option<String>,
    /// Check the implications on this many uniformly drawn tables instead.
    #[arg(long, conflicts_with = "input")]
    pub random: Option<usize>,
    /// Table size for --random, as ROWSxCOLS.
    #[arg(long, default_value = "4x4")]
    pub size: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// Restrict to some tables: ll, lc, cc. Repeatable or comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Machine-readable output.
    #[arg(long)]
    pub json: bool,
}
