use std::path::PathBuf;

use binfar_core::period::YearMonth;
use binfar_core::LinkFunction;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Factor-augmented binary response forecasting.
#[derive(Debug, Parser)]
#[command(name = "binfar", version, about, propagate_version = true)]
pub struct Cli {
    /// Cap on worker threads (results do not depend on it).
    #[arg(long, global = true, env = "BINFAR_THREADS")]
    pub threads: Option<usize>,

    /// Format of the primary result; tables default to csv, structured
    /// results to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Link {
    Probit,
    Logistic,
}

impl From<Link> for LinkFunction {
    fn from(l: Link) -> Self {
        match l {
            Link::Probit => LinkFunction::Probit,
            Link::Logistic => LinkFunction::LogisticUnitVariance,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transform a FRED-MD style panel and write a normalized cache.
    Ingest(IngestArgs),
    /// Choose the number of factors by information criterion.
    SelectFactors(SelectArgs),
    /// Fit the binary forecasting equation by maximum likelihood.
    Fit(FitCmdArgs),
    /// Moving-block bootstrap of the two-step estimator.
    Bootstrap(BootstrapArgs),
    /// Monte Carlo study on the simulated designs.
    Simulate(SimulateArgs),
    /// In-sample or expanding-window out-of-sample evaluation.
    Backtest(BacktestArgs),
    /// ROC curve and AUC of scores against 0/1 labels.
    Roc(RocArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw panel: header row, transform-code row, monthly observations.
    #[arg(long)]
    pub panel: PathBuf,
    /// Recession file: `date,value` monthly 0/1 or `peak,trough` rows.
    #[arg(long)]
    pub recessions: Option<PathBuf>,
    /// First month kept after transformation.
    #[arg(long)]
    pub start: Option<YearMonth>,
    /// Last month kept.
    #[arg(long)]
    pub end: Option<YearMonth>,
    /// Cache directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Where a predictor panel comes from.
#[derive(Debug, Args)]
pub struct PanelArgs {
    /// Predictor panel: an ingest cache directory, a `date,series...` CSV,
    /// or a raw file with a transform-code row.
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// First panel month used.
    #[arg(long, requires = "panel")]
    pub start: Option<YearMonth>,
    /// Last panel month used.
    #[arg(long, requires = "panel")]
    pub end: Option<YearMonth>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub source: PanelArgs,
    /// Largest number of factors considered.
    #[arg(long, default_value_t = binfar_core::factors::DEFAULT_D_MAX)]
    pub d_max: usize,
    /// Extract this many factors instead of the selected number.
    #[arg(long)]
    pub d: Option<usize>,
    /// Output directory for selection, factors, loadings and marginal R².
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitOptionArgs {
    #[arg(long, value_enum, default_value = "probit")]
    pub link: Link,
    /// Convergence tolerance on the score norm.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// CSV with a 0/1 outcome column, optional `date` column and observed
    /// regressors in the remaining columns. Row `t` pairs the regressors at
    /// `t` with the outcome `h` periods later.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the outcome column.
    #[arg(long, default_value = "y")]
    pub y_col: String,
    /// Use only these data columns as observed regressors (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub w_cols: Option<Vec<String>>,
    /// Ignore observed regressors in the data file.
    #[arg(long, conflicts_with = "w_cols")]
    pub no_w: bool,
    #[command(flatten)]
    pub source: PanelArgs,
    /// Number of factors; selected by information criterion when omitted.
    #[arg(long, requires = "panel")]
    pub d: Option<usize>,
    #[arg(long, default_value_t = binfar_core::factors::DEFAULT_D_MAX, conflicts_with = "d")]
    pub d_max: usize,
    /// Forecast horizon recorded with the design.
    #[arg(long, default_value_t = 1)]
    pub h: usize,
}

#[derive(Debug, Args)]
pub struct FitCmdArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub fit: FitOptionArgs,
    /// Output directory (fit result and fitted probabilities).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub fit: FitOptionArgs,
    /// Number of blocks L.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Block length q.
    #[arg(long)]
    pub block_length: Option<usize>,
    /// Bootstrap replications B.
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Confidence level of the percentile intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// 1: probit errors, 2: unit-variance logistic errors.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub example: u8,
    /// 1: i.i.d. errors, 2 and 3: AR(1) errors with rho 0.3 and 0.7.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub dgp: u8,
    /// Cross-section sizes (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Sample lengths (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<usize>,
    /// Replications per cell.
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Select the number of factors by information criterion in each
    /// replication instead of using the true number.
    #[arg(long)]
    pub use_ic: bool,
    #[arg(long, default_value_t = binfar_core::factors::DEFAULT_D_MAX, requires = "use_ic")]
    pub d_max: usize,
    /// Also write every replication's estimates.
    #[arg(long)]
    pub replications: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Is,
    Oos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Far,
    Probit,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub source: PanelArgs,
    /// Recession file; taken from the cache directory when omitted.
    #[arg(long)]
    pub recessions: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "oos")]
    pub mode: Mode,
    /// Models to evaluate (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "far")]
    pub model: Vec<ModelArg>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,6,9,12")]
    pub horizons: Vec<usize>,
    /// First forecast origin.
    #[arg(long, required_if_eq("mode", "oos"))]
    pub oos_start: Option<YearMonth>,
    /// Last forecast origin (default: last panel month).
    #[arg(long)]
    pub oos_end: Option<YearMonth>,
    /// Months before a recession state becomes known.
    #[arg(long, default_value_t = 3)]
    pub lag: usize,
    /// Fixed number of factors.
    #[arg(long, conflicts_with = "ic_every_origin")]
    pub d: Option<usize>,
    #[arg(long, default_value_t = binfar_core::factors::DEFAULT_D_MAX)]
    pub d_max: usize,
    /// Re-run the information criterion at every origin.
    #[arg(long)]
    pub ic_every_origin: bool,
    /// Minimum estimation pairs at the first origin.
    #[arg(long, default_value_t = 60)]
    pub min_window: usize,
    /// Skip the SVG plots.
    #[arg(long)]
    pub no_plots: bool,
    #[command(flatten)]
    pub fit: FitOptionArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    /// One score per row (first column; a header row is skipped).
    #[arg(long)]
    pub scores: PathBuf,
    /// One 0/1 label per row.
    #[arg(long)]
    pub labels: PathBuf,
    /// Output directory for the curve (CSV and SVG).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
