use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fdf_core::{Estimator, KRule};

#[derive(Debug, Parser)]
#[command(name = "fdf", version, about = "Fit functional dynamic factor models and run simulation studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a factor model to a wide CSV of curves.
    Fit(FitArgs),
    /// Run a Monte Carlo study on one of the four simulation models.
    Simulate(SimulateArgs),
    /// Summarize a results.csv written by `simulate`.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Stationary,
    Nonstationary,
}

impl ModeArg {
    pub fn label(self) -> &'static str {
        match self {
            ModeArg::Auto => "auto",
            ModeArg::Stationary => "stationary",
            ModeArg::Nonstationary => "nonstationary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Ratio,
    Scree,
    ScreeLiteral,
}

impl From<RuleArg> for KRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Ratio => KRule::Ratio,
            RuleArg::Scree => KRule::Scree,
            RuleArg::ScreeLiteral => KRule::ScreeLiteral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Fdf,
    Pca,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Fdf => Estimator::Fdf,
            EstimatorArg::Pca => Estimator::Pca,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 8)]
    pub k0: usize,
    /// Cubic B-spline basis size for smoothing sparse observations.
    #[arg(long, default_value_t = 15)]
    pub nbasis: usize,
    /// Number of grid points the curves are evaluated on.
    #[arg(long = "grid", default_value_t = 101)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = RuleArg::Ratio)]
    pub k_rule: RuleArg,
    /// Bartlett bandwidth; defaults to ceil(N^(1/3)).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub p_share: f64,
    /// Impose the total number of factors.
    #[arg(long)]
    pub k: Option<usize>,
    /// Impose the number of nonstationary factors.
    #[arg(long)]
    pub r: Option<usize>,
    /// Use the functional PCA baseline instead of the FDF estimator.
    #[arg(long)]
    pub pca: bool,
    /// Skip the regression refinement of nonstationary loadings.
    #[arg(long)]
    pub no_refine: bool,
    /// Seed of the stationarity test's Monte Carlo reference.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip writing SVG plots.
    #[arg(long)]
    pub no_plots: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: u8,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [EstimatorArg::Fdf, EstimatorArg::Pca])]
    pub estimators: Vec<EstimatorArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [RuleArg::Ratio, RuleArg::Scree])]
    pub k_rules: Vec<RuleArg>,
    #[arg(long = "grid", default_value_t = 101)]
    pub grid: usize,
    #[arg(long, default_value_t = 8)]
    pub k0: usize,
    /// Worker threads; defaults to FDF_THREADS or the available parallelism.
    #[arg(long, env = "FDF_THREADS")]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
