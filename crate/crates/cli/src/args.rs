use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcornet_core::correlation::CorMethod;

#[derive(Debug, Parser)]
#[command(name = "pcornet", version, about = "Regularized partial-correlation networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads (default: PCORNET_THREADS, else all cores). Outputs
    /// do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate an EBIC-selected network from a CSV data file.
    Estimate(EstimateArgs),
    /// Centrality indices of a network document.
    Centrality(CentralityArgs),
    /// Bootstrap accuracy or stability of an estimated network.
    Bootstrap(BootstrapArgs),
    /// Recovery simulation from a known network.
    Simulate(SimulateArgs),
    /// Permutation test between the networks of two datasets.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorArg {
    Auto,
    Pearson,
    Spearman,
}

impl From<CorArg> for CorMethod {
    fn from(c: CorArg) -> Self {
        match c {
            CorArg::Auto => CorMethod::AutoMixed,
            CorArg::Pearson => CorMethod::Pearson,
            CorArg::Spearman => CorMethod::Spearman,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value_t = CorArg::Auto)]
    pub cor: CorArg,
    /// EBIC hyperparameter.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Re-estimate the selected edges without penalty.
    #[arg(long)]
    pub refit: bool,
    #[arg(long, default_value_t = 100)]
    pub n_lambda: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lambda_ratio: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Master seed; generated and reported when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Comma-separated subset of json,csv,dot,svg.
    #[arg(long, default_value = "json,csv")]
    pub format: String,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CentralityArgs {
    /// Network document (JSON).
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BootTypeArg {
    Nonparametric,
    Case,
}

#[derive(Debug, Clone, Args)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub nboots: usize,
    #[arg(long = "type", value_enum, default_value_t = BootTypeArg::Nonparametric)]
    pub boot_type: BootTypeArg,
    /// Interval level.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Retained proportions for the case-dropping bootstrap.
    #[arg(long, value_delimiter = ',')]
    pub proportions: Option<Vec<f64>>,
    /// CS-coefficient correlation threshold.
    #[arg(long, default_value_t = 0.7)]
    pub cs_threshold: f64,
    /// CS-coefficient certainty.
    #[arg(long, default_value_t = 0.95)]
    pub cs_certainty: f64,
    /// Request confidence intervals for centrality indices (refused).
    #[arg(long)]
    pub centrality_ci: bool,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    Equiprobable,
    Sampled,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Truth network document (JSON).
    #[arg(long, conflicts_with = "chain", required_unless_present = "chain")]
    pub input: Option<PathBuf>,
    /// Use a chain graph on this many nodes as the truth.
    #[arg(long)]
    pub chain: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    pub w_min: f64,
    #[arg(long, default_value_t = 0.4)]
    pub w_max: f64,
    /// Give chain-graph edges random signs.
    #[arg(long)]
    pub random_signs: bool,
    #[arg(long, value_delimiter = ',', default_value = "100,250,500,1000,2500")]
    pub ncases: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub nreps: usize,
    /// Ordinalize simulated data into this many categories.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, value_enum, default_value_t = ThresholdArg::Equiprobable)]
    pub thresholds: ThresholdArg,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub input_b: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub nperm: usize,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}
