use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "hyperfa", version, about = "Mixtures of generalized hyperbolic factor analyzers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a dataset, selecting G and q by BIC when ranges are given
    Fit(FitArgs),
    /// Fit with known labels for some rows and predict the rest
    Classify(ClassifyArgs),
    /// Draw a simulated mixture on a hypercube
    Simulate(SimulateArgs),
    /// Adjusted Rand index between two label files
    Evaluate(EvaluateArgs),
    /// Rerun the command recorded in a manifest and compare its artifacts
    Replay(ReplayArgs),
}

/// Inclusive range written `a:b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
}

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected a:b, got '{s}'"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("'{v}' is not a non-negative integer"));
        let span = Span { lo: parse(lo)?, hi: parse(hi)? };
        if span.lo == 0 || span.lo > span.hi {
            return Err(format!("range '{s}' must satisfy 1 <= a <= b"));
        }
        Ok(span)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Kmeans,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AitkenArg {
    Latest,
    Previous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Gaussian,
    SkewNormal,
    Gh,
}

/// Settings shared by `fit` and `classify`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitOptions {
    /// Input CSV with a header row; `id` and `label` columns are not modelled
    #[arg(long)]
    pub data: PathBuf,

    /// Number of latent factors
    #[arg(long, conflicts_with = "q_range", required_unless_present = "q_range")]
    pub q: Option<usize>,

    /// Range of factor counts searched by BIC
    #[arg(long, value_name = "A:B")]
    pub q_range: Option<Span>,

    /// Random starts per model
    #[arg(long, default_value_t = 20)]
    pub starts: usize,

    #[arg(long, value_enum, default_value_t = InitArg::Kmeans)]
    pub init: InitArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Concurrent starts and grid cells; 0 uses every core
    #[arg(long, env = "HYPERFA_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,

    /// Aitken convergence tolerance
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,

    #[arg(long, value_enum, default_value_t = AitkenArg::Latest)]
    pub aitken_target: AitkenArg,

    /// Directory for the output files
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub options: FitOptions,

    /// Number of components
    #[arg(long = "G", conflicts_with = "g_range", required_unless_present = "g_range")]
    pub g: Option<usize>,

    /// Range of component counts searched by BIC
    #[arg(long = "G-range", value_name = "A:B")]
    pub g_range: Option<Span>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub options: FitOptions,

    /// Number of classes; defaults to the distinct labels present
    #[arg(long = "G")]
    pub g: Option<usize>,

    /// Column holding the class labels
    #[arg(long, default_value = "label")]
    pub label_column: String,

    /// Hide this fraction of the labels at random and score the predictions
    #[arg(long)]
    pub unlabel_frac: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,

    #[arg(long)]
    pub p: usize,

    #[arg(long = "G")]
    pub g: usize,

    /// Total rows, split evenly across components
    #[arg(long)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Add random correlation to each scale matrix
    #[arg(long)]
    pub correlated: bool,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Reference labels
    pub truth: PathBuf,
    /// Labels to score
    pub predicted: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,

    /// Output directory; defaults to the manifest's directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Override the recorded thread count
    #[arg(long)]
    pub threads: Option<usize>,
}
