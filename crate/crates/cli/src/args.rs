use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use shc_core::datasets::{GeneratorKind, LabelColumn};
use shc_core::ek::Recount;
use shc_core::eval::Method;
use shc_core::SetDissimilarity;

#[derive(Debug, Parser)]
#[command(name = "shc", version, about = "Stabilized hybrid clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Cluster a dataset into k groups
    Cluster(ClusterArgs),
    /// Estimate the number of clusters
    EstimateK(EstimateArgs),
    /// Score methods against ground-truth labels over repeated runs
    Bench(BenchArgs),
    /// Re-run a recorded command and check its outputs
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Cluster(_) => "cluster",
            Command::EstimateK(_) => "estimate-k",
            Command::Bench(_) => "bench",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// CSV file of numeric columns, optional header
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Built-in generator: three_normals, spiral, half_ring, two_uniform_1d, blobs
    #[arg(long = "gen", value_name = "NAME")]
    pub generator: Option<GeneratorKind>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DataArgs {
    #[command(flatten)]
    pub source: Source,

    /// Column holding ground-truth labels (0-based index or header name)
    #[arg(long, value_name = "COL")]
    pub label_column: Option<LabelColumn>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EnsembleArgs {
    /// Ensemble size
    #[arg(long, default_value_t = 200)]
    pub b: usize,

    /// Largest cluster count drawn for an ensemble member
    #[arg(long, default_value_t = 25)]
    pub kmax: usize,

    /// Clusters holding at most this fraction of the points count as small
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Set dissimilarity for merging basal clusters: min, p20 or any pNN
    #[arg(long, default_value = "p20")]
    pub dissim: SetDissimilarity,

    /// Master seed; a fresh one is drawn and reported when absent
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Number of clusters
    #[arg(long)]
    pub k: usize,

    #[command(flatten)]
    pub ensemble: EnsembleArgs,

    /// Label file, one cluster id per line (stdout when absent)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Write the consensus dendrogram as JSON
    #[arg(long, value_name = "PATH")]
    pub dump_dendrogram: Option<PathBuf>,

    /// Run manifest path
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub ensemble: EnsembleArgs,

    /// Height used to recount the pruned dendrograms: longest or per-lifetime
    #[arg(long, default_value = "longest")]
    pub recount: Recount,

    /// Also write the full result as JSON
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Run manifest path
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Comma-separated methods: kmeans, eac, shc-min, shc-p20
    #[arg(long, value_delimiter = ',', default_value = "kmeans,eac,shc-min,shc-p20")]
    pub methods: Vec<Method>,

    /// Repetitions per method
    #[arg(long, default_value_t = 10)]
    pub runs: usize,

    /// Number of clusters (defaults to the number of label classes)
    #[arg(long)]
    pub k: Option<usize>,

    #[command(flatten)]
    pub ensemble: EnsembleArgs,

    /// Write MAI/SAI per method as JSON
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,

    /// Run manifest path
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,

    /// Directory for the regenerated outputs (nothing is written when absent)
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}
