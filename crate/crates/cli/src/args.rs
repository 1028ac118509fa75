use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "noisetag", version, about = "Tagging with clean and distantly supervised data")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Default, Args)]
pub struct GlobalArgs {
    /// Seed for clustering, training and benchmark data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for the manifest and default-named outputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Label a corpus by gazetteer lookup.
    Annotate(AnnotateArgs),
    /// Induce word clusters.
    #[command(subcommand)]
    Cluster(ClusterCommand),
    /// Initialize confusion matrices from clean/noisy label pairs.
    InitCm(InitCmArgs),
    /// Train a tagger variant.
    Train(TrainArgs),
    /// Score predictions or a checkpoint against gold labels.
    Eval(EvalArgs),
    /// Run variants on synthetic data over several seeds.
    Benchmark(BenchmarkArgs),
    /// Rerun the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Annotate(_) => "annotate",
            Command::Cluster(_) => "cluster",
            Command::InitCm(_) => "init-cm",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Benchmark(_) => "benchmark",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct AnnotateArgs {
    /// Corpus to label (CoNLL columns, tokens in the first column).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Gazetteer source as TYPE:path; repeatable.
    #[arg(long = "gazetteer", value_name = "TYPE:PATH", required = true)]
    pub gazetteers: Vec<String>,
    /// The corpus carries gold tags; also write a labeling report.
    #[arg(long)]
    pub gold: bool,
    /// Output corpus [default: <out-dir>/annotated.conll].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterCommand {
    /// k-means on (optionally PCA-reduced) word vectors.
    Kmeans(KmeansArgs),
    /// Brown clustering of a token corpus.
    Brown(BrownArgs),
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct KmeansArgs {
    /// Word vectors (text format, or binary cache with a .bin extension).
    #[arg(long)]
    pub vectors: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// PCA target dimension; 0 clusters the raw vectors.
    #[arg(long)]
    pub pca: Option<usize>,
    /// Output TSV [default: <out-dir>/clusters.tsv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct BrownArgs {
    /// Token corpus (first column is read).
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,
    /// Number of clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// Output TSV [default: <out-dir>/clusters.tsv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where clean/noisy label pairs come from.
#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct PairArgs {
    /// Gazetteer source as TYPE:path, applied to the clean corpus; repeatable.
    #[arg(long = "gazetteer", value_name = "TYPE:PATH")]
    pub gazetteers: Vec<String>,
    /// The clean sentences with automatic labels, token-aligned.
    #[arg(long)]
    pub clean_noisy: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct NoiseArgs {
    /// Interpolation weight for -ip variants.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Selection fraction for -freq variants.
    #[arg(long)]
    pub fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct InitCmArgs {
    /// Variant name (e.g. global-cm, kmeans-cm-freq-ip).
    #[arg(long)]
    pub mode: String,
    /// Clean corpus with gold tags.
    #[arg(long)]
    pub clean: PathBuf,
    #[command(flatten)]
    pub pairs: PairArgs,
    /// Word clusters (TSV), required by cluster variants.
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    /// Noisy corpus, counted for -freq selection.
    #[arg(long)]
    pub noisy: Option<PathBuf>,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Variant name: base, base+noise, global-cm, global-id-cm or
    /// {brown,kmeans}-cm with -freq, -ip or -freq-ip.
    #[arg(long)]
    pub mode: String,
    #[arg(long)]
    pub clean: PathBuf,
    #[arg(long)]
    pub noisy: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    /// Word vectors (text format, or binary cache with a .bin extension).
    #[arg(long)]
    pub vectors: PathBuf,
    /// Word clusters (TSV), required by cluster variants.
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    /// Initial confusion model (JSON from init-cm) instead of label pairs.
    #[arg(long)]
    pub cm: Option<PathBuf>,
    #[command(flatten)]
    pub pairs: PairArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Context words on each side.
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Gold corpus.
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted corpus to score.
    #[arg(long, conflicts_with = "checkpoint")]
    pub pred: Option<PathBuf>,
    /// Checkpoint to tag the gold corpus with.
    #[arg(long, requires = "vectors")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub vectors: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchmarkArgs {
    /// `default` or a JSON/TOML synthetic spec file.
    #[arg(long, default_value = "default")]
    pub spec: String,
    /// Number of seeds; seeds run from seed+1 to seed+N.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Comma-separated variant names.
    #[arg(long, value_delimiter = ',')]
    pub variants: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct ReplayArgs {
    /// A manifest.json written by an earlier run.
    pub manifest: PathBuf,
}
