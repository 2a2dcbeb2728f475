use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "svi", version, about = "Stochastic variational inference for LDA and HDP topic models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model, writing metrics, checkpoints and the final model to --out.
    Train(TrainArgs),
    /// Train once per (kappa, batch size) cell and summarize the results.
    Sweep(SweepArgs),
    /// Print the most probable terms of every topic as CSV.
    Topics(TopicsArgs),
    /// Generate a corpus from the LDA generative process.
    Synth(SynthArgs),
    /// Score a saved model on a held-out test corpus.
    Eval(EvalArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lda,
    Hdp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lda => "lda",
            Self::Hdp => "hdp",
        }
    }
}

/// Run settings shared by `train` and `sweep`. Every field can also be set
/// in a `--config` file; flags win.
#[derive(Args, Debug, Clone, Default)]
pub struct RunFlags {
    /// Flat `key = value` file with the same keys as the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Training corpus, UCI docword format.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Vocabulary, one term per line.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Test corpus in docword format over the same vocabulary.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of topics (the corpus-level truncation for the HDP).
    #[arg(long)]
    pub k: Option<usize>,
    /// Document-level truncation (HDP only).
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Corpus-level concentration (HDP only).
    #[arg(long)]
    pub omega: Option<f64>,
    /// Forgetting rate, in (0.5, 1].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Delay, at least 0.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Total outer iterations (full sweeps with --batch).
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Documents between evaluations; 0 evaluates only at the end.
    #[arg(long)]
    pub eval_every: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for local steps (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Per-document convergence tolerance (default 1e-3 times K, or T for the HDP).
    #[arg(long)]
    pub local_tolerance: Option<f64>,
    #[arg(long)]
    pub local_max_sweeps: Option<usize>,
    /// Share of each test document's unique terms that is held out.
    #[arg(long)]
    pub heldout_fraction: Option<f64>,
    /// Classical batch coordinate ascent over the whole corpus.
    #[arg(long)]
    pub batch: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Continue from the checkpoint in --out. Only --iterations and
    /// --threads may change.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunFlags,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0])]
    pub kappas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 50, 100, 500, 1000])]
    pub batch_sizes: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct TopicsArgs {
    /// A `model.json` written by `train`.
    pub model_file: PathBuf,
    /// Terms per topic.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub terms: usize,
    #[arg(long)]
    pub documents: usize,
    #[arg(long, default_value_t = 100)]
    pub doc_length: usize,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extra documents drawn from the same topics and written as a test set.
    #[arg(long, default_value_t = 0)]
    pub test_documents: usize,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub model_file: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Defaults to the value used in training.
    #[arg(long)]
    pub heldout_fraction: Option<f64>,
    /// Seed of the held-out split; defaults to the training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub local_tolerance: Option<f64>,
    #[arg(long)]
    pub local_max_sweeps: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
}
