use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "soclearn",
    version,
    about = "Learn social-influence strength from a directed graph and an action log, \
             and predict who acts next."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a graph and action log, filter inactive or unconnected
    /// subjects, and write the cleaned dataset.
    Ingest(IngestArgs),
    /// Fit one model on an ingested dataset and write its artifact.
    Fit(FitArgs),
    /// Cross-validated comparison of the selected models.
    Eval(EvalArgs),
    /// Score one (subject, action) case with a stored model artifact.
    Predict(PredictArgs),
    /// Generate a synthetic world with planted ground-truth probabilities.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Bd,
    Ji,
    Pcb,
    Pcj,
    Icem,
    Dnn,
}

impl ModelChoice {
    pub fn display_name(self) -> &'static str {
        match self {
            ModelChoice::Bd => "BD",
            ModelChoice::Ji => "JI",
            ModelChoice::Pcb => "PC-B",
            ModelChoice::Pcj => "PC-J",
            ModelChoice::Icem => "IC",
            ModelChoice::Dnn => "DNN",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RuleChoice {
    Youden,
    Closest01,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Independent,
    Dependent,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Graph file: `source<TAB>target` per line.
    #[arg(long)]
    pub graph: PathBuf,
    /// Action file: `subject<TAB>action[<TAB>timestamp]` per line.
    #[arg(long)]
    pub actions: PathBuf,
    /// Subjects with fewer performed actions are dropped (iterated with the
    /// no-edges rule until stable).
    #[arg(long, default_value_t = 20)]
    pub min_actions: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Training hyperparameters shared by `fit` and `eval`.
#[derive(Args, Clone, Debug)]
pub struct TrainOverrides {
    #[arg(long, default_value_t = 25)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub dropout: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    pub rmsprop_decay: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub rmsprop_epsilon: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Hidden-layer widths, widest first.
    #[arg(long, value_delimiter = ',', default_values_t = [128, 64, 32])]
    pub layers: Vec<usize>,
}

/// Expectation-maximization settings shared by `fit` and `eval`.
#[derive(Args, Clone, Debug)]
pub struct EmOverrides {
    #[arg(long, default_value_t = 200)]
    pub em_max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub em_tolerance: f64,
    #[arg(long, default_value_t = 0.5)]
    pub em_init_p: f64,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Dataset directory holding graph.tsv and actions.tsv.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelChoice,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Count co-performance as influence instead of requiring timestamps.
    #[arg(long)]
    pub timestamp_free: bool,
    /// Only count influence within this many timestamp units before the
    /// target's activation.
    #[arg(long)]
    pub window: Option<i64>,
    #[command(flatten)]
    pub train: TrainOverrides,
    #[command(flatten)]
    pub em: EmOverrides,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Dataset directory holding graph.tsv and actions.tsv.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated subset of {bd, ji, pcb, pcj, icem, dnn}, or `all`.
    #[arg(long, default_value = "all")]
    pub models: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub timestamp_free: bool,
    #[arg(long)]
    pub window: Option<i64>,
    /// Threshold selection for the noisy-or models.
    #[arg(long, value_enum, default_value_t = RuleChoice::Youden)]
    pub threshold_rule: RuleChoice,
    /// Threshold selection for the neural model.
    #[arg(long, value_enum, default_value_t = RuleChoice::Fixed)]
    pub dnn_threshold_rule: RuleChoice,
    /// Cutoff used by whichever rule is `fixed`.
    #[arg(long, default_value_t = 0.5)]
    pub fixed_threshold: f64,
    #[command(flatten)]
    pub train: TrainOverrides,
    #[command(flatten)]
    pub em: EmOverrides,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Model artifact: an edge-probability table or a neural model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset directory holding graph.tsv and actions.tsv.
    #[arg(long)]
    pub data: PathBuf,
    /// Subject identifier as it appears in the dataset.
    #[arg(long)]
    pub subject: String,
    /// Action identifier as it appears in the dataset.
    #[arg(long)]
    pub action: String,
    /// Activation threshold.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long)]
    pub timestamp_free: bool,
    /// Also write the prediction and a run manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 200)]
    pub subjects: usize,
    #[arg(long, default_value_t = 8.0)]
    pub avg_in_degree: f64,
    #[arg(long, default_value_t = 2000)]
    pub actions: usize,
    /// Probability that a subject spontaneously adopts at round 0.
    #[arg(long, default_value_t = 0.02)]
    pub seed_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    pub prob_low: f64,
    #[arg(long, default_value_t = 0.6)]
    pub prob_high: f64,
    /// Number of planted AND-pairs (dependent worlds only).
    #[arg(long, default_value_t = 30)]
    pub pairs: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
