use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use l2s::metrics::Averaging;
use l2s::search::{Algorithm, RollinSource, RolloutSource, TrainerConfig, DEFAULT_INTERPOLATION};

#[derive(Parser, Debug)]
#[command(name = "l2s", version, about = "Train and run learning-to-search structured predictors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a model on a corpus and write it to disk.
    Train(TrainCmd),
    /// Decode a corpus with a trained model and report metrics.
    Test(TestCmd),
    /// Train under the four optimization settings and tabulate them.
    Bench(BenchCmd),
    /// Write a synthetic Markov-chain sequence corpus.
    Gen(GenCmd),
    /// Re-score a predictions file written by `test`.
    Score(ScoreCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TaskKind {
    /// Sequence labeling under Hamming loss.
    Seq,
    /// Sequence labeling with the BIO constraint and span F1.
    Bio,
    /// Largest-label detection with an asymmetric loss.
    Detect,
    /// Joint entity typing and relation labeling.
    Entrel,
    /// Arc-hybrid dependency parsing.
    Dep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Dagger,
    Searn,
    Lols,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RollinArg {
    Learned,
    Mix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RolloutArg {
    Ref,
    Learned,
    Mix,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Macro,
    Micro,
}

impl From<MetricArg> for Averaging {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Macro => Averaging::Macro,
            MetricArg::Micro => Averaging::Micro,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct TaskOpts {
    #[arg(long, value_enum, default_value = "seq")]
    pub task: TaskKind,
    /// Hash space size in bits (8..=31).
    #[arg(long, default_value_t = 18)]
    pub bits: u8,
    /// Previous predictions used as features (seq/bio).
    #[arg(long, default_value_t = 1)]
    pub markov_order: usize,
    /// Neighbor word templates, `offset:namespace` comma separated.
    #[arg(long, default_value = "0:w,-1:w,1:w", allow_hyphen_values = true)]
    pub neighbors: String,
    /// Affix templates such as `-2w,+2w` (suffix/prefix length and namespace).
    #[arg(long, default_value = "-2w,+2w", allow_hyphen_values = true)]
    pub affixes: String,
    /// Relation constraint table (entrel); built-in table when omitted.
    #[arg(long)]
    pub relations: Option<PathBuf>,
    /// Loss for missing the largest label (detect).
    #[arg(long, default_value_t = 2.0)]
    pub false_negative_loss: f64,
}

#[derive(Args, Debug, Clone)]
pub struct TrainOpts {
    #[arg(long, value_enum, default_value = "lols")]
    pub algorithm: AlgorithmArg,
    /// Training passes; a fraction subsamples the positions of the last pass.
    #[arg(long, default_value_t = 1.0)]
    pub passes: f64,
    /// Rate at which deviation positions are kept.
    #[arg(long, default_value_t = 1.0)]
    pub subsample: f64,
    /// Rollin policy [default: learned for lols, mix otherwise].
    #[arg(long, value_enum)]
    pub rollin: Option<RollinArg>,
    /// Rollout policy [default: mix for lols/searn, none for dagger].
    #[arg(long, value_enum)]
    pub rollout: Option<RolloutArg>,
    /// Interpolation rate beta; the reference is used with probability (1-beta)^updates.
    #[arg(long, default_value_t = DEFAULT_INTERPOLATION)]
    pub interpolation: f64,
    /// Probability a rollout follows the reference (lols mix).
    #[arg(long, default_value_t = 0.5)]
    pub rollout_mix_prob: f64,
    /// Stop rollouts after N steps and complete with a constant action.
    #[arg(long, value_name = "N")]
    pub collapse: Option<usize>,
    /// Disable memoization of rollout predictions.
    #[arg(long)]
    pub no_cache: bool,
    /// Apply the cost-sensitive updates at the end of each example.
    #[arg(long)]
    pub update_per_example: bool,
    /// AdaGrad learning rate.
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl TrainOpts {
    pub fn trainer_config(&self) -> TrainerConfig {
        let algorithm = match self.algorithm {
            AlgorithmArg::Dagger => Algorithm::Dagger,
            AlgorithmArg::Searn => Algorithm::Searn,
            AlgorithmArg::Lols => Algorithm::Lols,
        };
        let mut cfg = TrainerConfig::for_algorithm(algorithm);
        if let Some(r) = self.rollin {
            cfg.rollin = match r {
                RollinArg::Learned => RollinSource::Learned,
                RollinArg::Mix => RollinSource::Mix,
            };
        }
        if let Some(r) = self.rollout {
            cfg.rollout = match r {
                RolloutArg::Ref => RolloutSource::Reference,
                RolloutArg::Learned => RolloutSource::Learned,
                RolloutArg::Mix => RolloutSource::Mix,
                RolloutArg::None => RolloutSource::None,
            };
        }
        cfg.beta = self.interpolation;
        cfg.rollout_mix_prob = self.rollout_mix_prob;
        cfg.collapse_h = self.collapse;
        cfg.subsample = self.subsample;
        cfg.passes = self.passes;
        cfg.update_per_example = self.update_per_example;
        cfg.cache_enabled = !self.no_cache;
        cfg.seed = self.seed;
        cfg
    }
}

#[derive(Args, Debug, Clone)]
pub struct ReportOpts {
    /// Include the work counters in the report.
    #[arg(long)]
    pub counters: bool,
    /// Leave wall-clock figures out of the report.
    #[arg(long)]
    pub no_timing: bool,
    /// Also write the report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainCmd {
    /// Training corpus.
    #[arg(long)]
    pub data: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub task: TaskOpts,
    #[command(flatten)]
    pub train: TrainOpts,
    #[command(flatten)]
    pub out: ReportOpts,
}

#[derive(Args, Debug)]
pub struct TestCmd {
    /// Corpus to decode.
    #[arg(long)]
    pub data: PathBuf,
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Write predictions here, in the input format with a predicted column.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Span F1 averaging (bio).
    #[arg(long, value_enum, default_value = "macro")]
    pub metric: MetricArg,
    /// Decode sentences concurrently against the shared model.
    #[arg(long)]
    pub concurrent: bool,
    #[command(flatten)]
    pub task: TaskOpts,
    #[command(flatten)]
    pub out: ReportOpts,
}

#[derive(Args, Debug)]
pub struct BenchCmd {
    /// Training corpus.
    #[arg(long)]
    pub data: PathBuf,
    /// Evaluation corpus [default: the training corpus].
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "macro")]
    pub metric: MetricArg,
    #[command(flatten)]
    pub task: TaskOpts,
    #[command(flatten)]
    pub train: TrainOpts,
    #[command(flatten)]
    pub out: ReportOpts,
}

#[derive(Args, Debug)]
pub struct GenCmd {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub labels: usize,
    #[arg(long, default_value_t = 20)]
    pub length: usize,
    #[arg(long, default_value_t = 2000)]
    pub sentences: usize,
    /// Probability a word is replaced by an uninformative distractor.
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    /// Probability a label is followed by its successor.
    #[arg(long, default_value_t = 0.8)]
    pub stickiness: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ScoreCmd {
    /// Predictions file written by `test`.
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, value_enum, default_value = "seq")]
    pub task: TaskKind,
    #[arg(long, value_enum, default_value = "macro")]
    pub metric: MetricArg,
    /// Also write the metrics to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}
