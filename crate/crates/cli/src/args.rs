use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Metaphor detection and engagement studies for political posts.
#[derive(Debug, Parser)]
#[command(name = "metaeng", version)]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "METAENG_OUT_DIR", default_value = "out")]
    pub out: PathBuf,

    /// Worker threads; 0 uses every processor.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one pair classifier.
    Train(TrainArgs),
    /// Benchmark a trained classifier at the 0.5 decision threshold.
    Eval(EvalArgs),
    /// List candidate pairs found in CoNLL-U parses.
    Extract(ExtractArgs),
    /// Score every post with both classifiers.
    Score(ScoreArgs),
    /// Metaphor usage by gender, party and quarter.
    StudyUsage(StudyArgs),
    /// Post-level engagement mixed models.
    StudyEngagement(StudyArgs),
    /// Word-level engagement for lemmas used both ways.
    StudyWordlevel(StudyArgs),
    /// Run all three studies and write a summary.
    Report(StudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionArg {
    /// Verb-subject and verb-object pairs.
    Verb,
    /// Adjective-noun pairs.
    Adj,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DevMetricArg {
    Accuracy,
    F1,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub construction: ConstructionArg,
    /// Training pairs (TSV: left, right, construction, label).
    #[arg(long)]
    pub train: PathBuf,
    /// Development pairs used for early stopping.
    #[arg(long)]
    pub dev: PathBuf,
    /// Optional held-out pairs evaluated after training.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Word embeddings in text format.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mapped-space size Z.
    #[arg(long, default_value_t = 300)]
    pub mapped: usize,
    /// Hidden-layer size D.
    #[arg(long, default_value_t = 50)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.4)]
    pub margin: f64,
    #[arg(long, default_value_t = 300)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 7)]
    pub patience: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.95)]
    pub rho: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub init_scale: f64,
    /// Early-stopping metric; accuracy for verbs and F1 for adjectives by default.
    #[arg(long, value_enum)]
    pub dev_metric: Option<DevMetricArg>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Defaults to the embeddings recorded in the model file.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    #[arg(long)]
    pub parses: PathBuf,
    /// Keep pronoun arguments.
    #[arg(long)]
    pub include_pronouns: bool,
    /// Skip copular predicate adjectives.
    #[arg(long)]
    pub no_copular: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model_adj: PathBuf,
    #[arg(long)]
    pub model_verb: PathBuf,
    #[arg(long)]
    pub parses: PathBuf,
    /// Posts table (CSV or JSON lines).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Defaults to the embeddings recorded in the model files.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Metaphor threshold on the classifier score; 0.5 and 0.6 are the usual alternatives.
    #[arg(long, default_value_t = 0.7)]
    pub threshold: f64,
    /// Score posts of every type instead of text posts only.
    #[arg(long)]
    pub all_post_types: bool,
    #[arg(long)]
    pub include_pronouns: bool,
    #[arg(long)]
    pub no_copular: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct StudyArgs {
    /// Output of `score`.
    #[arg(long)]
    pub scored: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub politicians: PathBuf,
    /// Study configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured metaphor threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Overrides the configured sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include posts of every type.
    #[arg(long)]
    pub all_post_types: bool,
}
