//! Command-line front end: split, analyze, evaluate, correlate and rank
//! aspect drift, writing CSV data files.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chronoeval::seed::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(
    name = "chronoeval",
    version,
    about = "Temporal persistence analysis for text classifiers"
)]
pub struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stratified train/dev/test split of every year.
    Split(SplitArgs),
    /// Word lifetime taxonomy per year.
    VocabReport(VocabArgs),
    /// Lexical metrics between every ordered pair of years.
    Lexmetrics(LexArgs),
    /// Train on each year, test on every year, aggregate by temporal gap.
    Evaluate(EvalArgs),
    /// Pearson correlation of lexical metrics with pair performance.
    Correlate(CorrelateArgs),
    /// Aspect similarity trajectories and variance ranking.
    Drift(DriftArgs),
    /// Generate a synthetic corpus with drifting class vocabulary.
    Synth(SynthArgs),
    /// Check interchange files against the expected schemas.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DocFormat {
    Csv,
    Jsonl,
}

impl From<DocFormat> for chronoeval::corpus::Format {
    fn from(f: DocFormat) -> Self {
        match f {
            DocFormat::Csv => chronoeval::corpus::Format::Csv,
            DocFormat::Jsonl => chronoeval::corpus::Format::Jsonl,
        }
    }
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Documents file with columns id, text, label and year or timestamp.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<DocFormat>,
    /// Directory receiving `<year>.<part>.<ext>` files.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub output_format: DocFormat,
    #[arg(long, default_value_t = 0.75)]
    pub train: f64,
    #[arg(long, default_value_t = 0.10)]
    pub dev: f64,
    #[arg(long, default_value_t = 0.15)]
    pub test: f64,
    /// Down-sample every year to this many documents first.
    #[arg(long)]
    pub per_year_size: Option<usize>,
    /// Label distribution for down-sampling, e.g. `neg=0.5,pos=0.5`.
    /// Defaults to the distribution of the whole dataset.
    #[arg(long, requires = "per_year_size")]
    pub label_dist: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PartChoice {
    All,
    Train,
    Dev,
    Test,
}

#[derive(Debug, Args)]
pub struct VocabArgs {
    /// Directory of split files.
    #[arg(long)]
    pub splits: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Which partition forms each year's vocabulary.
    #[arg(long, value_enum, default_value = "all")]
    pub part: PartChoice,
    /// Ignore terms seen fewer than this many times in a year.
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
}

#[derive(Debug, Args)]
pub struct LexArgs {
    #[arg(long)]
    pub splits: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated: familiarity, jaccard, tfidf_similarity, information_rate.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "familiarity,jaccard,tfidf_similarity,information_rate"
    )]
    pub metrics: Vec<String>,
    /// Logarithm base for the information rate.
    #[arg(long, default_value_t = 2.0)]
    pub base: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelChoice {
    Mnb,
    Logreg,
    Svm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FeatureChoice {
    Tfidf,
    Counts,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub splits: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Native classifier to train on every year.
    #[arg(long, value_enum, conflicts_with = "predictions")]
    pub model: Option<ModelChoice>,
    /// Prediction file or directory of prediction files; repeat once per run.
    #[arg(long)]
    pub predictions: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "tfidf")]
    pub features: FeatureChoice,
    /// Additive smoothing for naive Bayes.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Label counted as positive for TP/FP rates; defaults to the last
    /// label in sorted order.
    #[arg(long)]
    pub positive_label: Option<String>,
    /// Also write each year's fitted model as JSON under `models/`.
    #[arg(long)]
    pub save_models: bool,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Metrics CSV written by `lexmetrics`.
    #[arg(long)]
    pub metrics: PathBuf,
    /// Pairs CSV written by `evaluate`.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Write nan rows for metrics that cannot be correlated instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    /// Embedding manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory of `<year>.<ext>` tagged files; aspects are extracted from
    /// them. Without it every aspect of the pivot table is ranked.
    #[arg(long, requires = "lexicon")]
    pub tagged: Option<PathBuf>,
    /// Opinion lexicon, one term per line.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Pattern file; the built-in set is used when omitted.
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    /// Pivot year; defaults to the earliest manifest year.
    #[arg(long)]
    pub pivot: Option<i32>,
    /// Skip aspects missing from the pivot year or with fewer than two
    /// similarity values, recording a warning.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output documents file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: DocFormat,
    #[arg(long, default_value_t = 2015)]
    pub first_year: i32,
    #[arg(long, default_value_t = 6)]
    pub years: usize,
    #[arg(long, default_value_t = 2000)]
    pub docs_per_year: usize,
    /// Fraction of class vocabulary replaced each year.
    #[arg(long, default_value_t = 0.15)]
    pub replace: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(subcommand)]
    pub target: ValidateTarget,
}

#[derive(Debug, Subcommand)]
pub enum ValidateTarget {
    /// Prediction files against a split directory, including coverage.
    Predictions {
        #[arg(long)]
        splits: PathBuf,
        /// Prediction files or directories; each is one run.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// An embedding manifest and every table it lists.
    Embeddings { manifest: PathBuf },
    /// A split directory.
    Splits { dir: PathBuf },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<chronoeval::Error>() {
            return if e.is_io() { 1 } else { 2 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    2
}

/// The error chain on one line, skipping causes already quoted by their
/// parent.
fn describe(err: &anyhow::Error) -> String {
    let mut message = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if message.contains(&text) {
            continue;
        }
        if !message.is_empty() {
            message.push_str(": ");
        }
        message.push_str(&text);
    }
    message
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(summary) => {
            if !summary.is_empty() {
                eprintln!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
