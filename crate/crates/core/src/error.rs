use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("label `{label}` has {available} documents but {requested} were requested")]
    Capacity {
        label: String,
        requested: usize,
        available: usize,
    },

    #[error("label `{label}` has only {count} documents; stratified splitting needs at least 3")]
    Stratification { label: String, count: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("unsupported label set: {0}")]
    UnsupportedLabel(String),

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("empty vocabulary: no terms in the training documents")]
    EmptyVocabulary,

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("prediction coverage incomplete at gap {gap}: pair {train_year}->{test_year} is missing {missing} of {expected} test documents")]
    Coverage {
        gap: i32,
        train_year: i32,
        test_year: i32,
        missing: usize,
        expected: usize,
    },

    #[error("insufficient data: {n} usable points, at least 3 are required")]
    InsufficientData { n: usize },

    #[error("undefined correlation: {0} has zero variance")]
    UndefinedCorrelation(&'static str),

    #[error("unknown POS tag `{0}`")]
    Tagset(String),

    #[error("undefined similarity: zero vector")]
    UndefinedSimilarity,

    #[error("aspect `{aspect}` is missing from the pivot year {pivot_year}")]
    MissingPivot { aspect: String, pivot_year: i32 },

    #[error("aspect `{aspect}` has {n} similarity values; variance ranking needs at least 2")]
    InsufficientSeries { aspect: String, n: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure came from the filesystem rather than from the
    /// content of the inputs.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }
}
