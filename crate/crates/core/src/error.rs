use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the flakelex pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: bad label `{label}`")]
    BadLabel { row: usize, label: String },
    #[error("row {0}: empty body")]
    EmptyBody(usize),
    #[error("row {0}: empty qualified_name")]
    EmptyQualifiedName(usize),
    #[error("row {row}: {message}")]
    MalformedRecord { row: usize, message: String },
    #[error("corpus contains unknown labels and cannot be used for training")]
    UnlabeledTraining,
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("train fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),

    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("configuration mismatch: expected fingerprint {expected}, found {found}")]
    ConfigMismatch { expected: String, found: String },

    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("AUC requires both classes among the truth labels")]
    SingleClassAuc,
    #[error("information gain requires both classes among the labels")]
    SingleClassLabels,
    #[error("flaky-only evaluation received non-flaky test `{0}`")]
    NonFlakyPresent(String),

    #[error("unsupported model file: {0}")]
    ModelFormat(String),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
