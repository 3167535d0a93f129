use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed array file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("NaN value at row {row}, column {col}")]
    NaN { row: usize, col: usize },

    #[error("softmax row {row}: row sum {sum} exceeds tolerance")]
    RowSum { row: usize, sum: f64 },

    #[error("softmax row {row}: entry {value} outside [0, 1]")]
    ProbabilityRange { row: usize, value: f64 },

    #[error("label {label} at position {index} out of range for {classes} classes")]
    LabelRange {
        index: usize,
        label: i64,
        classes: usize,
    },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid layer partition: {0}")]
    Layers(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("no misclassified tests; APFD is undefined")]
    NoFaults,

    #[error("serialization failed: {0}")]
    Serialization(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Attaches a label (an approach or file name) to an error.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by the experiment configuration rather than
    /// by the data it points at.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Context { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
