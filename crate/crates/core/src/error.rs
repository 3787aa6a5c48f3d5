use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("feature vector must have at least one component")]
    EmptyVector,

    #[error("non-finite value {value} at component {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid scale: {0}")]
    InvalidScale(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("cannot fit an empty region")]
    EmptyRegion,

    #[error("region {0} has no fitted probability space")]
    NotFitted(usize),

    #[error("invalid k = {k} for {n} points")]
    InvalidK { k: usize, n: usize },

    #[error("insufficient input: {0}")]
    InsufficientInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("parse error at line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: u64,
        column: Option<usize>,
        message: String,
    },

    #[error("unsupported model version {found} (expected {expected})")]
    Version { found: String, expected: u32 },

    #[error("model format error at `{path}`: {message}")]
    Format { path: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
