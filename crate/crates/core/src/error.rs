use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: no such file")]
    NoSuchFile { path: PathBuf },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("no rows")]
    NoRows,

    #[error("empty subset")]
    EmptySubset,

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("optimization diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("layer {layer}: {source}")]
    Layer {
        layer: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("eigensolver failed: {0}")]
    Eigen(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    /// Whether the error comes from numerical work rather than from bad
    /// input or the filesystem.
    pub fn is_computational(&self) -> bool {
        match self {
            Error::Divergence { .. } | Error::Eigen(_) => true,
            Error::Layer { source, .. } => source.is_computational(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
