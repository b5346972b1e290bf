use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("invalid sampling weights: {0}")]
    InvalidWeights(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A kernel was asked to project onto a zero row or column.
    #[error("zero-norm {kind} {index} selected")]
    ZeroNorm { kind: &'static str, index: usize },

    #[error("recorded column stream exhausted after {0} steps")]
    RecordExhausted(usize),

    #[error("SVD did not converge")]
    SvdFailure,

    #[error("parse error in {path:?} line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
