//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible shapes passed to a linear-algebra or network operation.
    #[error("shape mismatch in {op}: {details}")]
    ShapeMismatch { op: &'static str, details: String },

    /// A precondition on an argument value was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// NaN or infinity where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    /// Malformed embedding file; `line` is 1-based.
    #[error("embedding file error at line {line}: {msg}")]
    EmbeddingParse { line: usize, msg: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Training produced a NaN loss; carries a diagnostic dump.
    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("oracle check failed: {0}")]
    Oracle(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, details: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            op,
            details: details.into(),
        }
    }
}
