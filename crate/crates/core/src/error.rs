use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed ENVI header or config text.
    #[error("parse error: {0}")]
    Parse(String),

    /// A payload or list whose length disagrees with the declared layout.
    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    /// A value outside the range its type or contract allows.
    #[error("out of range: {0}")]
    Range(String),

    /// An argument violating an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Numerical breakdown (singular matrix, non-convergence).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A config key holding an illegal value.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    /// An artifact a pipeline stage needs has not been produced yet.
    #[error("missing artifact {path:?}; run stage `{stage}` first")]
    Dependency { stage: String, path: PathBuf },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}
