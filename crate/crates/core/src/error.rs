use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator, the estimators and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a numerical operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input rejected by one of the protocol's validation rules.
    #[error("validation error: {0}")]
    Validation(String),

    /// A config or topic file could not be parsed.
    #[error("{path}: line {line}, column {column}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    /// A CSV file does not match the documented schema.
    #[error("{path}: schema mismatch: {message}")]
    Schema { path: PathBuf, message: String },

    /// Design matrix is rank deficient in the named regressors.
    #[error("rank deficient design; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    /// An estimator is undefined on the supplied data.
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("{path}: {source}")]
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

    /// Process exit code: 1 for validation-type failures, 2 for IO failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
