use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("column `{0}` has zero sample variance")]
    DegenerateColumn(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("simplex numeric failure after {iterations} iterations")]
    NumericFailure { iterations: usize },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("instance too large for exhaustive search: {0}")]
    Size(String),

    #[error("all cross-validation folds were skipped")]
    NoUsableFolds,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
