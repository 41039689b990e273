use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed protograph or alist text. `line` is 1-based.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid protograph: {0}")]
    InvalidProtograph(String),

    #[error("lifting failed: {0}")]
    Lift(String),

    #[error("zero-rate code")]
    ZeroRate,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no threshold in range [{lo_db}, {hi_db}] dB")]
    NoThreshold { lo_db: f64, hi_db: f64 },

    #[error("non-finite state-node sample")]
    NonFiniteSample,

    #[error("spreading: {0}")]
    Spreading(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
