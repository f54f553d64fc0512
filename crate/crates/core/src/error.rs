use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The propagated norm left the unit sphere by more than the allowed drift.
    #[error("numerical failure: norm drift {drift:e} exceeds {limit:e} (grid too coarse?)")]
    NumericalFailure { drift: f64, limit: f64 },

    #[error("bracket [{lo}, {hi}] (units of pi) does not enclose an interior minimum")]
    Bracket { lo: f64, hi: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
