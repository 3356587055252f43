use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the simulator and the distillation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A rate was requested whose denominator is zero.
    #[error("undefined rate: {0}")]
    UndefinedRate(&'static str),

    /// Parameter estimation has an empty pool (e.g. no single-photon events survive).
    #[error("estimation impossible: {0}")]
    EstimationImpossible(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("reconciliation aborted: {0}")]
    ReconciliationAborted(String),

    #[error("detector array mixes Geiger and linear modes")]
    MixedDetectorModes,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
