use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the geometry, optimizer, estimators and data pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid core factor: {0}")]
    InvalidCoreFactor(String),

    #[error("invalid Grassmann representative: {0}")]
    InvalidBasis(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular preconditioner (eigenvalue sum {0:e})")]
    SingularPreconditioner(f64),

    #[error("retraction breakdown: updated basis lost rank")]
    RetractionBreakdown,

    #[error("invalid start: cost at the initial point is {0}")]
    InvalidStart(f64),

    #[error("invalid rank {rank}: must satisfy 1 <= rank <= {max}")]
    InvalidRank { rank: usize, max: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("invalid band {lo} to {hi} Hz for sampling rate {fs} Hz")]
    InvalidBand { lo: f64, hi: f64, fs: f64 },

    #[error(
        "cannot decimate {fs} Hz to {target} Hz: ratio is not an integer, resample offline first"
    )]
    NonIntegerDecimation { fs: f64, target: f64 },

    #[error("invalid fold count {k} for {trials} trials")]
    InvalidFolds { k: usize, trials: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

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

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical method itself rather than of its inputs.
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            Error::InvalidStart(_) | Error::SingularPreconditioner(_) | Error::RetractionBreakdown
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
