use std::path::PathBuf;

use crate::objective::LossBreakdown;

/// Errors produced by the reconstruction toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown sketch style `{0}`")]
    UnknownStyle(String),
    #[error("loss term `{0}` is not finite")]
    NonFiniteTerm(&'static str),
    #[error("fit diverged at iteration {iteration}")]
    Diverged {
        iteration: usize,
        history: Box<Vec<LossBreakdown>>,
    },
    #[error("malformed container at byte offset {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("texture library is empty")]
    EmptyLibrary,
    #[error("mesh has no uv coordinates")]
    MissingUv,
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(what: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            what,
            expected,
            actual,
        }
    }
}
