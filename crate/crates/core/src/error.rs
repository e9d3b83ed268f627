use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data that is well-formed but cannot be processed (degenerate
    /// sizes, empty masks, records that would lose their myocardium).
    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("degenerate landmarks: {0}")]
    DegenerateLandmarks(String),

    #[error("ambiguous anatomy: {0}")]
    AmbiguousAnatomy(String),

    #[error("mask topology: {0}")]
    Topology(String),

    #[error("distance field is infinite: mask has no background pixel")]
    NoBackground,

    #[error("scar candidate region is empty")]
    EmptyCandidate,

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("caption parse error at byte {position}: {message}")]
    CaptionParse { position: usize, message: String },

    #[error("{}:{line}: {message}", path.display())]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
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

    pub(crate) fn rejected(msg: impl Into<String>) -> Self {
        Error::RejectedInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: msg.into(),
        }
    }
}
