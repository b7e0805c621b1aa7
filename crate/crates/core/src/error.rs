use std::path::PathBuf;

/// Errors raised by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("derivative of order {order} requested from a {stages}-stage cascade (needs order <= stages - 2)")]
    Continuity { order: usize, stages: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state error: {0}")]
    State(String),

    #[error("jet is missing partial {0}")]
    MissingPartial(String),

    #[error("kernel is not unimodal on [0, {upper}]: {maxima} local maxima found")]
    NotUnimodal { upper: f64, maxima: usize },

    #[error("frame {index}: {message}")]
    Frame { index: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for this error: 2 config, 3 I/O, 4 numeric precondition.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) => 2,
            Error::Io { .. } | Error::Format { .. } | Error::Frame { .. } => 3,
            Error::Continuity { .. }
            | Error::Domain(_)
            | Error::State(_)
            | Error::MissingPartial(_)
            | Error::NotUnimodal { .. } => 4,
        }
    }
}
