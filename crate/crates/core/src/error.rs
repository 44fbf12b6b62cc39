use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A metric has no value on this input (e.g. empty token list).
    #[error("metric `{metric}` is undefined: {reason}")]
    UndefinedMetric {
        metric: &'static str,
        reason: &'static str,
    },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("provider error at {endpoint}: {reason}")]
    Provider { endpoint: String, reason: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn undefined(metric: &'static str, reason: &'static str) -> Self {
        Error::UndefinedMetric { metric, reason }
    }

    /// Process exit code used by the CLI: 2 for data errors, 3 for I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}
