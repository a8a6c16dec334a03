use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("channel budget k={k} exceeds the {channels} available channels")]
    BudgetExceedsChannels { k: usize, channels: usize },

    #[error("channel budget must be at least 1")]
    ZeroBudget,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("geometry {h}x{w} is not divisible by the patch downsample factor {factor}")]
    Geometry { h: u32, w: u32, factor: u32 },

    #[error("invalid telemetry: {0}")]
    InvalidTelemetry(String),

    #[error("invalid link: {0}")]
    InvalidLink(String),

    #[error("latency out of domain: {0}")]
    Domain(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    /// A configuration constraint was violated; `key` is the dotted path.
    #[error("invalid value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by invalid user input rather than by the
    /// environment (files, permissions).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Csv { .. } | Error::Format { .. })
    }
}
