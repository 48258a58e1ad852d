use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("degenerate effective channel for device {device} (|f^H h| = {magnitude:e})")]
    DegenerateChannel { device: usize, magnitude: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid transmit plan: {0}")]
    InvalidPlan(String),

    #[error("exhaustive search over {candidates} configurations exceeds the limit of {limit}")]
    SearchTooLarge { candidates: f64, limit: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("no trace data found in {0}")]
    NoData(PathBuf),

    #[error("trace schema mismatch in {path}: {detail}")]
    Schema { path: PathBuf, detail: String },

    #[error("plot rendering failed: {0}")]
    Plot(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by an invalid configuration file or value.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            found,
        })
    }
}
