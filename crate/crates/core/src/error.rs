use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid sizing: {0}")]
    Sizing(String),

    #[error("grid mismatch: expected {expected} nodes, got {actual}")]
    GridMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("no bisection bracket found for amplitudes in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("{what} did not converge within {iterations} iterations (last change {last_change:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("missing reference ground state: {0}")]
    MissingReference(&'static str),

    #[error("time series is empty")]
    EmptySeries,

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code: 1 for configuration and usage problems, 2 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_)
            | Error::NoBracket { .. }
            | Error::NotConverged { .. }
            | Error::EmptySeries => 2,
            Error::Sizing(_)
            | Error::GridMismatch { .. }
            | Error::InvalidParameter { .. }
            | Error::MissingReference(_)
            | Error::Config(_)
            | Error::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
