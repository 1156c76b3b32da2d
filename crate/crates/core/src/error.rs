use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The energy lies outside the range where the requested quantity is defined.
    #[error("energy {energy} outside domain: {reason}")]
    Domain { energy: f64, reason: String },

    /// `E` is numerically an eigenvalue of the isolated sample (Dirichlet resonance).
    #[error("Dirichlet resonance at E = {energy} (indicator {indicator:.3e})")]
    Resonance { energy: f64, indicator: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// |t_lr|^2 exceeded one by more than the admitted rounding slack.
    #[error("unitarity violation: transmission {0} > 1")]
    Unitarity(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Configuration rejected; `key` is the dotted path into the JSON document.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
