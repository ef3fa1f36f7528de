use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The arguments are valid numbers but fall outside the hypotheses under
    /// which the requested formula holds.
    #[error("outside the admissible parameter regime: {0}")]
    Regime(String),
    #[error("singular evaluation: {0}")]
    Singularity(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("integrator failure at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },
    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input at {}: {reason}", path.display())]
    Parse { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
