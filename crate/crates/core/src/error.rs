use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while validating inputs or running scans and oracle checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("invalid lattice geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid atomic state: {0}")]
    InvalidState(String),

    #[error("invalid moment pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid cavity parameters: {0}")]
    InvalidCavity(String),

    /// An operation that is only defined for two traveling-wave modes was
    /// handed a standing wave.
    #[error("{0} requires two traveling-wave modes")]
    StandingWave(&'static str),

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: &'static str, message: String },

    #[error(
        "enumeration needs {count} occupation configurations, above the cap of {cap}; \
         raise --cap or use --mc SAMPLES for a Monte Carlo estimate"
    )]
    CapExceeded { count: u128, cap: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn config(field: &'static str, message: impl Into<String>) -> Self {
        Error::Config {
            field,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
