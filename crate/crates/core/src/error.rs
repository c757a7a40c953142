use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed scenario file: {0}")]
    Parse(String),

    /// A scenario field violates one of its invariants.
    #[error("invalid scenario: {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    /// Even the lowest MCS cannot close the link budget at this distance.
    #[error("station unreachable at {distance:.2} m: lowest MCS margin is {margin_db:.2} dB")]
    Unreachable { distance: f64, margin_db: f64 },

    /// Timing or load makes the configuration impossible (negative RAW, negative sleep).
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("unknown scenario `{name}` (builtins: {available})")]
    UnknownScenario { name: String, available: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("output error: {0}")]
    Output(String),
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::Validation { .. }
            | Error::Domain(_)
            | Error::UnknownScenario { .. }
            | Error::Io { .. } => 2,
            Error::Unreachable { .. } | Error::Infeasible(_) => 3,
            Error::Invariant(_) | Error::Output(_) => 4,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Output(e.to_string())
    }
}
