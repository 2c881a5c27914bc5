use std::path::PathBuf;

use crate::rng::Lane;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A design input violates its schema or constraints.
    #[error("configuration error: {key}: {message}")]
    Config { key: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A posterior computation failed for one repetition.
    #[error("numerical failure in {lane}: {message}")]
    Numerical { lane: Lane, message: String },

    #[error("infeasible design: {message}")]
    Infeasible { message: String, largest_probe: Option<f64> },

    #[error("unsupported operation for model `{model}`: {message}")]
    Capability { model: &'static str, message: String },

    #[error("out of numerical range: {0}")]
    Range(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }

    pub(crate) fn argument(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }

    pub(crate) fn infeasible(message: impl Into<String>, largest_probe: Option<f64>) -> Self {
        Error::Infeasible { message: message.into(), largest_probe }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Argument(_) | Error::Io { .. } | Error::Serialization(_) => 1,
            Error::Infeasible { .. } => 2,
            Error::Numerical { .. } | Error::Range(_) | Error::Capability { .. } => 3,
        }
    }

    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::Argument(_) => "argument",
            Error::Numerical { .. } => "numerical",
            Error::Infeasible { .. } => "infeasible",
            Error::Capability { .. } => "capability",
            Error::Range(_) => "range",
            Error::Io { .. } => "io",
            Error::Serialization(_) => "serialization",
        }
    }
}
