use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Hermite degree {degree} exceeds the supported cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(
        "no convergence after {iterations} iterations (last residual {residual:e}): {context}"
    )]
    Convergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable short tag used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DegreeOverflow { .. } => "degree_overflow",
            Error::Domain(_) => "domain",
            Error::Numeric(_) => "numeric",
            Error::Convergence { .. } => "convergence",
            Error::Resource(_) => "resource",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
