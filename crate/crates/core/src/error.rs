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

    /// A malformed or invalid line in an input file.
    #[error("{file}:{line}: {reason}")]
    Parse { file: String, line: usize, reason: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("degenerate probability vector")]
    DegenerateProbabilities,

    #[error("read orphaned by zero probabilities (equivalence class {class})")]
    OrphanedRead { class: usize },

    #[error("numerical failure in gene {gene}: {reason}")]
    Numerical { gene: String, reason: String },

    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: String, iterations: usize },
}

impl Error {
    pub(crate) fn parse(file: &str, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            file: file.to_string(),
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures that come from arithmetic rather than input validation.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateProbabilities
                | Error::OrphanedRead { .. }
                | Error::Numerical { .. }
                | Error::NoConvergence { .. }
        )
    }
}
