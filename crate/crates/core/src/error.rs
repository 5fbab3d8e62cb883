use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected} entries, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("could not sample connected graph on {m} nodes with p_c={p_c} after {attempts} draws")]
    DisconnectedGraph { m: usize, p_c: f64, attempts: u32 },

    #[error("mixing matrix invariant violated: {0}")]
    MixingInvariant(String),

    #[error("function evaluation failed for agent {agent}: {reason}")]
    EvaluationFailed { agent: usize, reason: String },

    #[error("poll direction {direction} failed: {source}")]
    PollFailed {
        direction: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("agent {agent} is missing the copy of neighbor {neighbor}")]
    MissingNeighbor { agent: usize, neighbor: usize },

    #[error("unknown problem `{name}`; registered problems: {known}")]
    UnknownProblem { name: String, known: String },

    #[error("unknown solver `{name}`; valid solvers: {known}")]
    UnknownSolver { name: String, known: String },

    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("degenerate profile input: {0}")]
    Profile(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
