use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("storage error on {}: {source}", path.display())]
    Storage {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid machine configuration: {0}")]
    Config(String),

    #[error("malformed file {}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error("invalid input: {0}")]
    Validation(String),

    /// A message or edge addresses a node that the cursor has already passed.
    #[error("topological order violated at node {node}: {detail}")]
    TopologicalOrder { node: u64, detail: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal invariant failed: {0}")]
    Invariant(String),

    #[error("XML parse error at byte {offset}: {reason}")]
    Parse { offset: u64, reason: String },

    #[error("graph contains a cycle through node {0}")]
    Cycle(u64),
}

impl Error {
    pub(crate) fn storage(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Storage { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format { path: path.into(), reason: reason.into() }
    }
}
