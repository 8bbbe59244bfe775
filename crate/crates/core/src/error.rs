use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("backward requires a scalar root, got shape {0:?}")]
    NonScalarRoot((usize, usize)),

    #[error("softmax group {0} is empty")]
    EmptyGroup(usize),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("edge {index} references missing node {node} (graph has {count} nodes)")]
    DanglingEndpoint {
        index: usize,
        node: usize,
        count: usize,
    },

    #[error("node {node}: attribute length {got} does not match dimension {expected} of type {node_type}")]
    DimensionMismatch {
        node: usize,
        node_type: usize,
        expected: usize,
        got: usize,
    },

    #[error("duplicate triple ({0}, {1}, {2})")]
    DuplicateTriple(usize, usize, usize),

    #[error("id out of range: {0}")]
    OutOfRange(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),

    #[error("corruption retry budget exhausted for ({0}, {1}, {2})")]
    RetryBudget(usize, usize, usize),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("non-finite loss at epoch {epoch}: {dump}")]
    NonFiniteLoss { epoch: usize, dump: String },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 1 for bad input or configuration, 2 for failures
    /// while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::DanglingEndpoint { .. }
            | Error::DimensionMismatch { .. }
            | Error::DuplicateTriple(..)
            | Error::OutOfRange(_)
            | Error::Config(_)
            | Error::Infeasible(_)
            | Error::Checkpoint(_)
            | Error::Io { .. }
            | Error::Json(_) => 1,
            Error::ShapeMismatch { .. }
            | Error::NonScalarRoot(_)
            | Error::EmptyGroup(_)
            | Error::RetryBudget(..)
            | Error::Metric(_)
            | Error::NonFiniteLoss { .. } => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
