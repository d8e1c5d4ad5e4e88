use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("topology needs at least {needed} nodes, got {got}")]
    TooFewNodes { needed: usize, got: usize },

    #[error("node index {index} out of range for topology with {len} nodes")]
    NodeIndex { index: usize, len: usize },

    #[error("invalid topology {id}: {}", .violations.join("; "))]
    InvalidTopology { id: String, violations: Vec<String> },

    #[error("duplicate generator label {0:?}")]
    DuplicateLabel(String),

    #[error("unknown generator label {0:?}")]
    UnknownLabel(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("population too small: need at least {needed} values, got {got}")]
    PopulationTooSmall { needed: usize, got: usize },

    #[error("feature {feature:?} has zero pooled standard deviation but differing means")]
    DegenerateFeature { feature: String },

    #[error("feature catalogue mismatch: {0}")]
    CatalogueMismatch(String),

    #[error("class {label:?} has {got} rows, need at least {needed}")]
    InsufficientRows {
        label: String,
        got: usize,
        needed: usize,
    },

    #[error("missing prerequisite {path} (run the {stage} stage first)")]
    MissingPrerequisite { path: PathBuf, stage: &'static str },

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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
