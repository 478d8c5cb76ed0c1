use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Bayes normalizer is zero for action {action}, observation {observation}")]
    DegenerateNormalizer { action: usize, observation: usize },

    #[error("invalid observation model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown circuit label `{0}`")]
    UnknownLabel(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("zero vector passed to cosine similarity")]
    ZeroVector,

    #[error("index violation: {0}")]
    Index(String),

    #[error("hypothesis set violation: {0}")]
    SubsetViolation(String),

    #[error("environment inconsistency: {0}")]
    EnvironmentInconsistency(String),

    #[error("missing signal: {0}")]
    MissingSignal(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
