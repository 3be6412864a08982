//! Error type shared by every module of the crate.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::FeatureId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature {feature} is out of range for a model with {num_features} features")]
    FeatureOutOfRange {
        feature: FeatureId,
        num_features: usize,
    },

    #[error("non-finite value {value} for {what}")]
    NonFinite { what: String, value: f64 },

    #[error("duplicate feature id {0}")]
    DuplicateFeature(FeatureId),

    #[error("duplicate instance id {0}")]
    DuplicateInstance(u64),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("search budget exceeded: {required} subset evaluations needed, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("exact Shapley limited to {limit} players, game has {players}; use the Monte Carlo estimator")]
    ExactLimitExceeded { players: usize, limit: usize },

    #[error("cannot normalize: total attribution is zero")]
    DegenerateNormalization,

    #[error("rank correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: feature {feature} has value {value}, only binary value 1 is allowed")]
    BinaryViolation {
        path: PathBuf,
        line: usize,
        feature: u64,
        value: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
