use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::TrajectoryArtifact;
use crate::types::PredicateId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("plan is empty")]
    EmptyPlan,
    #[error("plan does not end at the goal predicate")]
    MissingGoal,
    #[error("plan contains {0} goal predicates")]
    MultipleGoals(usize),
    #[error("predicate id {0} appears more than once in the plan")]
    DuplicateId(PredicateId),
    #[error("propose did not reach the goal within {cap} predicates")]
    PlanLengthExceeded { cap: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Error raised by an operator or environment implementation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperatorError {
    #[error("could not parse model output: missing field `{0}`")]
    Parse(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("{0}")]
    Adapter(String),
}

impl OperatorError {
    pub fn adapter(msg: impl Into<String>) -> Self {
        Self::Adapter(msg.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cascade of {k} overruns the {remaining} remaining predicates")]
pub struct CascadeOverrun {
    pub k: usize,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

/// Which stage of the loop raised a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Propose,
    Realize,
    Validate,
    Replan,
    Environment,
    Finalize,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Propose => "propose",
            Self::Realize => "realize",
            Self::Validate => "validate",
            Self::Replan => "replan",
            Self::Environment => "environment",
            Self::Finalize => "finalize",
        };
        f.write_str(s)
    }
}

/// An operator error, with the loop position it happened at and the
/// artifact assembled up to that point.
#[derive(Debug, Clone, Error)]
#[error("{operator} failed at cursor {cursor} after {attempts} attempts: {message}")]
pub struct OperatorFailure {
    pub operator: OperatorKind,
    pub cursor: usize,
    pub attempts: usize,
    pub message: String,
    pub artifact: Box<TrajectoryArtifact>,
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed artifact on line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported artifact format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
}
