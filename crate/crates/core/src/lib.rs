//! Core of the state-centric decision process runtime.
//!
//! An agent commits to a plan of checkable predicates ending at a goal, then
//! steps through it: Realize picks an action for the head predicate, the
//! environment answers, and Validate reports how many head predicates the
//! observation certifies. Certified predicates never roll back; repeated
//! failure at one predicate triggers Replan, which replaces only the tail.
//! Each episode yields a [`TrajectoryArtifact`].

pub mod artifact;
pub mod config;
pub mod engine;
pub mod error;
pub mod types;

pub use artifact::{read_jsonl, write_jsonl, Termination, Timing, TrajectoryArtifact, FORMAT_VERSION};
pub use config::EngineConfig;
pub use engine::{
    advance, build_plan, run_episode, Environment, EpisodeError, EpisodeTask, Finalization,
    Operators, ProposeInput, RealizeInput, TrajectoryView,
};
pub use error::{
    CascadeOverrun, ConfigError, OperatorError, OperatorFailure, OperatorKind, PersistError,
    PlanError,
};
pub use types::{
    Action, AttemptRecord, CertifiedState, CertifiedTransition, Observation, PlanTail, Predicate,
    PredicateId, Provenance, ReplanEvent, ValidationVerdict,
};
