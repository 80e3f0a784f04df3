//! A small interactive text world for exercising cascades and replans
//! without an external simulator.
//!
//! Worlds are declared in JSON (rooms, symmetric adjacency, objects with
//! placements, rules, milestones summing to 100, a goal condition and an
//! optional bundled plan). The verb grammar is fixed: go, open, take, put,
//! activate, deactivate, focus, look, inventory. Anything outside the
//! current valid-action set gets [`REJECTION`] and changes nothing.

pub mod adapter;
pub mod sim;
pub mod world;

pub use adapter::*;
pub use sim::{
    compute_score, describe_room, is_valid, parse_command, step_world, valid_commands, Command, Location, ObjectState,
    StepOutcome, StepSignal, WorldState, HISTORY_LEN, REJECTION,
};
pub use world::*;
