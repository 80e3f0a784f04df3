//! Hard validation shortcuts for interactive environments.
//!
//! They run before any backend validator: task completion certifies the whole
//! remaining plan, an action the engine rejected fails outright, and the goal
//! cannot be certified while the task is still incomplete.

use sdp_core::{Predicate, ValidationVerdict};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationShortcutConfig {
    pub completion_certifies_all: bool,
    pub rejected_action_fails: bool,
    pub goal_requires_completion: bool,
}

impl Default for ValidationShortcutConfig {
    fn default() -> Self {
        Self {
            completion_certifies_all: true,
            rejected_action_fails: true,
            goal_requires_completion: true,
        }
    }
}

/// What the environment adapter extracted from one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvSignal {
    pub done: bool,
    pub rejected: bool,
    pub score: f64,
}

/// Returns a verdict when a shortcut applies, `None` to defer to the backend.
pub fn apply_shortcuts(
    config: &ValidationShortcutConfig,
    signal: &EnvSignal,
    tail: &[Predicate],
) -> Option<ValidationVerdict> {
    if signal.done && config.completion_certifies_all {
        return Some(ValidationVerdict::new(
            tail.len(),
            "task complete: all remaining predicates certified",
        ));
    }
    if signal.rejected && config.rejected_action_fails {
        return Some(ValidationVerdict::reject("the environment rejected the action"));
    }
    if config.goal_requires_completion && !signal.done && tail.first().is_some_and(|p| p.is_goal) {
        return Some(ValidationVerdict::reject(
            "goal predicate is at the head but the task is not complete",
        ));
    }
    None
}

/// Caps a backend verdict so it never cascades into the goal predicate.
pub fn cap_before_goal(mut verdict: ValidationVerdict, tail: &[Predicate]) -> ValidationVerdict {
    let limit = tail.iter().take_while(|p| !p.is_goal).count();
    if verdict.k > limit {
        verdict.k = limit;
    }
    verdict
}
