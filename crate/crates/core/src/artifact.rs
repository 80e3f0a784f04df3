//! The trajectory artifact and its line-oriented JSON persistence.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::EngineConfig;
use crate::error::{OperatorKind, PersistError};
use crate::types::{AttemptRecord, CertifiedTransition, PlanTail, Predicate, ReplanEvent};

pub const FORMAT_VERSION: u32 = 1;

/// Why an episode stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Termination {
    GoalCertified,
    StepCapReached { cursor: usize },
    ReplansExhausted { cursor: usize },
    ReplanCeilingReached { cursor: usize },
    OperatorFailure {
        cursor: usize,
        operator: OperatorKind,
        message: String,
    },
}

/// Wall-clock data. Not part of the trajectory proper; zeroed by
/// [`TrajectoryArtifact::normalized`] before comparisons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u64,
    pub elapsed_ms: u64,
}

/// Everything one episode produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryArtifact {
    pub format_version: u32,
    pub task_id: String,
    pub config: EngineConfig,
    pub goal: Predicate,
    pub initial_state: Value,
    pub plans: Vec<PlanTail>,
    pub transitions: Vec<CertifiedTransition>,
    pub attempts: Vec<AttemptRecord>,
    pub replan_events: Vec<ReplanEvent>,
    pub goal_certified: bool,
    pub final_answer: Option<Value>,
    pub forced_finalization: bool,
    pub termination: Termination,
    pub timing: Timing,
}

impl TrajectoryArtifact {
    /// Cursor after the last transition.
    pub fn final_cursor(&self) -> usize {
        self.transitions.last().map_or(0, |t| t.to_cursor)
    }

    pub fn initial_plan_length(&self) -> usize {
        self.plans.first().map_or(0, PlanTail::len)
    }

    /// Length of the plan in force when the episode ended.
    pub fn plan_length(&self) -> usize {
        self.plans.last().map_or(0, PlanTail::full_length)
    }

    pub fn steps(&self) -> usize {
        self.attempts.len()
    }

    pub fn failed_attempts(&self) -> impl Iterator<Item = &AttemptRecord> {
        self.attempts.iter().filter(|a| a.failed())
    }

    /// Copy with wall-clock data cleared.
    pub fn normalized(&self) -> Self {
        Self {
            timing: Timing::default(),
            ..self.clone()
        }
    }

    /// Checks the structural invariants every emitted artifact satisfies.
    pub fn check_well_formed(&self) -> Result<(), String> {
        let mut cursor = 0;
        let mut certified = Vec::new();
        for t in &self.transitions {
            if t.from_cursor != cursor {
                return Err(format!(
                    "transition at step {} starts at {} but cursor is {}",
                    t.step_index, t.from_cursor, cursor
                ));
            }
            if t.cascade_depth == 0 || t.to_cursor != t.from_cursor + t.cascade_depth {
                return Err(format!("bad cascade accounting at step {}", t.step_index));
            }
            if t.certified.len() != t.cascade_depth {
                return Err(format!("certified ids mismatch at step {}", t.step_index));
            }
            certified.extend(t.certified.iter().cloned());
            cursor = t.to_cursor;
        }
        let depth_sum: usize = self.transitions.iter().map(|t| t.cascade_depth).sum();
        if depth_sum != self.final_cursor() {
            return Err("cascade depths do not sum to the final cursor".into());
        }
        let last_is_goal = self
            .transitions
            .last()
            .and_then(|t| t.certified.last())
            .is_some_and(|id| *id == self.goal.id);
        if last_is_goal != self.goal_certified {
            return Err("goal_certified disagrees with the last certified predicate".into());
        }
        for w in self.attempts.windows(2) {
            if w[1].step_index <= w[0].step_index {
                return Err("attempt steps are not increasing".into());
            }
        }
        if self.plans.is_empty() && !self.transitions.is_empty() {
            return Err("transitions without a plan".into());
        }
        Ok(())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("artifact serialization is infallible")
    }

    pub fn from_json_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Writes artifacts as JSON lines.
pub fn write_jsonl<'a, W: Write>(
    mut out: W,
    artifacts: impl IntoIterator<Item = &'a TrajectoryArtifact>,
) -> Result<(), PersistError> {
    for a in artifacts {
        out.write_all(a.to_json_line().as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads artifacts written by [`write_jsonl`], skipping blank lines and
/// rejecting unknown format versions.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<TrajectoryArtifact>, PersistError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let artifact = TrajectoryArtifact::from_json_line(&line)
            .map_err(|source| PersistError::Json { line: i + 1, source })?;
        if artifact.format_version != FORMAT_VERSION {
            return Err(PersistError::Version {
                found: artifact.format_version,
                expected: FORMAT_VERSION,
            });
        }
        out.push(artifact);
    }
    Ok(out)
}
