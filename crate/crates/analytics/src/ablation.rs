use std::collections::BTreeMap;

use sdp_core::{Termination, TrajectoryArtifact};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const OPTIMISM_CAVEAT: &str = "Replay estimates assume the recorded actions and observations would not change once a \
mechanism is removed. Unchecked errors usually compound, so these figures are an optimistic bound on the true ablation effect.";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AblationError {
    #[error("artifact `{0}` has no certified steps")]
    NoCertifiedSteps(String),
    #[error("no score for task `{0}`")]
    ScoreMismatch(String),
    #[error("score for task `{task}` is {score}; scores must be finite and non-negative")]
    BadScore { task: String, score: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Validate,
    Replan,
    Cascade,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [Mechanism::Validate, Mechanism::Replan, Mechanism::Cascade];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Validate => "validate",
            Mechanism::Replan => "replan",
            Mechanism::Cascade => "cascade",
        }
    }
}

/// Certified steps whose first attempt at their cursor was the certifying
/// one, over all certified steps.
pub fn action_fidelity(a: &TrajectoryArtifact) -> Result<f64, AblationError> {
    let m = a.transitions.len();
    if m == 0 {
        return Err(AblationError::NoCertifiedSteps(a.task_id.clone()));
    }
    let first_try = a
        .transitions
        .iter()
        .filter(|t| {
            a.attempts
                .iter()
                .find(|at| at.cursor == t.from_cursor)
                .is_some_and(|at| at.step_index == t.step_index)
        })
        .count();
    Ok(first_try as f64 / m as f64)
}

pub fn ablate_validate(score: f64, f: f64) -> f64 {
    score * f
}

/// Where the stall cursor for `r` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StallSource {
    /// No budget exhaustion; r = 1.
    NoStall,
    /// The first replan event.
    FirstReplan,
    /// Budget exhausted with no replans allowed; the episode ended there.
    ReplansExhausted,
    /// No exhaustion, but the step cap ended the run. Not a stall in the
    /// strict sense, so it is flagged.
    StepCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixRatio {
    pub r: f64,
    pub stall_cursor: Option<usize>,
    pub plan_length: usize,
    pub source: StallSource,
    /// More than one exhaustion happened; only the first counts.
    pub multiple_exhaustions: bool,
}

/// `n` is the initial plan's length: the first exhaustion always happens
/// before any replan, under that plan.
pub fn certified_prefix_ratio(a: &TrajectoryArtifact) -> PrefixRatio {
    let n = a.initial_plan_length();
    let ratio = |c: usize| if n == 0 { 0.0 } else { (c as f64 / n as f64).min(1.0) };
    let exhausted_at_end = matches!(a.termination, Termination::ReplansExhausted { .. });
    let exhaustions = a.replan_events.len() + usize::from(exhausted_at_end);
    let (cursor, source) = match (a.replan_events.first(), &a.termination) {
        (Some(e), _) => (Some(e.cursor), StallSource::FirstReplan),
        (None, Termination::ReplansExhausted { cursor }) => (Some(*cursor), StallSource::ReplansExhausted),
        (None, Termination::StepCapReached { cursor }) if !a.goal_certified => (Some(*cursor), StallSource::StepCap),
        _ => (None, StallSource::NoStall),
    };
    PrefixRatio {
        r: cursor.map_or(1.0, ratio),
        stall_cursor: cursor,
        plan_length: n,
        source,
        multiple_exhaustions: exhaustions > 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeCount {
    pub extra_steps: usize,
    pub recorded_steps: usize,
    pub budget: usize,
    pub complete: bool,
    /// 1 when complete, otherwise budget / (recorded + extra).
    pub proportional_score_factor: f64,
}

pub fn cascade_extra_steps(a: &TrajectoryArtifact, budget: usize) -> CascadeCount {
    let extra: usize = a.transitions.iter().map(|t| t.cascade_depth.saturating_sub(1)).sum();
    let recorded = a.steps();
    let total = recorded + extra;
    let complete = total <= budget;
    CascadeCount {
        extra_steps: extra,
        recorded_steps: recorded,
        budget,
        complete,
        proportional_score_factor: if complete { 1.0 } else { budget as f64 / total as f64 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEstimate {
    pub task_id: String,
    pub mechanism: Mechanism,
    pub original_score: f64,
    pub conversion_factor: f64,
    pub estimated_score: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismMean {
    pub mechanism: Mechanism,
    pub original_score: f64,
    pub estimated_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationEstimate>,
    pub means: Vec<MechanismMean>,
    pub caveat: String,
}

/// One row per (artifact, mechanism) plus per-mechanism means. The cascade
/// budget is each artifact's own global step cap.
pub fn ablate(artifacts: &[TrajectoryArtifact], scores: &BTreeMap<String, f64>) -> Result<AblationReport, AblationError> {
    let mut rows = Vec::with_capacity(artifacts.len() * 3);
    for a in artifacts {
        let score = *scores.get(&a.task_id).ok_or_else(|| AblationError::ScoreMismatch(a.task_id.clone()))?;
        if !score.is_finite() || score < 0.0 {
            return Err(AblationError::BadScore { task: a.task_id.clone(), score });
        }
        let row = |mechanism, factor: f64, note: String| AblationEstimate {
            task_id: a.task_id.clone(),
            mechanism,
            original_score: score,
            conversion_factor: factor,
            estimated_score: score * factor,
            note,
        };
        match action_fidelity(a) {
            Ok(f) => rows.push(row(Mechanism::Validate, f, String::new())),
            // Nothing was certified, so nothing survives without Validate either.
            Err(_) => rows.push(row(Mechanism::Validate, 0.0, "no certified steps".into())),
        }
        let r = certified_prefix_ratio(a);
        let mut note = match r.source {
            StallSource::StepCap => "no budget exhaustion; step-cap cursor used".to_string(),
            _ => String::new(),
        };
        if r.multiple_exhaustions {
            if !note.is_empty() {
                note.push_str("; ");
            }
            note.push_str("several exhaustions; first used");
        }
        rows.push(row(Mechanism::Replan, r.r, note));
        let c = cascade_extra_steps(a, a.config.global_step_cap);
        let note = if c.complete { String::new() } else { format!("incomplete: {} steps over a cap of {}", c.recorded_steps + c.extra_steps, c.budget) };
        rows.push(row(Mechanism::Cascade, c.proportional_score_factor, note));
    }
    let means = Mechanism::ALL
        .iter()
        .map(|&m| {
            let sel: Vec<&AblationEstimate> = rows.iter().filter(|r| r.mechanism == m).collect();
            let n = sel.len().max(1) as f64;
            MechanismMean {
                mechanism: m,
                original_score: sel.iter().map(|r| r.original_score).sum::<f64>() / n,
                estimated_score: sel.iter().map(|r| r.estimated_score).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(AblationReport { rows, means, caveat: OPTIMISM_CAVEAT.into() })
}
