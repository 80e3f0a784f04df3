//! Domain types: predicates, plans, actions, observations and verdicts.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::PlanError;

/// Stable opaque identifier of a predicate, unique within a plan.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredicateId(pub String);

impl PredicateId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PredicateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PredicateId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// A checkable natural-language condition; the unit of state.
///
/// `kind` is a free tag owned by the adapter that emitted the predicate and
/// `attrs` carries whatever structured data the adapter needs to check it
/// (a world condition, a sub-question, a trip slot).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub id: PredicateId,
    pub text: String,
    pub kind: String,
    pub is_goal: bool,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub attrs: Value,
}

impl Predicate {
    pub fn new(id: impl Into<String>, text: impl Into<String>, kind: impl Into<String>) -> Self {
        Self {
            id: PredicateId::new(id),
            text: text.into(),
            kind: kind.into(),
            is_goal: false,
            attrs: Value::Null,
        }
    }

    pub fn goal(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: PredicateId::new(id),
            text: text.into(),
            kind: "goal".to_string(),
            is_goal: true,
            attrs: Value::Null,
        }
    }

    pub fn with_attrs(mut self, attrs: Value) -> Self {
        self.attrs = attrs;
        self
    }
}

/// Where a plan tail came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Provenance {
    Initial,
    /// The `index`-th replan of the episode (1-based), issued at `cursor`.
    Replan { index: usize, cursor: usize },
}

/// The remaining predicate sequence from a cursor to the goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTail {
    pub predicates: Vec<Predicate>,
    pub provenance: Provenance,
}

impl PlanTail {
    /// Checks the tail shape: non-empty, exactly one goal and it is last,
    /// ids unique among themselves and disjoint from `certified`.
    pub fn new(
        predicates: Vec<Predicate>,
        provenance: Provenance,
        certified: &[Predicate],
    ) -> Result<Self, PlanError> {
        let Some(last) = predicates.last() else {
            return Err(PlanError::EmptyPlan);
        };
        if !last.is_goal {
            return Err(PlanError::MissingGoal);
        }
        let goals = predicates.iter().filter(|p| p.is_goal).count();
        if goals != 1 {
            return Err(PlanError::MultipleGoals(goals));
        }
        let mut seen: BTreeSet<&PredicateId> = certified.iter().map(|p| &p.id).collect();
        for p in &predicates {
            if !seen.insert(&p.id) {
                return Err(PlanError::DuplicateId(p.id.clone()));
            }
        }
        Ok(Self {
            predicates,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn start_cursor(&self) -> usize {
        match self.provenance {
            Provenance::Initial => 0,
            Provenance::Replan { cursor, .. } => cursor,
        }
    }

    /// Total plan length implied by this tail: certified prefix plus tail.
    pub fn full_length(&self) -> usize {
        self.start_cursor() + self.len()
    }
}

/// An environment action. `payload` is adapter-defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub payload: Value,
    pub rendered: String,
}

impl Action {
    pub fn new(payload: Value, rendered: impl Into<String>) -> Result<Self, crate::OperatorError> {
        let rendered = rendered.into();
        if rendered.trim().is_empty() {
            return Err(crate::OperatorError::Adapter(
                "action rendering must be non-empty".to_string(),
            ));
        }
        Ok(Self { payload, rendered })
    }

    /// Action whose payload is its own text.
    pub fn text(rendered: impl Into<String>) -> Result<Self, crate::OperatorError> {
        let rendered = rendered.into();
        Self::new(Value::String(rendered.clone()), rendered)
    }
}

/// Raw environment output. Only the validator ever receives one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub payload: Value,
    pub rendered: String,
}

impl Observation {
    pub fn new(payload: Value, rendered: impl Into<String>) -> Self {
        Self {
            payload,
            rendered: rendered.into(),
        }
    }

    pub fn text(rendered: impl Into<String>) -> Self {
        let rendered = rendered.into();
        Self {
            payload: Value::String(rendered.clone()),
            rendered,
        }
    }
}

/// Number of consecutive head predicates an observation satisfies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub k: usize,
    pub reason: String,
    /// Adapter annotation, e.g. a corrected citation.
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl ValidationVerdict {
    pub fn new(k: usize, reason: impl Into<String>) -> Self {
        Self {
            k,
            reason: reason.into(),
            detail: Value::Null,
        }
    }

    pub fn reject(reason: impl Into<String>) -> Self {
        Self::new(0, reason)
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn is_success(&self) -> bool {
        self.k >= 1
    }
}

/// One Realize → Env → Validate round. The history of these is append-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub step_index: usize,
    pub cursor: usize,
    pub target_predicate_id: PredicateId,
    pub action: Action,
    pub verdict: ValidationVerdict,
    pub reason: String,
}

impl AttemptRecord {
    pub fn failed(&self) -> bool {
        self.verdict.k == 0
    }
}

/// A certified `(s_t, a_t, s_{t+k})` transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedTransition {
    pub step_index: usize,
    pub from_cursor: usize,
    pub to_cursor: usize,
    pub cascade_depth: usize,
    pub action: Action,
    pub certified: Vec<PredicateId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplanEvent {
    pub cursor: usize,
    pub attempts_exhausted: usize,
    pub replan_index: usize,
}

/// The agent's certified state: the predicates certified so far plus the
/// adapter's context snapshot taken at the last certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedState {
    pub cursor: usize,
    pub certified: Vec<Predicate>,
    pub context: Value,
}

impl CertifiedState {
    pub fn initial(context: Value) -> Self {
        Self {
            cursor: 0,
            certified: Vec::new(),
            context,
        }
    }

    /// Key used by table-driven operators: last certified id, or `s0`.
    pub fn key(&self) -> String {
        self.certified
            .last()
            .map(|p| p.id.0.clone())
            .unwrap_or_else(|| "s0".to_string())
    }

    pub fn last(&self) -> Option<&Predicate> {
        self.certified.last()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(ids: &[&str]) -> Vec<Predicate> {
        let mut v: Vec<Predicate> = ids[..ids.len() - 1]
            .iter()
            .map(|id| Predicate::new(*id, format!("{id} holds"), "step"))
            .collect();
        v.push(Predicate::goal(ids[ids.len() - 1], "done"));
        v
    }

    #[test]
    fn plan_tail_requires_goal_last() {
        let mut preds = chain(&["a", "b", "g"]);
        assert!(PlanTail::new(preds.clone(), Provenance::Initial, &[]).is_ok());
        preds.swap(1, 2);
        assert_eq!(
            PlanTail::new(preds, Provenance::Initial, &[]).unwrap_err(),
            PlanError::MissingGoal
        );
        assert_eq!(
            PlanTail::new(vec![], Provenance::Initial, &[]).unwrap_err(),
            PlanError::EmptyPlan
        );
    }

    #[test]
    fn plan_tail_rejects_duplicate_and_certified_ids() {
        let preds = chain(&["a", "a", "g"]);
        assert!(matches!(
            PlanTail::new(preds, Provenance::Initial, &[]),
            Err(PlanError::DuplicateId(_))
        ));
        let certified = vec![Predicate::new("a", "a holds", "step")];
        assert!(matches!(
            PlanTail::new(chain(&["a", "g"]), Provenance::Initial, &certified),
            Err(PlanError::DuplicateId(_))
        ));
    }

    #[test]
    fn two_goals_rejected() {
        let preds = vec![Predicate::goal("g1", "x"), Predicate::goal("g2", "y")];
        assert_eq!(
            PlanTail::new(preds, Provenance::Initial, &[]).unwrap_err(),
            PlanError::MultipleGoals(2)
        );
    }

    #[test]
    fn empty_action_rendering_rejected() {
        assert!(Action::text("  ").is_err());
        assert!(Action::text("go north").is_ok());
    }

    #[test]
    fn full_length_counts_certified_prefix() {
        let tail = PlanTail::new(
            chain(&["c", "g"]),
            Provenance::Replan {
                index: 1,
                cursor: 3,
            },
            &[],
        )
        .unwrap();
        assert_eq!(tail.full_length(), 5);
    }
}
