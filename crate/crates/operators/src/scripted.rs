//! Table-driven operators and environment.
//!
//! Every operator is a pure lookup keyed by the certified state key (last
//! certified predicate id, or `s0`) and the predicate or observation at hand.
//! Missing keys are errors: a script must cover every key its scenario reaches.

use std::collections::BTreeMap;

use sdp_core::{
    Action, CertifiedState, Environment, Observation, OperatorError, Operators, Predicate,
    ProposeInput, RealizeInput, TrajectoryView, ValidationVerdict,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposeEntry {
    pub state: String,
    pub goal: String,
    pub predicate: Predicate,
}

/// `actions[i]` is used for the i-th retry at the target; the last entry
/// repeats once the list runs out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizeEntry {
    pub state: String,
    pub target: String,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidateEntry {
    pub target: String,
    pub observation: String,
    pub k: usize,
    #[serde(default)]
    pub reason: Option<String>,
}

/// Replacement tail for a stuck state. `nth` selects the entry for the n-th
/// replan at that state (0-based); entries without `nth` match any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanEntry {
    pub state: String,
    #[serde(default)]
    pub nth: Option<usize>,
    pub predicates: Vec<Predicate>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptedScript {
    #[serde(default)]
    pub propose: Vec<ProposeEntry>,
    #[serde(default)]
    pub realize: Vec<RealizeEntry>,
    #[serde(default)]
    pub validate: Vec<ValidateEntry>,
    #[serde(default)]
    pub replan: Vec<ReplanEntry>,
}

impl ScriptedScript {
    /// Script that proposes `plan` in order from `s0`.
    pub fn with_plan(plan: &[Predicate]) -> Self {
        let goal = plan.last().map(|p| p.id.0.clone()).unwrap_or_default();
        let mut prev = "s0".to_string();
        let propose = plan
            .iter()
            .map(|p| {
                let e = ProposeEntry {
                    state: prev.clone(),
                    goal: goal.clone(),
                    predicate: p.clone(),
                };
                prev = p.id.0.clone();
                e
            })
            .collect();
        Self {
            propose,
            ..Self::default()
        }
    }

    pub fn realize(mut self, state: &str, target: &str, actions: &[&str]) -> Self {
        self.realize.push(RealizeEntry {
            state: state.into(),
            target: target.into(),
            actions: actions.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    pub fn validate(mut self, target: &str, observation: &str, k: usize) -> Self {
        self.validate.push(ValidateEntry {
            target: target.into(),
            observation: observation.into(),
            k,
            reason: None,
        });
        self
    }

    pub fn replan(mut self, state: &str, nth: Option<usize>, predicates: Vec<Predicate>) -> Self {
        self.replan.push(ReplanEntry {
            state: state.into(),
            nth,
            predicates,
        });
        self
    }
}

type Key = (String, String);

#[derive(Debug, Clone)]
pub struct ScriptedOperators {
    propose: BTreeMap<Key, Predicate>,
    realize: BTreeMap<Key, Vec<String>>,
    validate: BTreeMap<Key, (usize, Option<String>)>,
    replan: BTreeMap<(String, Option<usize>), Vec<Predicate>>,
}

impl ScriptedOperators {
    pub fn new(script: &ScriptedScript) -> Result<Self, OperatorError> {
        fn insert<K: Ord + std::fmt::Debug, V>(
            map: &mut BTreeMap<K, V>,
            key: K,
            value: V,
            table: &str,
        ) -> Result<(), OperatorError> {
            if map.contains_key(&key) {
                return Err(OperatorError::adapter(format!("duplicate {table} entry {key:?}")));
            }
            map.insert(key, value);
            Ok(())
        }
        let mut ops = Self {
            propose: BTreeMap::new(),
            realize: BTreeMap::new(),
            validate: BTreeMap::new(),
            replan: BTreeMap::new(),
        };
        for e in &script.propose {
            insert(&mut ops.propose, (e.state.clone(), e.goal.clone()), e.predicate.clone(), "propose")?;
        }
        for e in &script.realize {
            if e.actions.is_empty() {
                return Err(OperatorError::adapter(format!(
                    "realize entry ({}, {}) has no actions",
                    e.state, e.target
                )));
            }
            insert(&mut ops.realize, (e.state.clone(), e.target.clone()), e.actions.clone(), "realize")?;
        }
        for e in &script.validate {
            insert(
                &mut ops.validate,
                (e.target.clone(), e.observation.clone()),
                (e.k, e.reason.clone()),
                "validate",
            )?;
        }
        for e in &script.replan {
            insert(&mut ops.replan, (e.state.clone(), e.nth), e.predicates.clone(), "replan")?;
        }
        Ok(ops)
    }

    /// Scripted cascade count for a target and observation text.
    pub fn lookup_validate(&self, target: &str, observation: &str) -> Result<ValidationVerdict, OperatorError> {
        let (k, reason) = self
            .validate
            .get(&(target.to_string(), observation.to_string()))
            .ok_or_else(|| OperatorError::adapter(format!("no validate entry for ({target}, {observation})")))?;
        let reason = reason.clone().unwrap_or_else(|| {
            if *k == 0 {
                format!("{observation} does not satisfy {target}")
            } else {
                format!("{observation} satisfies {k} predicate(s)")
            }
        });
        Ok(ValidationVerdict::new(*k, reason))
    }
}

impl Operators for ScriptedOperators {
    fn propose(&self, input: &ProposeInput<'_>, goal: &Predicate) -> Result<Predicate, OperatorError> {
        let key = (input.key(), goal.id.0.clone());
        self.propose
            .get(&key)
            .cloned()
            .ok_or_else(|| OperatorError::adapter(format!("no propose entry for {key:?}")))
    }

    fn realize(&self, input: &RealizeInput<'_>) -> Result<Action, OperatorError> {
        let key = (input.state.key(), input.target.id.0.clone());
        let actions = self
            .realize
            .get(&key)
            .ok_or_else(|| OperatorError::adapter(format!("no realize entry for {key:?}")))?;
        let i = input.retries_on_target().min(actions.len() - 1);
        Action::text(actions[i].clone())
    }

    fn validate(&self, tail: &[Predicate], observation: &Observation) -> Result<ValidationVerdict, OperatorError> {
        let head = tail
            .first()
            .ok_or_else(|| OperatorError::adapter("validate called with an empty tail"))?;
        self.lookup_validate(&head.id.0, &observation.rendered)
    }

    fn replan(
        &self,
        state: &CertifiedState,
        _goal: &Predicate,
        trajectory: &TrajectoryView<'_>,
    ) -> Result<Vec<Predicate>, OperatorError> {
        let key = state.key();
        let nth = trajectory
            .replan_events
            .iter()
            .filter(|e| e.cursor == state.cursor)
            .count();
        self.replan
            .get(&(key.clone(), Some(nth)))
            .or_else(|| self.replan.get(&(key.clone(), None)))
            .cloned()
            .ok_or_else(|| OperatorError::adapter(format!("no replan entry for ({key}, {nth})")))
    }
}

/// Environment answering from a table keyed by (certified state key, action);
/// unlisted actions are echoed back as their own observation.
#[derive(Debug, Clone, Default)]
pub struct ScriptedEnvironment {
    responses: BTreeMap<Key, String>,
    certified: Vec<String>,
    steps: usize,
}

impl ScriptedEnvironment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn respond(mut self, state: &str, action: &str, observation: &str) -> Self {
        self.responses
            .insert((state.to_string(), action.to_string()), observation.to_string());
        self
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn key(&self) -> String {
        self.certified.last().cloned().unwrap_or_else(|| "s0".to_string())
    }

    fn snapshot(&self) -> Value {
        json!({ "certified": self.certified })
    }
}

impl Environment for ScriptedEnvironment {
    fn reset(&mut self) -> Result<Value, OperatorError> {
        self.certified.clear();
        self.steps = 0;
        Ok(self.snapshot())
    }

    fn step(&mut self, action: &Action) -> Result<Observation, OperatorError> {
        self.steps += 1;
        let text = self
            .responses
            .get(&(self.key(), action.rendered.clone()))
            .cloned()
            .unwrap_or_else(|| action.rendered.clone());
        Ok(Observation::text(text))
    }

    fn commit(&mut self, certified: &[Predicate], _verdict: &ValidationVerdict) -> Result<Value, OperatorError> {
        self.certified.extend(certified.iter().map(|p| p.id.0.clone()));
        Ok(self.snapshot())
    }
}
