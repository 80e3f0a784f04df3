#![allow(dead_code)]

use std::cell::{Cell, RefCell};
use std::collections::VecDeque;

use sdp_core::*;
use serde_json::{json, Value};

pub fn chain(n: usize) -> Vec<Predicate> {
    let mut v: Vec<Predicate> = (1..n)
        .map(|i| Predicate::new(format!("p{i}"), format!("predicate {i} holds"), "step"))
        .collect();
    v.push(Predicate::goal("g", "goal holds"));
    v
}

/// Proposes a fixed chain and validates from a queue of cascade counts
/// (defaulting to 1 when the queue runs dry). Replan returns the current
/// tail with fresh ids.
pub struct QueueOps {
    pub plan: Vec<Predicate>,
    pub ks: RefCell<VecDeque<usize>>,
    pub replans: Cell<usize>,
    pub validate_calls: Cell<usize>,
}

impl QueueOps {
    pub fn new(plan: Vec<Predicate>, ks: impl IntoIterator<Item = usize>) -> Self {
        Self {
            plan,
            ks: RefCell::new(ks.into_iter().collect()),
            replans: Cell::new(0),
            validate_calls: Cell::new(0),
        }
    }
}

impl Operators for QueueOps {
    fn propose(&self, input: &ProposeInput<'_>, _goal: &Predicate) -> Result<Predicate, OperatorError> {
        Ok(self.plan[input.position].clone())
    }

    fn realize(&self, input: &RealizeInput<'_>) -> Result<Action, OperatorError> {
        Action::text(format!("do {} #{}", input.target.id, input.retries_on_target()))
    }

    fn validate(&self, tail: &[Predicate], _o: &Observation) -> Result<ValidationVerdict, OperatorError> {
        self.validate_calls.set(self.validate_calls.get() + 1);
        let k = self.ks.borrow_mut().pop_front().unwrap_or(1).min(tail.len());
        Ok(if k == 0 {
            ValidationVerdict::reject("unmet")
        } else {
            ValidationVerdict::new(k, "met")
        })
    }

    fn replan(
        &self,
        _state: &CertifiedState,
        _goal: &Predicate,
        t: &TrajectoryView<'_>,
    ) -> Result<Vec<Predicate>, OperatorError> {
        let n = self.replans.get() + 1;
        self.replans.set(n);
        Ok(t.tail
            .iter()
            .map(|p| {
                if p.is_goal {
                    p.clone()
                } else {
                    Predicate::new(format!("{}r{n}", p.id), p.text.clone(), p.kind.clone())
                }
            })
            .collect())
    }
}

/// Echoes actions; the context is the list of committed predicate ids.
#[derive(Default)]
pub struct EchoEnv {
    pub committed: Vec<String>,
    pub steps: usize,
}

impl Environment for EchoEnv {
    fn reset(&mut self) -> Result<Value, OperatorError> {
        self.committed.clear();
        Ok(json!({ "committed": [] }))
    }

    fn step(&mut self, action: &Action) -> Result<Observation, OperatorError> {
        self.steps += 1;
        Ok(Observation::text(format!("saw {}", action.rendered)))
    }

    fn commit(&mut self, certified: &[Predicate], _v: &ValidationVerdict) -> Result<Value, OperatorError> {
        self.committed.extend(certified.iter().map(|p| p.id.0.clone()));
        Ok(json!({ "committed": self.committed }))
    }
}
