//! Engine bindings: deterministic operators and the itinerary environment.

use std::sync::Arc;

use sdp_core::{
    run_episode, Action, AttemptRecord, CertifiedState, EngineConfig, Environment, EpisodeError, EpisodeTask,
    Finalization, Observation, OperatorError, Operators, Predicate, ProposeInput, RealizeInput, TrajectoryArtifact,
    TrajectoryView, ValidationVerdict,
};
use sdp_operators::{render_attempt_history, tolerant_parse, ChatClient, FieldSpec, FieldType, PromptTemplates};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::check::{render_itinerary, validate_budget_check, Itinerary};
use crate::filter::Candidate;
use crate::model::{Sandbox, Slot, TripSpec};
use crate::plan::{build_constraint_plan, PlanStep};
use crate::select::{realize_selection, validate_selection, Chooser, SelectError, TripAction};
use crate::state::ItineraryState;

/// Context snapshot committed after each certification.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TripContext {
    pub itinerary_state: ItineraryState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub itinerary: Option<Itinerary>,
}

impl TripContext {
    pub fn from_value(v: &Value) -> Result<Self, OperatorError> {
        serde_json::from_value(v.clone()).map_err(|e| OperatorError::adapter(format!("bad trip context: {e}")))
    }

    fn to_value(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }
}

/// What the environment reports after one action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripObservation {
    pub before: ItineraryState,
    pub action: TripAction,
    #[serde(default)]
    pub itinerary: Option<Itinerary>,
    #[serde(default)]
    pub error: Option<String>,
}

pub struct ConstraintOperators {
    spec: TripSpec,
    sandbox: Arc<Sandbox>,
    plan: Vec<Predicate>,
    chooser: Box<dyn Chooser>,
}

impl ConstraintOperators {
    pub fn new(spec: TripSpec, sandbox: Arc<Sandbox>, chooser: Box<dyn Chooser>) -> Result<Self, OperatorError> {
        spec.check().map_err(|e| OperatorError::adapter(e.to_string()))?;
        let plan = build_constraint_plan(&spec)
            .map_err(|e| OperatorError::adapter(e.to_string()))?
            .predicates;
        Ok(Self {
            spec,
            sandbox,
            plan,
            chooser,
        })
    }

    pub fn goal(&self) -> &Predicate {
        self.plan.last().expect("plan ends with render")
    }

    pub fn task(&self) -> EpisodeTask {
        EpisodeTask::new(self.spec.id.clone(), self.goal().clone())
    }
}

impl Operators for ConstraintOperators {
    fn propose(&self, input: &ProposeInput<'_>, _goal: &Predicate) -> Result<Predicate, OperatorError> {
        self.plan
            .get(input.position)
            .cloned()
            .ok_or_else(|| OperatorError::adapter("proposed past the end of the fixed plan"))
    }

    fn realize(&self, input: &RealizeInput<'_>) -> Result<Action, OperatorError> {
        let ctx = TripContext::from_value(&input.state.context)?;
        let step = PlanStep::of(input.target)
            .ok_or_else(|| OperatorError::adapter(format!("{} carries no plan step", input.target.id)))?;
        let trip_action = match step {
            PlanStep::BudgetCheck => TripAction::CheckBudget,
            PlanStep::Render => TripAction::Render,
            _ => match realize_selection(
                &ctx.itinerary_state,
                &self.spec,
                input.target,
                &self.sandbox,
                self.chooser.as_ref(),
                input.failed_attempts,
            ) {
                Ok(a) => a,
                // An out-of-range pick is a failed attempt, not a crash.
                Err(SelectError::ChoiceOutOfRange { index, len }) => TripAction::InvalidChoice {
                    slot: step.slots()[0].clone(),
                    index,
                    available: len,
                },
                Err(SelectError::Chooser(e)) => return Err(e),
                Err(e) => return Err(OperatorError::adapter(e.to_string())),
            },
        };
        trip_action.to_action()
    }

    fn validate(&self, tail: &[Predicate], observation: &Observation) -> Result<ValidationVerdict, OperatorError> {
        let head = tail
            .first()
            .ok_or_else(|| OperatorError::adapter("validate called with an empty tail"))?;
        let obs: TripObservation = serde_json::from_value(observation.payload.clone())
            .map_err(|e| OperatorError::adapter(format!("not a trip observation: {e}")))?;
        if let Some(err) = &obs.error {
            return Ok(ValidationVerdict::reject(err.clone()));
        }
        let step = PlanStep::of(head).ok_or_else(|| OperatorError::adapter(format!("{} carries no plan step", head.id)))?;
        match (&step, &obs.action) {
            (PlanStep::BudgetCheck, TripAction::CheckBudget) => {
                validate_budget_check(&obs.before, &self.spec, &self.sandbox)
                    .map_err(|e| OperatorError::adapter(format!("cost invariant breach: {e}")))
            }
            (PlanStep::Render, TripAction::Render) => Ok(match obs.itinerary {
                Some(_) => ValidationVerdict::new(1, "itinerary rendered"),
                None => ValidationVerdict::reject("render produced no itinerary"),
            }),
            (PlanStep::BudgetCheck | PlanStep::Render, _) => {
                Ok(ValidationVerdict::reject(format!("{} needs a {} action", head.id, step.kind())))
            }
            (_, action) => Ok(validate_selection(&obs.before, &self.spec, head, &self.sandbox, action)),
        }
    }

    /// Retry only: selections are additive, so the tail comes back unchanged.
    fn replan(
        &self,
        _state: &CertifiedState,
        _goal: &Predicate,
        trajectory: &TrajectoryView<'_>,
    ) -> Result<Vec<Predicate>, OperatorError> {
        Ok(trajectory.tail.to_vec())
    }

    fn finalize(&self, state: &CertifiedState, goal_certified: bool) -> Result<Finalization, OperatorError> {
        let ctx = TripContext::from_value(&state.context)?;
        Ok(Finalization {
            answer: ctx
                .itinerary
                .filter(|_| goal_certified)
                .map(|i| serde_json::to_value(i).unwrap_or(Value::Null)),
            forced: false,
        })
    }
}

/// Holds the committed itinerary and one pending outcome from the last step.
pub struct ConstraintEnvironment {
    spec: TripSpec,
    sandbox: Arc<Sandbox>,
    committed: TripContext,
    pending: Option<TripContext>,
}

impl ConstraintEnvironment {
    pub fn new(spec: TripSpec, sandbox: Arc<Sandbox>) -> Self {
        Self {
            spec,
            sandbox,
            committed: TripContext::default(),
            pending: None,
        }
    }

    pub fn state(&self) -> &ItineraryState {
        &self.committed.itinerary_state
    }
}

impl Environment for ConstraintEnvironment {
    fn reset(&mut self) -> Result<Value, OperatorError> {
        self.committed = TripContext::default();
        self.pending = None;
        Ok(self.committed.to_value())
    }

    fn view(&self) -> Value {
        self.committed.to_value()
    }

    fn step(&mut self, action: &Action) -> Result<Observation, OperatorError> {
        let trip_action = TripAction::from_action(action)?;
        let before = self.committed.itinerary_state.clone();
        let mut next = self.committed.clone();
        let mut error = None;
        match &trip_action {
            TripAction::Select { picks } => {
                for p in picks {
                    if let Err(e) = next.itinerary_state.apply_id(p.slot.clone(), &p.option_id, &self.sandbox, &self.spec) {
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
            TripAction::Render => match render_itinerary(&before, &self.spec, &self.sandbox) {
                Ok(it) => next.itinerary = Some(it),
                Err(e) => error = Some(e.to_string()),
            },
            TripAction::CheckBudget | TripAction::Infeasible { .. } | TripAction::InvalidChoice { .. } => {}
        }
        let obs = TripObservation {
            before,
            action: trip_action,
            itinerary: next.itinerary.clone(),
            error: error.clone(),
        };
        self.pending = error.is_none().then_some(next);
        let payload = serde_json::to_value(&obs).map_err(|e| OperatorError::adapter(e.to_string()))?;
        let rendered = match &obs.error {
            Some(e) => format!("error: {e}"),
            None => format!("applied: {}", action.rendered),
        };
        Ok(Observation::new(payload, rendered))
    }

    fn commit(&mut self, _certified: &[Predicate], _verdict: &ValidationVerdict) -> Result<Value, OperatorError> {
        let next = self
            .pending
            .take()
            .ok_or_else(|| OperatorError::adapter("commit without a pending step"))?;
        self.committed = next;
        Ok(self.committed.to_value())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TripRunError {
    #[error("invalid trip: {0}")]
    Spec(OperatorError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
}

/// Runs one trip end to end.
pub fn run_trip(
    spec: &TripSpec,
    sandbox: Arc<Sandbox>,
    chooser: Box<dyn Chooser>,
    config: &EngineConfig,
) -> Result<TrajectoryArtifact, TripRunError> {
    let ops = ConstraintOperators::new(spec.clone(), sandbox.clone(), chooser).map_err(TripRunError::Spec)?;
    let mut env = ConstraintEnvironment::new(spec.clone(), sandbox);
    Ok(run_episode(config, &ops, &mut env, &ops.task())?)
}

/// Chooser that asks a model to pick among the presented options.
pub struct LlmChooser {
    client: ChatClient,
    templates: PromptTemplates,
}

impl LlmChooser {
    pub fn new(client: ChatClient) -> Self {
        let mut templates = PromptTemplates::default();
        templates.insert("choose", include_str!("../prompts/choose.txt"));
        Self { client, templates }
    }

    pub fn prompt(&self, predicate: &Predicate, slot: &Slot, options: &[Candidate], failed: &[AttemptRecord]) -> Result<String, OperatorError> {
        let listing: Vec<String> = options
            .iter()
            .enumerate()
            .map(|(i, o)| format!("{i}. {} [{}], cost {}", o.label, o.id, o.cost))
            .collect();
        let slot = serde_json::to_string(slot).unwrap_or_default();
        Ok(self.templates.render(
            "choose",
            &[
                ("target", &predicate.text),
                ("slot", &slot),
                ("options", &listing.join("\n")),
                ("history", &render_attempt_history(failed)),
            ],
        )?)
    }
}

impl Chooser for LlmChooser {
    fn choose(&self, predicate: &Predicate, slot: &Slot, options: &[Candidate], failed: &[AttemptRecord]) -> Result<usize, OperatorError> {
        let prompt = self.prompt(predicate, slot, options, failed)?;
        let raw = self.client.ask(&prompt)?;
        let rec = tolerant_parse(&raw, &[FieldSpec::required("index", FieldType::Int)])?;
        // Negative indices map past the end so they fail as out of range.
        Ok(usize::try_from(rec["index"].as_i64().unwrap_or(-1)).unwrap_or(usize::MAX))
    }
}

/// JSON summary of a trip episode for logs.
pub fn summarize(artifact: &TrajectoryArtifact) -> Value {
    json!({
        "task_id": artifact.task_id,
        "goal_certified": artifact.goal_certified,
        "steps": artifact.steps(),
        "replans": artifact.replan_events.len(),
    })
}
