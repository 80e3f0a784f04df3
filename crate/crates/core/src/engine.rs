//! The execution loop: build a plan, then realize → act → validate until the
//! goal is certified or a budget runs out.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::Value;
use thiserror::Error;

use crate::artifact::{Termination, Timing, TrajectoryArtifact, FORMAT_VERSION};
use crate::config::EngineConfig;
use crate::error::{CascadeOverrun, ConfigError, OperatorError, OperatorFailure, OperatorKind, PlanError};
use crate::types::{
    Action, AttemptRecord, CertifiedState, CertifiedTransition, Observation, PlanTail, Predicate,
    Provenance, ReplanEvent, ValidationVerdict,
};

/// Input to Propose while building a plan: the episode's initial state and
/// the predicate most recently proposed (`None` for the first call).
#[derive(Debug, Clone, Copy)]
pub struct ProposeInput<'a> {
    pub initial: &'a CertifiedState,
    pub previous: Option<&'a Predicate>,
    pub position: usize,
}

impl ProposeInput<'_> {
    /// Table key: the previous predicate's id, or `s0`.
    pub fn key(&self) -> String {
        self.previous
            .map(|p| p.id.0.clone())
            .unwrap_or_else(|| "s0".to_string())
    }
}

/// Input to Realize. There is deliberately no observation here: `view` is the
/// environment's persistent state view, and `failed_attempts` holds the
/// failures at the current cursor since the last certification.
#[derive(Debug, Clone, Copy)]
pub struct RealizeInput<'a> {
    pub state: &'a CertifiedState,
    pub target: &'a Predicate,
    pub view: &'a Value,
    pub failed_attempts: &'a [AttemptRecord],
}

impl RealizeInput<'_> {
    /// Failed attempts aimed at the current target.
    pub fn retries_on_target(&self) -> usize {
        self.failed_attempts
            .iter()
            .filter(|a| a.target_predicate_id == self.target.id)
            .count()
    }
}

/// The trajectory so far, handed to Replan only.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryView<'a> {
    pub stuck: &'a Predicate,
    pub tail: &'a [Predicate],
    pub transitions: &'a [CertifiedTransition],
    pub attempts: &'a [AttemptRecord],
    pub failed_here: &'a [AttemptRecord],
    pub replan_events: &'a [ReplanEvent],
}

/// Adapter decision taken once the loop stops.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Finalization {
    pub answer: Option<Value>,
    /// Set when the adapter emitted a best-effort answer without a certified goal.
    pub forced: bool,
}

/// The four operators plus an optional finalization hook.
pub trait Operators {
    fn propose(&self, input: &ProposeInput<'_>, goal: &Predicate) -> Result<Predicate, OperatorError>;

    fn realize(&self, input: &RealizeInput<'_>) -> Result<Action, OperatorError>;

    fn validate(
        &self,
        tail: &[Predicate],
        observation: &Observation,
    ) -> Result<ValidationVerdict, OperatorError>;

    fn replan(
        &self,
        state: &CertifiedState,
        goal: &Predicate,
        trajectory: &TrajectoryView<'_>,
    ) -> Result<Vec<Predicate>, OperatorError>;

    fn finalize(
        &self,
        _state: &CertifiedState,
        _goal_certified: bool,
    ) -> Result<Finalization, OperatorError> {
        Ok(Finalization::default())
    }
}

/// An environment instance owned by one episode.
pub trait Environment {
    /// Starts the episode and returns the initial context snapshot.
    fn reset(&mut self) -> Result<Value, OperatorError>;

    /// Persistent state view offered to Realize.
    fn view(&self) -> Value {
        Value::Null
    }

    fn step(&mut self, action: &Action) -> Result<Observation, OperatorError>;

    /// Called after a successful validation. Returns the new context snapshot.
    /// Environments must not let uncommitted steps leak into this snapshot.
    fn commit(
        &mut self,
        certified: &[Predicate],
        verdict: &ValidationVerdict,
    ) -> Result<Value, OperatorError>;
}

#[derive(Debug, Clone)]
pub struct EpisodeTask {
    pub id: String,
    pub goal: Predicate,
}

impl EpisodeTask {
    pub fn new(id: impl Into<String>, goal: Predicate) -> Self {
        Self { id: id.into(), goal }
    }
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("invalid engine config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Operator(#[from] Box<OperatorFailure>),
}

impl EpisodeError {
    /// The partial artifact, when the loop got far enough to build one.
    pub fn artifact(&self) -> Option<&TrajectoryArtifact> {
        match self {
            Self::Config(_) => None,
            Self::Operator(f) => Some(&f.artifact),
        }
    }
}

/// Moves the cursor by the verdict's cascade count.
pub fn advance(
    cursor: usize,
    verdict: &ValidationVerdict,
    plan_length: usize,
) -> Result<usize, CascadeOverrun> {
    let remaining = plan_length.saturating_sub(cursor);
    if verdict.k > remaining {
        return Err(CascadeOverrun {
            k: verdict.k,
            remaining,
        });
    }
    Ok(cursor + verdict.k)
}

/// Feeds Propose its own output until it returns the goal.
pub fn build_plan(
    initial: &CertifiedState,
    goal: &Predicate,
    ops: &dyn Operators,
    plan_length_cap: usize,
) -> Result<PlanTail, PlanError> {
    let mut predicates: Vec<Predicate> = Vec::new();
    while predicates.len() < plan_length_cap {
        let input = ProposeInput {
            initial,
            previous: predicates.last(),
            position: predicates.len(),
        };
        let mut next = ops.propose(&input, goal)?;
        let reached = next.id == goal.id;
        if reached {
            next.is_goal = true;
        }
        predicates.push(next);
        if reached {
            return PlanTail::new(predicates, Provenance::Initial, &initial.certified);
        }
    }
    Err(PlanError::PlanLengthExceeded {
        cap: plan_length_cap,
    })
}

/// Runs one episode to termination.
///
/// Replans fire after `attempt_budget` consecutive failures at a cursor; each
/// cursor gets `max_replans` replans, and the whole episode at most
/// `max_replans × initial plan length`.
pub fn run_episode(
    config: &EngineConfig,
    ops: &dyn Operators,
    env: &mut dyn Environment,
    task: &EpisodeTask,
) -> Result<TrajectoryArtifact, EpisodeError> {
    config.validate()?;
    let mut ep = Episode::new(*config, task);
    match ep.run(ops, env) {
        Ok(()) => Ok(ep.finish(Termination::GoalCertified, ops)),
        Err(Stop::Terminated(t)) => Ok(ep.finish(t, ops)),
        Err(Stop::Failed(kind, message)) => {
            let cursor = ep.state.cursor;
            let attempts = ep.attempts.len();
            let termination = Termination::OperatorFailure {
                cursor,
                operator: kind,
                message: message.clone(),
            };
            let artifact = ep.seal(termination, Finalization::default());
            Err(EpisodeError::Operator(Box::new(OperatorFailure {
                operator: kind,
                cursor,
                attempts,
                message,
                artifact: Box::new(artifact),
            })))
        }
    }
}

enum Stop {
    Terminated(Termination),
    Failed(OperatorKind, String),
}

fn fail(kind: OperatorKind) -> impl FnOnce(OperatorError) -> Stop {
    move |e| Stop::Failed(kind, e.to_string())
}

struct Episode<'t> {
    config: EngineConfig,
    task: &'t EpisodeTask,
    started: Instant,
    started_unix_ms: u64,
    initial_state: Value,
    state: CertifiedState,
    plans: Vec<PlanTail>,
    tail: Vec<Predicate>,
    transitions: Vec<CertifiedTransition>,
    attempts: Vec<AttemptRecord>,
    replan_events: Vec<ReplanEvent>,
    /// Index into `attempts` where the current failure streak starts.
    streak_start: usize,
}

impl<'t> Episode<'t> {
    fn new(config: EngineConfig, task: &'t EpisodeTask) -> Self {
        let started_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        Self {
            config,
            task,
            started: Instant::now(),
            started_unix_ms,
            initial_state: Value::Null,
            state: CertifiedState::initial(Value::Null),
            plans: Vec::new(),
            tail: Vec::new(),
            transitions: Vec::new(),
            attempts: Vec::new(),
            replan_events: Vec::new(),
            streak_start: 0,
        }
    }

    fn run(&mut self, ops: &dyn Operators, env: &mut dyn Environment) -> Result<(), Stop> {
        let context = env.reset().map_err(fail(OperatorKind::Environment))?;
        self.initial_state = context.clone();
        self.state = CertifiedState::initial(context);

        let plan = build_plan(&self.state, &self.task.goal, ops, self.config.plan_length_cap)
            .map_err(|e| Stop::Failed(OperatorKind::Propose, e.to_string()))?;
        self.tail = plan.predicates.clone();
        let ceiling = self.config.replan_ceiling(plan.len());
        self.plans.push(plan);

        let mut retries = 0usize;
        let mut replans_here = 0usize;
        while !self.tail.is_empty() {
            let cursor = self.state.cursor;
            if self.attempts.len() >= self.config.global_step_cap {
                return Err(Stop::Terminated(Termination::StepCapReached { cursor }));
            }
            let step_index = self.attempts.len();
            let view = env.view();
            let action = ops
                .realize(&RealizeInput {
                    state: &self.state,
                    target: &self.tail[0],
                    view: &view,
                    failed_attempts: &self.attempts[self.streak_start..],
                })
                .map_err(fail(OperatorKind::Realize))?;
            let observation = env.step(&action).map_err(fail(OperatorKind::Environment))?;
            let verdict = ops
                .validate(&self.tail, &observation)
                .map_err(fail(OperatorKind::Validate))?;
            let plan_length = cursor + self.tail.len();
            let next = advance(cursor, &verdict, plan_length)
                .map_err(|e| Stop::Failed(OperatorKind::Validate, e.to_string()))?;

            self.attempts.push(AttemptRecord {
                step_index,
                cursor,
                target_predicate_id: self.tail[0].id.clone(),
                action: action.clone(),
                verdict: verdict.clone(),
                reason: verdict.reason.clone(),
            });

            if verdict.k >= 1 {
                let newly: Vec<Predicate> = self.tail.drain(..verdict.k).collect();
                let context = env
                    .commit(&newly, &verdict)
                    .map_err(fail(OperatorKind::Environment))?;
                self.transitions.push(CertifiedTransition {
                    step_index,
                    from_cursor: cursor,
                    to_cursor: next,
                    cascade_depth: verdict.k,
                    action,
                    certified: newly.iter().map(|p| p.id.clone()).collect(),
                });
                self.state.certified.extend(newly);
                self.state.cursor = next;
                self.state.context = context;
                self.streak_start = self.attempts.len();
                retries = 0;
                replans_here = 0;
                continue;
            }

            retries += 1;
            if retries < self.config.attempt_budget {
                continue;
            }
            if replans_here >= self.config.max_replans {
                return Err(Stop::Terminated(Termination::ReplansExhausted { cursor }));
            }
            if self.replan_events.len() >= ceiling {
                return Err(Stop::Terminated(Termination::ReplanCeilingReached { cursor }));
            }
            let new_tail = ops
                .replan(
                    &self.state,
                    &self.task.goal,
                    &TrajectoryView {
                        stuck: &self.tail[0],
                        tail: &self.tail,
                        transitions: &self.transitions,
                        attempts: &self.attempts,
                        failed_here: &self.attempts[self.streak_start..],
                        replan_events: &self.replan_events,
                    },
                )
                .map_err(fail(OperatorKind::Replan))?;
            if new_tail.last().map(|p| &p.id) != Some(&self.task.goal.id) {
                return Err(Stop::Failed(
                    OperatorKind::Replan,
                    "replanned tail does not end at the task goal".to_string(),
                ));
            }
            let index = self.replan_events.len() + 1;
            let plan = PlanTail::new(
                new_tail,
                Provenance::Replan { index, cursor },
                &self.state.certified,
            )
            .map_err(|e| Stop::Failed(OperatorKind::Replan, e.to_string()))?;
            self.replan_events.push(ReplanEvent {
                cursor,
                attempts_exhausted: retries,
                replan_index: index,
            });
            self.tail = plan.predicates.clone();
            self.plans.push(plan);
            replans_here += 1;
            retries = 0;
        }
        Ok(())
    }

    fn goal_certified(&self) -> bool {
        self.state.last().is_some_and(|p| p.is_goal)
    }

    fn finish(self, termination: Termination, ops: &dyn Operators) -> TrajectoryArtifact {
        let goal_certified = self.goal_certified();
        match ops.finalize(&self.state, goal_certified) {
            Ok(fin) => self.seal(termination, fin),
            Err(e) => {
                let cursor = self.state.cursor;
                self.seal(
                    Termination::OperatorFailure {
                        cursor,
                        operator: OperatorKind::Finalize,
                        message: e.to_string(),
                    },
                    Finalization::default(),
                )
            }
        }
    }

    fn seal(self, termination: Termination, fin: Finalization) -> TrajectoryArtifact {
        let goal_certified = self.goal_certified();
        TrajectoryArtifact {
            format_version: FORMAT_VERSION,
            task_id: self.task.id.clone(),
            config: self.config,
            goal: self.task.goal.clone(),
            initial_state: self.initial_state,
            plans: self.plans,
            transitions: self.transitions,
            attempts: self.attempts,
            replan_events: self.replan_events,
            goal_certified,
            final_answer: fin.answer,
            forced_finalization: fin.forced && !goal_certified,
            termination,
            timing: Timing {
                started_unix_ms: self.started_unix_ms,
                elapsed_ms: self.started.elapsed().as_millis() as u64,
            },
        }
    }
}
