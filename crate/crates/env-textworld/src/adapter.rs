//! Engine bindings: the world environment, validation with hard shortcuts,
//! exploration credit, the invalid-target cache, and two operator sets.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use sdp_core::{
    run_episode, Action, AttemptRecord, CertifiedState, EngineConfig, Environment, EpisodeError, EpisodeTask,
    Finalization, Observation, OperatorError, Operators, Predicate, ProposeInput, RealizeInput, TrajectoryArtifact,
    TrajectoryView, ValidationVerdict,
};
use sdp_operators::{apply_shortcuts, cap_before_goal, ChatClient, EnvSignal, LlmOperators, ValidationShortcutConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::sim::{describe_room, step_world, valid_commands, StepSignal, WorldState};
use crate::world::{grounding_rooms, Condition, WorldDef};

/// Predicate kind that earns credit for entering an unvisited room.
pub const EXPLORATION_KIND: &str = "exploration";
pub const GOAL_ID: &str = "goal";
pub const GOAL_TEXT: &str = "The task score reaches 100";

impl StepSignal {
    pub fn env_signal(&self, score: u32) -> EnvSignal {
        EnvSignal { done: self.done, rejected: self.rejected, score: f64::from(score) }
    }
}

/// k = 1 for an exploration predicate when the step entered a new room;
/// `None` defers to the next validator.
pub fn exploration_credit(predicate: &Predicate, signal: &StepSignal) -> Option<ValidationVerdict> {
    (predicate.kind == EXPLORATION_KIND && signal.entered_new_room && !signal.rejected)
        .then(|| ValidationVerdict::new(1, "entered a previously unvisited room"))
}

/// Targets the engine has rejected, first-seen order, no duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidTargets(Vec<String>);

impl InvalidTargets {
    pub fn entries(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, target: &str) -> bool {
        self.0.iter().any(|t| t == target)
    }

    /// Rebuilt from rejection verdicts, so it needs no state of its own.
    pub fn from_attempts(attempts: &[AttemptRecord]) -> Self {
        attempts
            .iter()
            .filter_map(|a| a.verdict.detail.get("rejected_target").and_then(Value::as_str))
            .fold(Self::default(), |c, t| record_invalid_target(&c, t))
    }

    /// Block appended to the replan prompt; empty when nothing was rejected.
    pub fn replan_block(&self) -> String {
        if self.0.is_empty() {
            return String::new();
        }
        let lines: Vec<String> = self.0.iter().map(|t| format!("- {t}")).collect();
        format!(
            "\nThe environment has already rejected these targets. Do not reference them again:\n{}\n",
            lines.join("\n")
        )
    }
}

pub fn record_invalid_target(cache: &InvalidTargets, target: &str) -> InvalidTargets {
    let mut next = cache.clone();
    if !next.contains(target) {
        next.0.push(target.to_string());
    }
    next
}

/// Payload of every observation the environment emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextObservation {
    pub action: String,
    pub observation: String,
    pub signal: StepSignal,
    pub state: WorldState,
}

impl TextObservation {
    /// What a model-backed validator sees.
    pub fn render(&self) -> String {
        format!(
            "Action: {}\nObservation: {}\nScore: {} (change {:+})\nEntered a previously unvisited room: {}",
            self.action,
            self.observation,
            self.state.score,
            self.signal.score_delta,
            if self.signal.entered_new_room { "yes" } else { "no" }
        )
    }
}

/// The persistent view: room description, inventory, visited rooms and
/// recent actions, never the terse last response alone.
pub fn view_text(world: &WorldDef, state: &WorldState) -> String {
    let inv = state.inventory();
    let visited: Vec<&str> = state.visited_rooms.iter().map(String::as_str).collect();
    let recent: Vec<&str> = state.history.iter().map(String::as_str).collect();
    format!(
        "{}\nInventory: {}\nRooms visited: {}\nScore: {}\nRecent actions: {}",
        describe_room(world, state),
        if inv.is_empty() { "(empty)".to_string() } else { inv.join(", ") },
        visited.join(", "),
        state.score,
        if recent.is_empty() { "(none)".to_string() } else { recent.join("; ") }
    )
}

/// The world is mutable: failed attempts change it too, and each commit
/// snapshots whatever it looks like at that point.
pub struct TextWorldEnvironment {
    world: Arc<WorldDef>,
    live: WorldState,
}

impl TextWorldEnvironment {
    pub fn new(world: Arc<WorldDef>) -> Self {
        let live = WorldState::initial(&world);
        Self { world, live }
    }

    pub fn state(&self) -> &WorldState {
        &self.live
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, OperatorError> {
    serde_json::to_value(v).map_err(|e| OperatorError::adapter(e.to_string()))
}

impl Environment for TextWorldEnvironment {
    fn reset(&mut self) -> Result<Value, OperatorError> {
        self.live = WorldState::initial(&self.world);
        to_value(&self.live)
    }

    fn view(&self) -> Value {
        json!({"text": view_text(&self.world, &self.live), "state": self.live})
    }

    fn step(&mut self, action: &Action) -> Result<Observation, OperatorError> {
        let out = step_world(&self.world, &self.live, &action.rendered);
        self.live = out.state.clone();
        let obs = TextObservation {
            action: action.rendered.clone(),
            observation: out.observation,
            signal: out.signal,
            state: out.state,
        };
        Ok(Observation::new(to_value(&obs)?, obs.render()))
    }

    fn commit(&mut self, _certified: &[Predicate], _verdict: &ValidationVerdict) -> Result<Value, OperatorError> {
        to_value(&self.live)
    }
}

/// Predicates from the world's bundled plan, followed by the goal.
pub fn plan_predicates(world: &WorldDef) -> Vec<Predicate> {
    let mut out: Vec<Predicate> = world
        .plan
        .iter()
        .map(|e| {
            let p = Predicate::new(e.id.clone(), e.text.clone(), e.kind.clone());
            match &e.condition {
                Some(c) => p.with_attrs(json!({ "condition": c })),
                None => p,
            }
        })
        .collect();
    out.push(goal_predicate());
    out
}

pub fn goal_predicate() -> Predicate {
    Predicate::goal(GOAL_ID, GOAL_TEXT)
}

/// The condition the deterministic validator checks for a predicate.
pub fn condition_of(p: &Predicate) -> Option<Condition> {
    serde_json::from_value(p.attrs.get("condition")?.clone()).ok()
}

fn decode(observation: &Observation) -> Result<TextObservation, OperatorError> {
    serde_json::from_value(observation.payload.clone())
        .map_err(|e| OperatorError::adapter(format!("not a world observation: {e}")))
}

fn live_state(input: &RealizeInput<'_>) -> Result<WorldState, OperatorError> {
    let raw = input.view.get("state").unwrap_or(&input.state.context);
    serde_json::from_value(raw.clone()).map_err(|e| OperatorError::adapter(format!("bad world state: {e}")))
}

/// Shortcuts, then exploration credit. `None` defers to the backend.
pub fn hard_verdict(
    config: &ValidationShortcutConfig,
    tail: &[Predicate],
    obs: &TextObservation,
) -> Option<ValidationVerdict> {
    if let Some(v) = apply_shortcuts(config, &obs.signal.env_signal(obs.state.score), tail) {
        return Some(match (&obs.signal.rejected_target, v.k) {
            (Some(t), 0) if obs.signal.rejected => v.with_detail(json!({ "rejected_target": t })),
            _ => v,
        });
    }
    exploration_credit(tail.first()?, &obs.signal)
}

/// Deterministic validation: hard verdicts, then the longest head run whose
/// conditions hold in the post-step state, capped before the goal.
pub fn validate_step(config: &ValidationShortcutConfig, tail: &[Predicate], obs: &TextObservation) -> ValidationVerdict {
    if let Some(v) = hard_verdict(config, tail, obs) {
        return v;
    }
    let k = tail
        .iter()
        .take_while(|p| condition_of(p).is_some_and(|c| c.holds(&obs.state)))
        .count();
    let v = match k {
        0 => ValidationVerdict::reject(format!("`{}` does not hold after `{}`", tail[0].text, obs.action)),
        _ => ValidationVerdict::new(k, format!("{k} head condition(s) hold after `{}`", obs.action)),
    };
    cap_before_goal(v, tail)
}

/// Picks the next action text for a target.
pub trait Policy {
    fn act(&self, world: &WorldDef, state: &WorldState, target: &Predicate, failed: &[AttemptRecord]) -> String;
}

/// Fixed action lists per target id; the n-th retry uses the n-th entry,
/// repeating the last.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    pub table: BTreeMap<String, Vec<String>>,
}

impl ScriptedPolicy {
    pub fn with(mut self, target: &str, actions: &[&str]) -> Self {
        self.table.insert(target.into(), actions.iter().map(|a| a.to_string()).collect());
        self
    }
}

impl Policy for ScriptedPolicy {
    fn act(&self, _: &WorldDef, _: &WorldState, target: &Predicate, failed: &[AttemptRecord]) -> String {
        let retries = failed.iter().filter(|a| a.target_predicate_id == target.id).count();
        self.table
            .get(&target.id.0)
            .and_then(|acts| acts.get(retries.min(acts.len().saturating_sub(1))))
            .cloned()
            .unwrap_or_else(|| "look around".into())
    }
}

/// Breadth-first search over valid commands toward the target's condition;
/// emits the first action of a shortest path.
#[derive(Debug, Clone, Copy)]
pub struct SearchPolicy {
    pub max_nodes: usize,
}

impl Default for SearchPolicy {
    fn default() -> Self {
        Self { max_nodes: 20_000 }
    }
}

fn search_key(s: &WorldState) -> String {
    serde_json::to_string(&(&s.agent_room, &s.objects, &s.focused, &s.visited_rooms)).unwrap_or_default()
}

impl Policy for SearchPolicy {
    fn act(&self, world: &WorldDef, state: &WorldState, target: &Predicate, _: &[AttemptRecord]) -> String {
        let cond = condition_of(target).or_else(|| target.is_goal.then(|| world.goal.clone()));
        let start_rooms = state.visited_rooms.len();
        let reached = |s: &WorldState| match &cond {
            Some(c) => c.holds(s),
            // Condition-free exploration: any new room will do.
            None => s.visited_rooms.len() > start_rooms,
        };
        if reached(state) {
            return "look around".into();
        }
        let mut seen = BTreeSet::from([search_key(state)]);
        let mut queue: VecDeque<(WorldState, String)> = VecDeque::new();
        for cmd in valid_commands(world, state) {
            let next = step_world(world, state, &cmd.render()).state;
            if reached(&next) {
                return cmd.render();
            }
            if seen.insert(search_key(&next)) {
                queue.push_back((next, cmd.render()));
            }
        }
        while let Some((s, first)) = queue.pop_front() {
            if seen.len() > self.max_nodes {
                break;
            }
            for cmd in valid_commands(world, &s) {
                let next = step_world(world, &s, &cmd.render()).state;
                if reached(&next) {
                    return first;
                }
                if seen.insert(search_key(&next)) {
                    queue.push_back((next, first.clone()));
                }
            }
        }
        "look around".into()
    }
}

fn finalization(state: &CertifiedState, goal_certified: bool) -> Result<Finalization, OperatorError> {
    let s: WorldState = serde_json::from_value(state.context.clone())
        .map_err(|e| OperatorError::adapter(format!("bad world state: {e}")))?;
    Ok(Finalization { answer: Some(json!({"score": s.score, "done": s.done})), forced: !goal_certified })
}

/// Deterministic operators: the world's bundled plan, a policy for actions
/// and the condition-table validator. Replan retries the same tail.
pub struct TextOperators<P> {
    world: Arc<WorldDef>,
    plan: Vec<Predicate>,
    policy: P,
    shortcuts: ValidationShortcutConfig,
}

impl<P: Policy> TextOperators<P> {
    pub fn new(world: Arc<WorldDef>, policy: P) -> Self {
        let plan = plan_predicates(&world);
        Self { world, plan, policy, shortcuts: ValidationShortcutConfig::default() }
    }

    pub fn with_shortcuts(mut self, shortcuts: ValidationShortcutConfig) -> Self {
        self.shortcuts = shortcuts;
        self
    }

    pub fn task(&self) -> EpisodeTask {
        EpisodeTask::new(self.world.name.clone(), goal_predicate())
    }
}

impl<P: Policy> Operators for TextOperators<P> {
    fn propose(&self, input: &ProposeInput<'_>, _goal: &Predicate) -> Result<Predicate, OperatorError> {
        self.plan
            .get(input.position)
            .cloned()
            .ok_or_else(|| OperatorError::adapter("proposed past the end of the bundled plan"))
    }

    fn realize(&self, input: &RealizeInput<'_>) -> Result<Action, OperatorError> {
        let state = live_state(input)?;
        Action::text(self.policy.act(&self.world, &state, input.target, input.failed_attempts))
    }

    fn validate(&self, tail: &[Predicate], observation: &Observation) -> Result<ValidationVerdict, OperatorError> {
        if tail.is_empty() {
            return Err(OperatorError::adapter("validate called with an empty tail"));
        }
        Ok(validate_step(&self.shortcuts, tail, &decode(observation)?))
    }

    fn replan(&self, _: &CertifiedState, _: &Predicate, trajectory: &TrajectoryView<'_>) -> Result<Vec<Predicate>, OperatorError> {
        Ok(trajectory.tail.to_vec())
    }

    fn finalize(&self, state: &CertifiedState, goal_certified: bool) -> Result<Finalization, OperatorError> {
        finalization(state, goal_certified)
    }
}

/// Whether free text reads as an exploration sub-goal. Only used to tag
/// model-generated predicates; the deterministic path uses explicit kinds.
pub fn looks_like_exploration(text: &str) -> bool {
    let t = text.to_lowercase();
    t.starts_with("the location of") && t.contains("is known")
}

fn tag(mut p: Predicate) -> Predicate {
    if !p.is_goal && looks_like_exploration(&p.text) {
        p.kind = EXPLORATION_KIND.into();
    }
    p
}

/// Model-backed operators with room grounding, the invalid-target cache in
/// replan prompts, and hard shortcuts before every model verdict.
pub struct LlmTextOperators {
    inner: LlmOperators,
    world: Arc<WorldDef>,
    shortcuts: ValidationShortcutConfig,
}

impl LlmTextOperators {
    pub fn new(client: ChatClient, world: Arc<WorldDef>) -> Self {
        Self { inner: LlmOperators::new(client), world, shortcuts: ValidationShortcutConfig::default() }
    }

    pub fn task(&self) -> EpisodeTask {
        EpisodeTask::new(self.world.name.clone(), goal_predicate())
    }

    pub fn grounding_block(&self) -> String {
        let mut text = String::new();
        if !self.world.task.is_empty() {
            text.push_str(&format!("\nTask: {}\n", self.world.task));
        }
        text.push_str(&format!(
            "\nReachable rooms (reference only these): {}\n",
            grounding_rooms(&self.world).join(", ")
        ));
        text
    }
}

impl Operators for LlmTextOperators {
    fn propose(&self, input: &ProposeInput<'_>, goal: &Predicate) -> Result<Predicate, OperatorError> {
        Ok(tag(self.inner.propose_with_context(input, goal, &self.grounding_block())?))
    }

    fn realize(&self, input: &RealizeInput<'_>) -> Result<Action, OperatorError> {
        let text = Value::String(input.view.get("text").and_then(Value::as_str).unwrap_or("(none)").to_string());
        self.inner.realize(&RealizeInput { view: &text, ..*input })
    }

    fn validate(&self, tail: &[Predicate], observation: &Observation) -> Result<ValidationVerdict, OperatorError> {
        if tail.is_empty() {
            return Err(OperatorError::adapter("validate called with an empty tail"));
        }
        let obs = decode(observation)?;
        if let Some(v) = hard_verdict(&self.shortcuts, tail, &obs) {
            return Ok(v);
        }
        Ok(cap_before_goal(self.inner.validate(tail, observation)?, tail))
    }

    fn replan(&self, state: &CertifiedState, goal: &Predicate, trajectory: &TrajectoryView<'_>) -> Result<Vec<Predicate>, OperatorError> {
        let cache = InvalidTargets::from_attempts(trajectory.attempts);
        let tail = self.inner.replan_with_context(state, goal, trajectory, &cache.replan_block())?;
        Ok(tail.into_iter().map(tag).collect())
    }

    fn finalize(&self, state: &CertifiedState, goal_certified: bool) -> Result<Finalization, OperatorError> {
        finalization(state, goal_certified)
    }
}

/// Runs the world's bundled plan with a deterministic policy.
pub fn run_world<P: Policy>(world: Arc<WorldDef>, policy: P, config: &EngineConfig) -> Result<TrajectoryArtifact, EpisodeError> {
    let ops = TextOperators::new(world.clone(), policy);
    let mut env = TextWorldEnvironment::new(world);
    run_episode(config, &ops, &mut env, &ops.task())
}
