//! Prompt-driven operator set over a chat client.

use sdp_core::{
    Action, CertifiedState, Observation, OperatorError, Operators, Predicate, ProposeInput,
    RealizeInput, TrajectoryView, ValidationVerdict,
};
use serde_json::Value;

use crate::llm::ChatClient;
use crate::parse::{tolerant_parse, FieldSpec, FieldType};
use crate::prompt::{render_attempt_history, PromptTemplates};

pub struct LlmOperators {
    client: ChatClient,
    templates: PromptTemplates,
    /// Kind tag stamped on every generated predicate.
    kind: String,
}

impl LlmOperators {
    pub fn new(client: ChatClient) -> Self {
        Self {
            client,
            templates: PromptTemplates::operator_defaults(),
            kind: "free".into(),
        }
    }

    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_kind(mut self, kind: impl Into<String>) -> Self {
        self.kind = kind.into();
        self
    }

    pub fn templates(&self) -> &PromptTemplates {
        &self.templates
    }

    fn ask(&self, template: &str, vars: &[(&str, &str)], fields: &[FieldSpec]) -> Result<serde_json::Map<String, Value>, OperatorError> {
        let prompt = self.templates.render(template, vars)?;
        let raw = self.client.ask(&prompt)?;
        Ok(tolerant_parse(&raw, fields)?)
    }

    /// Propose with an extra grounding block appended to the prompt.
    pub fn propose_with_context(
        &self,
        input: &ProposeInput<'_>,
        goal: &Predicate,
        grounding: &str,
    ) -> Result<Predicate, OperatorError> {
        let state = describe_state(input.initial);
        let previous = input.previous.map_or("(none)".to_string(), |p| p.text.clone());
        let rec = self.ask(
            "propose",
            &[
                ("goal", &goal.text),
                ("goal_id", &goal.id.0),
                ("state", &state),
                ("previous", &previous),
                ("grounding", grounding),
            ],
            &[
                FieldSpec::required("predicate", FieldType::Str),
                FieldSpec::optional("is_goal", FieldType::Bool),
            ],
        )?;
        if rec.get("is_goal").and_then(Value::as_bool).unwrap_or(false) {
            return Ok(goal.clone());
        }
        let text = rec["predicate"].as_str().unwrap_or_default().to_string();
        Ok(Predicate::new(format!("p{}", input.position + 1), text, self.kind.clone()))
    }

    /// Replan with an extra block (for example a list of known-invalid
    /// targets) appended after the failure history.
    pub fn replan_with_context(
        &self,
        state: &CertifiedState,
        goal: &Predicate,
        trajectory: &TrajectoryView<'_>,
        extra: &str,
    ) -> Result<Vec<Predicate>, OperatorError> {
        let state_text = describe_state(state);
        let failures = trajectory.failed_here.len().to_string();
        let history = render_attempt_history(trajectory.failed_here);
        let rec = self.ask(
            "replan",
            &[
                ("goal", &goal.text),
                ("state", &state_text),
                ("stuck", &trajectory.stuck.text),
                ("failures", &failures),
                ("history", &history),
                ("extra", extra),
            ],
            &[FieldSpec::required("predicates", FieldType::StrList)],
        )?;
        let idx = trajectory.replan_events.len() + 1;
        let mut out: Vec<Predicate> = rec["predicates"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(Value::as_str)
            .map(str::trim)
            .filter(|t| !t.is_empty() && *t != goal.text)
            .enumerate()
            .map(|(i, t)| Predicate::new(format!("r{idx}_{}", i + 1), t, self.kind.clone()))
            .collect();
        out.push(goal.clone());
        Ok(out)
    }
}

/// Numbered list of certified predicates, or `(nothing certified yet)`.
pub fn describe_state(state: &CertifiedState) -> String {
    if state.certified.is_empty() {
        return "(nothing certified yet)".into();
    }
    state
        .certified
        .iter()
        .enumerate()
        .map(|(i, p)| format!("{}. {}", i + 1, p.text))
        .collect::<Vec<_>>()
        .join("\n")
}

fn describe_tail(tail: &[Predicate]) -> String {
    tail.iter()
        .enumerate()
        .map(|(i, p)| format!("{}. {}", i + 1, p.text))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Operators for LlmOperators {
    fn propose(&self, input: &ProposeInput<'_>, goal: &Predicate) -> Result<Predicate, OperatorError> {
        self.propose_with_context(input, goal, "")
    }

    fn realize(&self, input: &RealizeInput<'_>) -> Result<Action, OperatorError> {
        let state = describe_state(input.state);
        let view = match input.view {
            Value::Null => "(none)".to_string(),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let history = render_attempt_history(input.failed_attempts);
        let rec = self.ask(
            "realize",
            &[
                ("state", &state),
                ("view", &view),
                ("target", &input.target.text),
                ("history", &history),
            ],
            &[FieldSpec::required("action", FieldType::Str)],
        )?;
        Action::text(rec["action"].as_str().unwrap_or_default().trim())
    }

    fn validate(&self, tail: &[Predicate], observation: &Observation) -> Result<ValidationVerdict, OperatorError> {
        let rec = self.ask(
            "validate",
            &[("tail", &describe_tail(tail)), ("observation", &observation.rendered)],
            &[
                FieldSpec::required("k", FieldType::Int),
                FieldSpec::optional("reason", FieldType::Str),
            ],
        )?;
        // Out-of-range counts are clamped to [0, |tail|].
        let k = rec["k"].as_i64().unwrap_or(0).clamp(0, tail.len() as i64) as usize;
        let reason = rec
            .get("reason")
            .and_then(Value::as_str)
            .unwrap_or("no reason given")
            .to_string();
        Ok(ValidationVerdict::new(k, reason))
    }

    fn replan(
        &self,
        state: &CertifiedState,
        goal: &Predicate,
        trajectory: &TrajectoryView<'_>,
    ) -> Result<Vec<Predicate>, OperatorError> {
        self.replan_with_context(state, goal, trajectory, "")
    }
}
