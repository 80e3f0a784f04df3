//! The multi-hop QA adapter: hop plans, the retrieval environment and the
//! operators that chain bridge entities through hops.

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use sdp_core::{
    run_episode, Action, AttemptRecord, CertifiedState, EngineConfig, Environment, EpisodeError,
    EpisodeTask, Finalization, Observation, OperatorError, Operators, Predicate, ProposeInput,
    RealizeInput, TrajectoryArtifact, TrajectoryView, ValidationVerdict,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::index::{Bm25Index, IndexError, Paragraph, DEFAULT_TOP_K};
use crate::validate::{
    escalate_query, validate_answer, validate_hop, EscalationError, Guesser, HopFinding,
    QueryWriter, SearchCache, Verifier,
};

pub const HOP_KIND: &str = "hop";
pub const ANSWER_KIND: &str = "answer";
pub const GOAL_ID: &str = "goal";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanSpecError {
    #[error("hop count {0} outside 2..=4")]
    HopCount(usize),
    #[error("{got} sub-questions for {hops} hops")]
    SubQuestions { hops: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopPlanSpec {
    pub hop_count: usize,
    pub sub_questions: Vec<String>,
}

impl HopPlanSpec {
    pub fn new(hop_count: usize, sub_questions: Vec<String>) -> Result<Self, PlanSpecError> {
        if !(2..=4).contains(&hop_count) {
            return Err(PlanSpecError::HopCount(hop_count));
        }
        if sub_questions.len() != hop_count {
            return Err(PlanSpecError::SubQuestions {
                hops: hop_count,
                got: sub_questions.len(),
            });
        }
        Ok(Self {
            hop_count,
            sub_questions,
        })
    }

    /// hop_count hop predicates, then answer, then goal.
    pub fn predicates(&self, question: &str) -> Vec<Predicate> {
        let mut out: Vec<Predicate> = self
            .sub_questions
            .iter()
            .enumerate()
            .map(|(i, q)| hop_predicate(i, q, None))
            .collect();
        out.push(answer_predicate(None));
        out.push(goal_predicate(question));
        out
    }
}

pub fn hop_predicate(hop: usize, sub_question: &str, replan: Option<usize>) -> Predicate {
    let id = match replan {
        None => format!("hop{}", hop + 1),
        Some(r) => format!("hop{}_r{r}", hop + 1),
    };
    Predicate::new(
        id,
        format!("A supported finding answers: {sub_question}"),
        HOP_KIND,
    )
    .with_attrs(json!({"hop": hop, "sub_question": sub_question}))
}

pub fn answer_predicate(replan: Option<usize>) -> Predicate {
    let id = replan.map_or("answer".to_string(), |r| format!("answer_r{r}"));
    Predicate::new(
        id,
        "A final answer consistent with the certified findings is recorded",
        ANSWER_KIND,
    )
}

pub fn goal_predicate(question: &str) -> Predicate {
    Predicate::goal(GOAL_ID, format!("The question is answered: {question}"))
}

fn hop_of(p: &Predicate) -> Option<(usize, String)> {
    let hop = p.attrs.get("hop")?.as_u64()? as usize;
    let q = p.attrs.get("sub_question")?.as_str()?.to_string();
    Some((hop, q))
}

/// Replaces `#k` with the bridge entity of certified hop k (1-based).
pub fn substitute_bridges(sub_question: &str, findings: &[HopFinding]) -> String {
    let mut out = sub_question.to_string();
    for (i, f) in findings.iter().enumerate().rev() {
        if let Some(b) = &f.bridge_entity {
            out = out.replace(&format!("#{}", i + 1), b);
        }
    }
    out
}

/// Where paragraphs come from. Distractor mode uses only the task's
/// paragraphs and never searches.
#[derive(Clone)]
pub enum Retrieval {
    Distractor,
    OpenDomain { index: Arc<Bm25Index>, top_k: usize },
}

impl Retrieval {
    pub fn open(index: Arc<Bm25Index>) -> Self {
        Self::OpenDomain {
            index,
            top_k: DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaTask {
    pub id: String,
    pub question: String,
    pub hop_count: usize,
    /// Provided paragraphs (distractor mode); empty in open-domain mode.
    #[serde(default)]
    pub paragraphs: Vec<Paragraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_answer: Option<String>,
    /// Stricter answer filters (length, type, self-reference, bridges).
    #[serde(default)]
    pub strict: bool,
}

/// Model or script behind the adapter.
pub trait QaBackend: Verifier + QueryWriter {
    /// Sub-questions for every hop. Replans pass the certified findings and a
    /// failure summary; the first `certified.len()` entries are ignored.
    fn decompose(
        &self,
        question: &str,
        hops: usize,
        certified: &[HopFinding],
        failure: &str,
    ) -> Result<Vec<String>, OperatorError>;

    fn read(
        &self,
        question: &str,
        sub_question: &str,
        paragraphs: &[Paragraph],
        prior: &[HopFinding],
        failed: &[AttemptRecord],
    ) -> Result<HopFinding, OperatorError>;

    fn answer(
        &self,
        question: &str,
        findings: &[HopFinding],
        failed: &[AttemptRecord],
    ) -> Result<String, OperatorError>;

    fn guesser(&self) -> Option<&dyn Guesser> {
        None
    }
}

/// Episode-local retrieval state. Paragraphs and the cache only grow.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QaContext {
    pub question: String,
    pub available: Vec<Paragraph>,
    pub cache: SearchCache,
    pub findings: Vec<HopFinding>,
    #[serde(default)]
    pub answer: Option<String>,
    /// Queries issued per hop index, in order.
    #[serde(default)]
    pub tried: BTreeMap<usize, Vec<String>>,
}

impl QaContext {
    fn absorb(&mut self, paragraphs: impl IntoIterator<Item = Paragraph>) {
        let have: BTreeSet<String> = self.available.iter().map(|p| p.doc_id.clone()).collect();
        let mut have = have;
        for p in paragraphs {
            if have.insert(p.doc_id.clone()) {
                self.available.push(p);
            }
        }
    }

    fn from_value(v: &Value) -> Result<Self, OperatorError> {
        serde_json::from_value(v.clone())
            .map_err(|e| OperatorError::adapter(format!("bad QA context: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QaAction {
    Hop {
        hop: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        query: Option<String>,
        #[serde(default)]
        retrieved: Vec<Paragraph>,
        finding: HopFinding,
    },
    Answer {
        answer: String,
    },
    Finish,
}

impl QaAction {
    fn to_action(&self) -> Result<Action, OperatorError> {
        let rendered = match self {
            QaAction::Hop {
                hop,
                query,
                finding,
                ..
            } => format!(
                "hop {}: {}finding `{}` citing `{}`",
                hop + 1,
                query
                    .as_ref()
                    .map_or(String::new(), |q| format!("searched `{q}`, ")),
                finding.finding_text,
                finding.cited_title
            ),
            QaAction::Answer { answer } => format!("answer: {answer}"),
            QaAction::Finish => "finish".into(),
        };
        Action::new(
            serde_json::to_value(self).map_err(|e| OperatorError::adapter(e.to_string()))?,
            rendered,
        )
    }

    fn from_action(a: &Action) -> Result<Self, OperatorError> {
        serde_json::from_value(a.payload.clone())
            .map_err(|e| OperatorError::adapter(format!("not a QA action: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaObservation {
    pub action: QaAction,
    /// The live context after the step.
    pub context: QaContext,
}

/// Holds the live context; searches accumulate even when a hop fails.
pub struct QaEnvironment {
    initial: QaContext,
    live: QaContext,
    pending: Option<QaAction>,
}

impl QaEnvironment {
    pub fn new(task: &QaTask) -> Self {
        let mut initial = QaContext {
            question: task.question.clone(),
            ..QaContext::default()
        };
        initial.absorb(task.paragraphs.iter().cloned());
        Self {
            live: initial.clone(),
            initial,
            pending: None,
        }
    }

    pub fn context(&self) -> &QaContext {
        &self.live
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, OperatorError> {
    serde_json::to_value(v).map_err(|e| OperatorError::adapter(e.to_string()))
}

impl Environment for QaEnvironment {
    fn reset(&mut self) -> Result<Value, OperatorError> {
        self.live = self.initial.clone();
        self.pending = None;
        to_value(&self.live)
    }

    fn view(&self) -> Value {
        to_value(&self.live).unwrap_or(Value::Null)
    }

    fn step(&mut self, action: &Action) -> Result<Observation, OperatorError> {
        let a = QaAction::from_action(action)?;
        if let QaAction::Hop {
            hop,
            query: Some(q),
            retrieved,
            ..
        } = &a
        {
            self.live.tried.entry(*hop).or_default().push(q.clone());
            let ids: Vec<String> = retrieved.iter().map(|p| p.doc_id.clone()).collect();
            self.live.cache.entry(q.clone()).or_insert(ids);
            self.live.absorb(retrieved.iter().cloned());
        }
        self.pending = Some(a.clone());
        let obs = QaObservation {
            action: a,
            context: self.live.clone(),
        };
        Ok(Observation::new(to_value(&obs)?, action.rendered.clone()))
    }

    fn commit(
        &mut self,
        _certified: &[Predicate],
        verdict: &ValidationVerdict,
    ) -> Result<Value, OperatorError> {
        match self.pending.take() {
            Some(QaAction::Hop { mut finding, .. }) => {
                if let Some(t) = verdict.detail.get("title").and_then(Value::as_str) {
                    finding.cited_title = t.to_string();
                }
                self.live.findings.push(finding);
            }
            Some(QaAction::Answer { answer }) => self.live.answer = Some(answer),
            Some(QaAction::Finish) => {}
            None => return Err(OperatorError::adapter("commit without a pending step")),
        }
        to_value(&self.live)
    }
}

pub struct QaOperators<B> {
    task: QaTask,
    backend: B,
    retrieval: Retrieval,
    sub_questions: OnceCell<Vec<String>>,
}

impl<B: QaBackend> QaOperators<B> {
    pub fn new(task: QaTask, backend: B, retrieval: Retrieval) -> Result<Self, PlanSpecError> {
        if !(2..=4).contains(&task.hop_count) {
            return Err(PlanSpecError::HopCount(task.hop_count));
        }
        Ok(Self {
            task,
            backend,
            retrieval,
            sub_questions: OnceCell::new(),
        })
    }

    pub fn task(&self) -> EpisodeTask {
        EpisodeTask::new(self.task.id.clone(), goal_predicate(&self.task.question))
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    fn plan(&self) -> Result<&Vec<String>, OperatorError> {
        if let Some(p) = self.sub_questions.get() {
            return Ok(p);
        }
        let qs = self
            .backend
            .decompose(&self.task.question, self.task.hop_count, &[], "")?;
        let spec = HopPlanSpec::new(self.task.hop_count, qs)
            .map_err(|e| OperatorError::adapter(e.to_string()))?;
        Ok(self.sub_questions.get_or_init(|| spec.sub_questions))
    }

    fn search(&self, query: &str) -> Vec<Paragraph> {
        match &self.retrieval {
            Retrieval::Distractor => Vec::new(),
            Retrieval::OpenDomain { index, top_k } => match index.search(query, *top_k) {
                Ok(hits) => hits.into_iter().map(|h| h.paragraph).collect(),
                Err(IndexError::EmptyQuery) => Vec::new(),
                Err(e) => {
                    debug_assert!(false, "{e}");
                    Vec::new()
                }
            },
        }
    }
}

impl<B: QaBackend> Operators for QaOperators<B> {
    fn propose(
        &self,
        input: &ProposeInput<'_>,
        goal: &Predicate,
    ) -> Result<Predicate, OperatorError> {
        let qs = self.plan()?;
        let i = input.position;
        Ok(match i.cmp(&qs.len()) {
            std::cmp::Ordering::Less => hop_predicate(i, &qs[i], None),
            std::cmp::Ordering::Equal => answer_predicate(None),
            std::cmp::Ordering::Greater => goal.clone(),
        })
    }

    fn realize(&self, input: &RealizeInput<'_>) -> Result<Action, OperatorError> {
        let ctx = QaContext::from_value(input.view)?;
        let target = input.target;
        let action = if target.is_goal {
            QaAction::Finish
        } else if target.kind == ANSWER_KIND {
            QaAction::Answer {
                answer: self
                    .backend
                    .answer(&ctx.question, &ctx.findings, input.failed_attempts)?,
            }
        } else {
            let (hop, raw) = hop_of(target)
                .ok_or_else(|| OperatorError::adapter(format!("{} is not a hop", target.id)))?;
            let sub_question = substitute_bridges(&raw, &ctx.findings);
            let (query, retrieved) = match &self.retrieval {
                Retrieval::Distractor => (None, Vec::new()),
                Retrieval::OpenDomain { .. } => {
                    let tried = ctx.tried.get(&hop).map_or(&[][..], Vec::as_slice);
                    let q = escalate_query(
                        &ctx.question,
                        &sub_question,
                        &ctx.findings,
                        tried,
                        &self.backend,
                        self.backend.guesser(),
                    )
                    .map_err(|e| match e {
                        EscalationError::Operator(o) => o,
                        other => OperatorError::adapter(other.to_string()),
                    })?;
                    let hits = self.search(&q);
                    (Some(q), hits)
                }
            };
            let mut pool = ctx.clone();
            pool.absorb(retrieved.iter().cloned());
            let mut finding = self.backend.read(
                &ctx.question,
                &sub_question,
                &pool.available,
                &ctx.findings,
                input.failed_attempts,
            )?;
            finding.sub_question = sub_question;
            QaAction::Hop {
                hop,
                query,
                retrieved,
                finding,
            }
        };
        action.to_action()
    }

    fn validate(
        &self,
        tail: &[Predicate],
        observation: &Observation,
    ) -> Result<ValidationVerdict, OperatorError> {
        let head = tail
            .first()
            .ok_or_else(|| OperatorError::adapter("validate called with an empty tail"))?;
        let obs: QaObservation = serde_json::from_value(observation.payload.clone())
            .map_err(|e| OperatorError::adapter(format!("not a QA observation: {e}")))?;
        let ctx = &obs.context;
        match (&obs.action, head.kind.as_str(), head.is_goal) {
            (QaAction::Finish, _, true) => Ok(match &ctx.answer {
                Some(_) => ValidationVerdict::new(1, "answer recorded"),
                None => ValidationVerdict::reject("no answer recorded"),
            }),
            (QaAction::Answer { answer }, ANSWER_KIND, false) => {
                let goal_next = tail.get(1).is_some_and(|p| p.is_goal);
                Ok(validate_answer(
                    answer,
                    &ctx.question,
                    &ctx.findings,
                    self.task.strict,
                    goal_next,
                ))
            }
            (QaAction::Hop { hop, finding, .. }, HOP_KIND, false) => {
                if hop_of(head).map(|h| h.0) != Some(*hop) {
                    return Ok(ValidationVerdict::reject("finding targets a different hop"));
                }
                validate_hop(finding, &ctx.available, &ctx.cache, &self.backend)
            }
            _ => Ok(ValidationVerdict::reject(format!(
                "action does not address `{}`",
                head.id
            ))),
        }
    }

    /// Re-decomposes with failure context; certified hops are kept and only
    /// the remaining sub-questions are regenerated.
    fn replan(
        &self,
        state: &CertifiedState,
        goal: &Predicate,
        trajectory: &TrajectoryView<'_>,
    ) -> Result<Vec<Predicate>, OperatorError> {
        let ctx = QaContext::from_value(&state.context)?;
        let idx = trajectory.replan_events.len() + 1;
        let done = ctx.findings.len();
        let mut out = Vec::new();
        if trajectory.stuck.kind == HOP_KIND {
            let failure: Vec<String> = trajectory
                .failed_here
                .iter()
                .map(|a| format!("{} -> {}", a.action.rendered, a.verdict.reason))
                .collect();
            let qs = self.backend.decompose(
                &ctx.question,
                self.task.hop_count,
                &ctx.findings,
                &failure.join("\n"),
            )?;
            let remaining = self.task.hop_count.saturating_sub(done);
            let fresh: Vec<String> = if qs.len() >= self.task.hop_count {
                qs[done..self.task.hop_count].to_vec()
            } else if qs.len() == remaining {
                qs
            } else {
                return Err(OperatorError::adapter(format!(
                    "replan produced {} sub-questions, need {remaining} or {}",
                    qs.len(),
                    self.task.hop_count
                )));
            };
            out.extend(
                fresh
                    .iter()
                    .enumerate()
                    .map(|(i, q)| hop_predicate(done + i, q, Some(idx))),
            );
        }
        out.push(answer_predicate(Some(idx)));
        out.push(goal.clone());
        Ok(out)
    }

    fn finalize(
        &self,
        state: &CertifiedState,
        goal_certified: bool,
    ) -> Result<Finalization, OperatorError> {
        let ctx = QaContext::from_value(&state.context)?;
        Ok(Finalization {
            answer: ctx.answer.map(Value::String),
            forced: !goal_certified,
        })
    }
}

pub fn run_qa<B: QaBackend>(
    task: &QaTask,
    backend: B,
    retrieval: Retrieval,
    config: &EngineConfig,
) -> Result<TrajectoryArtifact, QaRunError> {
    let ops = QaOperators::new(task.clone(), backend, retrieval)?;
    let mut env = QaEnvironment::new(task);
    Ok(run_episode(config, &ops, &mut env, &ops.task())?)
}

#[derive(Debug, Error)]
pub enum QaRunError {
    #[error(transparent)]
    Plan(#[from] PlanSpecError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
}

/// Table-driven backend for deterministic runs and tests.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct ScriptedQa {
    /// The n-th decomposition call returns entry n; the last one repeats.
    pub decompositions: Vec<Vec<String>>,
    /// Findings per sub-question, indexed by retries on the target.
    pub findings: BTreeMap<String, Vec<HopFinding>>,
    /// Answers indexed by retries on the answer predicate.
    pub answers: Vec<String>,
    /// (finding_text, paragraph title) pairs the verifier accepts.
    pub supported: BTreeSet<(String, String)>,
    #[serde(default)]
    pub guesses: BTreeMap<String, String>,
    #[serde(skip)]
    decompose_calls: AtomicUsize,
    #[serde(skip)]
    verify_calls: AtomicUsize,
}

impl ScriptedQa {
    pub fn verify_calls(&self) -> usize {
        self.verify_calls.load(Ordering::Relaxed)
    }

    pub fn decompose_calls(&self) -> usize {
        self.decompose_calls.load(Ordering::Relaxed)
    }

    pub fn support(mut self, finding_text: &str, title: &str) -> Self {
        self.supported.insert((finding_text.into(), title.into()));
        self
    }
}

fn retries_on(failed: &[AttemptRecord]) -> usize {
    failed.len()
}

impl Verifier for ScriptedQa {
    fn verify(&self, finding: &HopFinding, paragraph: &Paragraph) -> Result<bool, OperatorError> {
        self.verify_calls.fetch_add(1, Ordering::Relaxed);
        Ok(self
            .supported
            .contains(&(finding.finding_text.clone(), paragraph.title.clone())))
    }
}

impl QueryWriter for ScriptedQa {
    fn write_query(
        &self,
        question: &str,
        sub_question: &str,
        prior: &[HopFinding],
        tried: &[String],
    ) -> Result<String, OperatorError> {
        crate::validate::KeywordQueries.write_query(question, sub_question, prior, tried)
    }
}

impl Guesser for ScriptedQa {
    fn guess(&self, sub_question: &str) -> Result<String, OperatorError> {
        self.guesses.get(sub_question).cloned().ok_or_else(|| {
            OperatorError::adapter(format!("no scripted guess for `{sub_question}`"))
        })
    }
}

impl QaBackend for ScriptedQa {
    fn decompose(
        &self,
        _: &str,
        _: usize,
        _: &[HopFinding],
        _: &str,
    ) -> Result<Vec<String>, OperatorError> {
        let n = self.decompose_calls.fetch_add(1, Ordering::Relaxed);
        self.decompositions
            .get(n.min(self.decompositions.len().saturating_sub(1)))
            .cloned()
            .ok_or_else(|| OperatorError::adapter("no scripted decomposition"))
    }

    fn read(
        &self,
        _: &str,
        sub_question: &str,
        _: &[Paragraph],
        _: &[HopFinding],
        failed: &[AttemptRecord],
    ) -> Result<HopFinding, OperatorError> {
        let list = self
            .findings
            .get(sub_question)
            .filter(|l| !l.is_empty())
            .ok_or_else(|| {
                OperatorError::adapter(format!("no scripted finding for `{sub_question}`"))
            })?;
        Ok(list[retries_on(failed).min(list.len() - 1)].clone())
    }

    fn answer(
        &self,
        _: &str,
        _: &[HopFinding],
        failed: &[AttemptRecord],
    ) -> Result<String, OperatorError> {
        self.answers
            .get(retries_on(failed).min(self.answers.len().saturating_sub(1)))
            .cloned()
            .ok_or_else(|| OperatorError::adapter("no scripted answer"))
    }

    fn guesser(&self) -> Option<&dyn Guesser> {
        (!self.guesses.is_empty()).then_some(self as &dyn Guesser)
    }
}
