//! Model-backed QA backend.

use sdp_core::{AttemptRecord, OperatorError};
use sdp_operators::{
    render_attempt_history, tolerant_parse, ChatClient, FieldSpec, FieldType, PromptTemplates,
};
use serde_json::{Map, Value};

use crate::index::Paragraph;
use crate::qa::QaBackend;
use crate::validate::{Guesser, HopFinding, QueryWriter, Verifier};

/// Characters of paragraph text shown per paragraph in reading prompts.
const PARAGRAPH_CHARS: usize = 600;

pub struct LlmQa {
    client: ChatClient,
    templates: PromptTemplates,
}

impl LlmQa {
    pub fn new(client: ChatClient) -> Self {
        let mut templates = PromptTemplates::default();
        templates.insert("decompose", include_str!("../prompts/decompose.txt"));
        templates.insert("query", include_str!("../prompts/query.txt"));
        templates.insert("read", include_str!("../prompts/read.txt"));
        templates.insert("answer", include_str!("../prompts/answer.txt"));
        templates.insert("verify", include_str!("../prompts/verify.txt"));
        templates.insert("guess", include_str!("../prompts/guess.txt"));
        Self { client, templates }
    }

    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    fn ask(
        &self,
        name: &str,
        vars: &[(&str, &str)],
        fields: &[FieldSpec],
    ) -> Result<Map<String, Value>, OperatorError> {
        let prompt = self.templates.render(name, vars)?;
        let raw = self.client.ask(&prompt)?;
        Ok(tolerant_parse(&raw, fields)?)
    }
}

fn str_field(rec: &Map<String, Value>, name: &str) -> String {
    rec.get(name)
        .and_then(Value::as_str)
        .unwrap_or_default()
        .trim()
        .to_string()
}

fn describe_findings(findings: &[HopFinding]) -> String {
    findings
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let bridge = f
                .bridge_entity
                .as_deref()
                .map_or(String::new(), |b| format!(" [#{}: {b}]", i + 1));
            format!(
                "{}. {} -> {} (from \"{}\"){bridge}",
                i + 1,
                f.sub_question,
                f.finding_text,
                f.cited_title
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn block(title: &str, body: String) -> String {
    if body.is_empty() {
        String::new()
    } else {
        format!("\n{title}:\n{body}\n")
    }
}

fn clip(text: &str) -> &str {
    match text.char_indices().nth(PARAGRAPH_CHARS) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

impl Verifier for LlmQa {
    fn verify(&self, finding: &HopFinding, paragraph: &Paragraph) -> Result<bool, OperatorError> {
        let rec = self.ask(
            "verify",
            &[
                ("sub_question", &finding.sub_question),
                ("finding", &finding.finding_text),
                ("title", &paragraph.title),
                ("text", &paragraph.text),
            ],
            &[FieldSpec::required("supported", FieldType::Bool)],
        )?;
        Ok(rec["supported"].as_bool().unwrap_or(false))
    }
}

impl QueryWriter for LlmQa {
    fn write_query(
        &self,
        question: &str,
        sub_question: &str,
        prior: &[HopFinding],
        tried: &[String],
    ) -> Result<String, OperatorError> {
        let tried_list = tried
            .iter()
            .map(|q| format!("- {q}"))
            .collect::<Vec<_>>()
            .join("\n");
        let rec = self.ask(
            "query",
            &[
                ("question", question),
                ("sub_question", sub_question),
                (
                    "prior",
                    &block("Certified findings", describe_findings(prior)),
                ),
                ("tried", &block("Queries already tried", tried_list)),
            ],
            &[FieldSpec::required("query", FieldType::Str)],
        )?;
        let q = str_field(&rec, "query");
        Ok(if q.is_empty() {
            sub_question.to_string()
        } else {
            q
        })
    }
}

impl Guesser for LlmQa {
    fn guess(&self, sub_question: &str) -> Result<String, OperatorError> {
        let rec = self.ask(
            "guess",
            &[("sub_question", sub_question)],
            &[FieldSpec::required("guess", FieldType::Str)],
        )?;
        Ok(str_field(&rec, "guess"))
    }
}

impl QaBackend for LlmQa {
    fn decompose(
        &self,
        question: &str,
        hops: usize,
        certified: &[HopFinding],
        failure: &str,
    ) -> Result<Vec<String>, OperatorError> {
        let hops_text = hops.to_string();
        let certified_text = block(
            "Already answered (keep these as the first sub-questions, unchanged)",
            describe_findings(certified),
        );
        let rec = self.ask(
            "decompose",
            &[
                ("question", question),
                ("hops", &hops_text),
                ("certified", &certified_text),
                (
                    "failure",
                    &block("The previous decomposition got stuck", failure.to_string()),
                ),
            ],
            &[FieldSpec::required("sub_questions", FieldType::StrList)],
        )?;
        Ok(rec["sub_questions"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(Value::as_str)
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect())
    }

    fn read(
        &self,
        question: &str,
        sub_question: &str,
        paragraphs: &[Paragraph],
        prior: &[HopFinding],
        failed: &[AttemptRecord],
    ) -> Result<HopFinding, OperatorError> {
        let listing = paragraphs
            .iter()
            .map(|p| format!("[{}] {}", p.title, clip(&p.text)))
            .collect::<Vec<_>>()
            .join("\n");
        let rec = self.ask(
            "read",
            &[
                ("question", question),
                ("sub_question", sub_question),
                (
                    "prior",
                    &block("Certified findings", describe_findings(prior)),
                ),
                (
                    "paragraphs",
                    if listing.is_empty() {
                        "(none retrieved)"
                    } else {
                        &listing
                    },
                ),
                ("history", &render_attempt_history(failed)),
            ],
            &[
                FieldSpec::required("finding", FieldType::Str),
                FieldSpec::optional("title", FieldType::Str),
                FieldSpec::optional("bridge_entity", FieldType::Str),
            ],
        )?;
        let bridge = str_field(&rec, "bridge_entity");
        Ok(HopFinding {
            sub_question: sub_question.to_string(),
            cited_title: str_field(&rec, "title"),
            finding_text: str_field(&rec, "finding"),
            bridge_entity: (!bridge.is_empty()).then_some(bridge),
        })
    }

    fn answer(
        &self,
        question: &str,
        findings: &[HopFinding],
        failed: &[AttemptRecord],
    ) -> Result<String, OperatorError> {
        let rec = self.ask(
            "answer",
            &[
                ("question", question),
                ("findings", &describe_findings(findings)),
                ("history", &render_attempt_history(failed)),
            ],
            &[FieldSpec::required("answer", FieldType::Str)],
        )?;
        Ok(str_field(&rec, "answer"))
    }

    fn guesser(&self) -> Option<&dyn Guesser> {
        Some(self)
    }
}
