//! Hop and answer validation, and escalating query selection.

use std::collections::{BTreeMap, BTreeSet};

use sdp_core::{OperatorError, ValidationVerdict};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::index::Paragraph;
use crate::text::{content_words, is_stopword, title_key, tokenize, words};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopFinding {
    pub sub_question: String,
    pub cited_title: String,
    pub finding_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge_entity: Option<String>,
}

/// Query string to the doc_ids it retrieved. Only grows within an episode.
pub type SearchCache = BTreeMap<String, Vec<String>>;

pub const NEGATION_PHRASES: [&str; 3] = ["does not provide", "not mentioned", "not specified"];

/// Judges whether a paragraph supports a finding as an answer to its
/// sub-question.
pub trait Verifier {
    fn verify(&self, finding: &HopFinding, paragraph: &Paragraph) -> Result<bool, OperatorError>;
}

fn padded(key: &str) -> String {
    format!(" {key} ")
}

/// Exact title, then whole-word substring either way, then a cached query
/// equal to the cited title.
pub fn resolve_title<'a>(
    cited: &str,
    available: &'a [Paragraph],
    cache: &SearchCache,
) -> Option<&'a Paragraph> {
    let key = title_key(cited);
    if key.is_empty() {
        return None;
    }
    if let Some(p) = available.iter().find(|p| title_key(&p.title) == key) {
        return Some(p);
    }
    if let Some(p) = available
        .iter()
        .find(|p| padded(&title_key(&p.title)).contains(&padded(&key)))
    {
        return Some(p);
    }
    let within = available
        .iter()
        .filter(|p| {
            let t = title_key(&p.title);
            !t.is_empty() && padded(&key).contains(&padded(&t))
        })
        .max_by_key(|p| {
            (
                title_key(&p.title).len(),
                std::cmp::Reverse(p.doc_id.clone()),
            )
        });
    if within.is_some() {
        return within;
    }
    let ids = cache
        .iter()
        .find(|(q, _)| title_key(q) == key)
        .map(|(_, ids)| ids)?;
    ids.iter()
        .find_map(|id| available.iter().find(|p| &p.doc_id == id))
}

/// Count of the finding's content words that occur in the paragraph text.
pub fn keyword_overlap(finding: &str, paragraph: &Paragraph) -> usize {
    let text: BTreeSet<String> = words(&paragraph.text).into_iter().collect();
    content_words(finding)
        .iter()
        .filter(|w| text.contains(*w))
        .count()
}

pub fn negation_phrase(text: &str) -> Option<&'static str> {
    let t = text.to_lowercase();
    NEGATION_PHRASES.into_iter().find(|p| t.contains(p))
}

/// Two-stage hop check. On success `detail.title` is the paragraph title
/// the finding should carry and `detail.stage` says which stage accepted it.
pub fn validate_hop(
    finding: &HopFinding,
    available: &[Paragraph],
    cache: &SearchCache,
    verifier: &dyn Verifier,
) -> Result<ValidationVerdict, OperatorError> {
    if finding.finding_text.trim().is_empty() {
        return Ok(ValidationVerdict::reject("empty finding"));
    }
    if let Some(p) = negation_phrase(&finding.finding_text) {
        return Ok(ValidationVerdict::reject(format!(
            "finding contains the negation phrase `{p}`"
        )));
    }
    let primary = resolve_title(&finding.cited_title, available, cache);
    if let Some(p) = primary {
        if verifier.verify(finding, p)? {
            return Ok(
                ValidationVerdict::new(1, format!("supported by `{}`", p.title))
                    .with_detail(json!({"title": p.title, "doc_id": p.doc_id, "stage": "primary"})),
            );
        }
    }
    let best = available
        .iter()
        .filter(|p| primary.is_none_or(|q| q.doc_id != p.doc_id))
        .map(|p| (keyword_overlap(&finding.finding_text, p), p))
        .filter(|(n, _)| *n > 0)
        // First paragraph wins ties.
        .fold(None::<(usize, &Paragraph)>, |best, c| match best {
            Some(b) if b.0 >= c.0 => Some(b),
            _ => Some(c),
        });
    let why = match primary {
        Some(p) => format!("`{}` does not support the finding", p.title),
        None => format!(
            "cited title `{}` matches no available paragraph",
            finding.cited_title
        ),
    };
    match best {
        Some((_, p)) if verifier.verify(finding, p)? => Ok(ValidationVerdict::new(
            1,
            format!("{why}; accepted with corrected title `{}`", p.title),
        )
        .with_detail(json!({"title": p.title, "doc_id": p.doc_id, "stage": "fallback"}))),
        Some((_, p)) => Ok(ValidationVerdict::reject(format!(
            "{why}; fallback `{}` not verified either",
            p.title
        ))),
        None => Ok(ValidationVerdict::reject(format!(
            "{why}; no fallback paragraph overlaps the finding"
        ))),
    }
}

pub const MAX_STRICT_ANSWER_WORDS: usize = 15;

const MONTHS: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

fn garbage(answer: &str) -> Option<&'static str> {
    let a = words(answer).join(" ");
    if a.is_empty() {
        return Some("empty answer");
    }
    if a == "unknown" || a == "none" || a == "n a" {
        return Some("answer is a placeholder");
    }
    ["not available", "cannot determine", "cannot be determined"]
        .into_iter()
        .find(|p| a.contains(p))
        .map(|_| "answer is a refusal")
}

/// A "when" question, or one asking for a year.
pub fn is_when_question(question: &str) -> bool {
    let w = words(question);
    w.iter().any(|t| t == "when")
        || w.windows(2)
            .any(|p| matches!(p[1].as_str(), "year") && matches!(p[0].as_str(), "what" | "which"))
}

fn looks_temporal(answer: &str) -> bool {
    answer.chars().any(|c| c.is_ascii_digit())
        || words(answer).iter().any(|w| MONTHS.contains(&w.as_str()))
}

/// Answer check. Strict mode adds the self-reference, bridge, length and
/// type filters. Success certifies the goal too when it comes next.
pub fn validate_answer(
    answer: &str,
    question: &str,
    hop_chain: &[HopFinding],
    strict: bool,
    goal_next: bool,
) -> ValidationVerdict {
    if let Some(why) = garbage(answer) {
        return ValidationVerdict::reject(why);
    }
    if strict {
        let key = title_key(answer);
        if !tokenize(answer).is_empty() && padded(&title_key(question)).contains(&padded(&key)) {
            return ValidationVerdict::reject("answer repeats an entity from the question");
        }
        let intermediate = hop_chain.len().saturating_sub(1);
        if hop_chain[..intermediate]
            .iter()
            .filter_map(|h| h.bridge_entity.as_deref())
            .any(|b| title_key(b) == key)
        {
            return ValidationVerdict::reject("answer is an intermediate bridge entity");
        }
        let n = answer.split_whitespace().count();
        if n > MAX_STRICT_ANSWER_WORDS {
            return ValidationVerdict::reject(format!(
                "answer has {n} words, limit {MAX_STRICT_ANSWER_WORDS}"
            ));
        }
        if is_when_question(question) && !looks_temporal(answer) {
            return ValidationVerdict::reject("a when-question needs a date, year or month");
        }
    }
    if goal_next {
        ValidationVerdict::new(2, "answer accepted; goal certified with it")
    } else {
        ValidationVerdict::new(1, "answer accepted")
    }
}

/// Writes a retrieval query for a sub-question given the queries tried so far.
pub trait QueryWriter {
    fn write_query(
        &self,
        question: &str,
        sub_question: &str,
        prior: &[HopFinding],
        tried: &[String],
    ) -> Result<String, OperatorError>;
}

pub trait Guesser {
    fn guess(&self, sub_question: &str) -> Result<String, OperatorError>;
}

#[derive(Debug, Error)]
pub enum EscalationError {
    #[error("six queries failed and no guesser is configured")]
    GuesserUnavailable,
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Quoted spans, then runs of capitalized non-stopword tokens.
pub fn extract_entities(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(i) = rest.find(['"', '“']) {
        let after = &rest[i + rest[i..].chars().next().map_or(1, char::len_utf8)..];
        match after.find(['"', '”']) {
            Some(j) => {
                let span = after[..j].trim();
                if !span.is_empty() {
                    out.push(span.to_string());
                }
                rest = &after[j + 1..];
            }
            None => break,
        }
    }
    let mut run: Vec<&str> = Vec::new();
    for raw in text.split_whitespace() {
        let tok = raw.trim_matches(|c: char| !c.is_alphanumeric());
        let cap =
            tok.chars().next().is_some_and(char::is_uppercase) && !is_stopword(&tok.to_lowercase());
        if cap {
            run.push(tok);
        }
        let ends_here = !cap || raw.ends_with([',', '?', '.', ';', ':', '!']);
        if ends_here && !run.is_empty() {
            let e = run.join(" ");
            if !out.contains(&e) {
                out.push(e);
            }
            run.clear();
        }
    }
    if !run.is_empty() {
        let e = run.join(" ");
        if !out.contains(&e) {
            out.push(e);
        }
    }
    out
}

/// Entity-only query; falls back to the content words when no entity is found.
pub fn entity_query(sub_question: &str) -> String {
    let e = extract_entities(sub_question);
    if e.is_empty() {
        tokenize(sub_question).join(" ")
    } else {
        e.join(" ")
    }
}

/// Queries 1 to 4 come from the writer, 5 and 6 are entity-only, later ones
/// search for a guessed answer.
pub fn escalate_query(
    question: &str,
    sub_question: &str,
    prior: &[HopFinding],
    tried: &[String],
    writer: &dyn QueryWriter,
    guesser: Option<&dyn Guesser>,
) -> Result<String, EscalationError> {
    match tried.len() {
        0..=3 => Ok(writer.write_query(question, sub_question, prior, tried)?),
        4 | 5 => Ok(entity_query(sub_question)),
        _ => match guesser {
            Some(g) => Ok(g.guess(sub_question)?),
            None => Err(EscalationError::GuesserUnavailable),
        },
    }
}

/// Deterministic writer: the sub-question verbatim first, then its content
/// terms with one more leading term dropped per retry.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeywordQueries;

impl QueryWriter for KeywordQueries {
    fn write_query(
        &self,
        _: &str,
        sub_question: &str,
        _: &[HopFinding],
        tried: &[String],
    ) -> Result<String, OperatorError> {
        if tried.is_empty() {
            return Ok(sub_question.to_string());
        }
        let terms = tokenize(sub_question);
        let kept = &terms[tried.len().min(terms.len())..];
        Ok(if kept.is_empty() {
            terms.join(" ")
        } else {
            kept.join(" ")
        })
    }
}
