//! BM25 inverted index with a title stage ahead of content scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::text::{is_stopword, strip_disambiguation, title_key, tokenize, words};

pub const INDEX_FORMAT: &str = "sdp-bm25-index";
pub const INDEX_VERSION: u32 = 1;
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub doc_id: String,
    pub title: String,
    pub text: String,
}

impl Paragraph {
    pub fn new(
        doc_id: impl Into<String>,
        title: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position in `docs`, which is sorted by doc_id.
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate doc_id `{0}`")]
    DuplicateDoc(String),
    #[error("paragraph `{0}` has an empty title")]
    EmptyTitle(String),
    #[error("query has no searchable terms")]
    EmptyQuery,
    #[error("top_k must be at least 1")]
    ZeroTopK,
    #[error("index file is not a {INDEX_FORMAT} file")]
    NotAnIndex,
    #[error("index file version {found}, this build reads version {INDEX_VERSION}")]
    Version { found: u64 },
    #[error("index file is inconsistent: {0}")]
    Corrupt(String),
    #[error("corpus line {line}: {message}")]
    CorpusLine { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    pub params: Bm25Params,
    pub docs: Vec<Paragraph>,
    pub postings: BTreeMap<String, Vec<Posting>>,
    pub doc_lens: Vec<u32>,
    pub avg_len: f64,
    /// Title key (full and with the disambiguation suffix stripped) to docs.
    pub titles: BTreeMap<String, Vec<u32>>,
}

/// Title and text together form the scored content.
fn content_terms(p: &Paragraph) -> Vec<String> {
    tokenize(&format!("{} {}", p.title, p.text))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub paragraph: Paragraph,
    /// BM25 content score, also for title-stage hits.
    pub score: f64,
    /// Token length of the longest query n-gram matching the title; 0 for
    /// content-only hits.
    pub title_match: usize,
}

pub fn build_index(corpus: &[Paragraph], params: Bm25Params) -> Result<Bm25Index, IndexError> {
    if corpus.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let mut docs = corpus.to_vec();
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    for w in docs.windows(2) {
        if w[0].doc_id == w[1].doc_id {
            return Err(IndexError::DuplicateDoc(w[0].doc_id.clone()));
        }
    }
    if let Some(p) = docs.iter().find(|p| p.title.trim().is_empty()) {
        return Err(IndexError::EmptyTitle(p.doc_id.clone()));
    }
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lens = Vec::with_capacity(docs.len());
    let mut titles: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for (i, p) in docs.iter().enumerate() {
        let doc = i as u32;
        let terms = content_terms(p);
        doc_lens.push(terms.len() as u32);
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in terms {
            *tf.entry(t).or_default() += 1;
        }
        // Docs are visited in doc_id order, so each postings list stays sorted.
        for (t, n) in tf {
            postings.entry(t).or_default().push(Posting { doc, tf: n });
        }
        let keys: BTreeSet<String> = [
            title_key(&p.title),
            title_key(strip_disambiguation(&p.title)),
        ]
        .into();
        for k in keys.into_iter().filter(|k| !k.is_empty()) {
            titles.entry(k).or_default().push(doc);
        }
    }
    let avg_len = doc_lens.iter().map(|&l| f64::from(l)).sum::<f64>() / docs.len() as f64;
    Ok(Bm25Index {
        params,
        docs,
        postings,
        doc_lens,
        avg_len,
        titles,
    })
}

impl Bm25Index {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Paragraph> {
        self.docs
            .binary_search_by(|p| p.doc_id.as_str().cmp(doc_id))
            .ok()
            .map(|i| &self.docs[i])
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// Non-negative IDF: ln(1 + (N − df + 0.5) / (df + 0.5)).
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 scores of every doc sharing a term with the query. Repeated
    /// query terms count once.
    pub fn content_scores(&self, query: &str) -> BTreeMap<u32, f64> {
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        let Bm25Params { k1, b } = self.params;
        let mut scores: BTreeMap<u32, f64> = BTreeMap::new();
        for t in &terms {
            let Some(list) = self.postings.get(t) else {
                continue;
            };
            let idf = self.idf(t);
            for p in list {
                let tf = f64::from(p.tf);
                let dl = f64::from(self.doc_lens[p.doc as usize]);
                let norm = k1 * (1.0 - b + b * dl / self.avg_len);
                *scores.entry(p.doc).or_default() += idf * tf * (k1 + 1.0) / (tf + norm);
            }
        }
        scores
    }

    /// Docs whose title matches a query n-gram (1 to 3 tokens) or the whole
    /// query, with the longest matching length.
    pub fn title_matches(&self, query: &str) -> BTreeMap<u32, usize> {
        let qw = words(query);
        let mut grams: Vec<(String, usize)> = Vec::new();
        for n in 1..=3.min(qw.len()) {
            for w in qw.windows(n) {
                if w.iter().all(|t| is_stopword(t)) {
                    continue;
                }
                grams.push((w.join(" "), n));
            }
        }
        if !qw.is_empty() {
            grams.push((qw.join(" "), qw.len()));
        }
        let mut out: BTreeMap<u32, usize> = BTreeMap::new();
        for (g, n) in grams {
            for &d in self.titles.get(&g).into_iter().flatten() {
                let e = out.entry(d).or_default();
                *e = (*e).max(n);
            }
        }
        out
    }

    /// Title-matched docs first (longest match, then score), then the rest
    /// by BM25 score; ties go to the smaller doc_id.
    pub fn search(&self, query: &str, top_k: usize) -> Result<Vec<Hit>, IndexError> {
        if top_k == 0 {
            return Err(IndexError::ZeroTopK);
        }
        if tokenize(query).is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        let scores = self.content_scores(query);
        let titled = self.title_matches(query);
        let mut ranked: Vec<(usize, f64, u32)> = titled
            .iter()
            .map(|(&d, &n)| (n, scores.get(&d).copied().unwrap_or(0.0), d))
            .chain(
                scores
                    .iter()
                    .filter(|(d, _)| !titled.contains_key(d))
                    .map(|(&d, &s)| (0, s, d)),
            )
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
        Ok(ranked
            .into_iter()
            .take(top_k)
            .map(|(n, s, d)| Hit {
                paragraph: self.docs[d as usize].clone(),
                score: s,
                title_match: n,
            })
            .collect())
    }

    /// Re-derives the bookkeeping and compares.
    pub fn check(&self) -> Result<(), IndexError> {
        let corrupt = |m: &str| Err(IndexError::Corrupt(m.into()));
        if self.docs.windows(2).any(|w| w[0].doc_id >= w[1].doc_id) {
            return corrupt("docs not strictly sorted by doc_id");
        }
        if self.doc_lens.len() != self.docs.len() {
            return corrupt("doc length count differs from doc count");
        }
        if self
            .postings
            .values()
            .any(|l| l.windows(2).any(|w| w[0].doc >= w[1].doc))
        {
            return corrupt("postings not sorted by doc");
        }
        let avg = self.doc_lens.iter().map(|&l| f64::from(l)).sum::<f64>()
            / self.docs.len().max(1) as f64;
        if (avg - self.avg_len).abs() > 1e-9 * avg.max(1.0) {
            return corrupt("average length disagrees with doc lengths");
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, IndexError> {
        let mut v = serde_json::to_value(self)?;
        if let Value::Object(m) = &mut v {
            m.insert("format".into(), Value::from(INDEX_FORMAT));
            m.insert("version".into(), Value::from(INDEX_VERSION));
        }
        Ok(serde_json::to_string(&v)?)
    }

    pub fn from_json(text: &str) -> Result<Self, IndexError> {
        let v: Value = serde_json::from_str(text)?;
        if v.get("format").and_then(Value::as_str) != Some(INDEX_FORMAT) {
            return Err(IndexError::NotAnIndex);
        }
        match v.get("version").and_then(Value::as_u64) {
            Some(n) if n == u64::from(INDEX_VERSION) => {}
            found => {
                return Err(IndexError::Version {
                    found: found.unwrap_or(0),
                })
            }
        }
        let index: Bm25Index = serde_json::from_value(v)?;
        index.check()?;
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Deserialize)]
struct CorpusLine {
    #[serde(default)]
    doc_id: Option<String>,
    title: String,
    text: String,
}

/// One `{title, text}` object per line; `doc_id` defaults to `d{line}`.
/// Blank lines are skipped.
pub fn read_corpus_jsonl<R: BufRead>(input: R) -> Result<Vec<Paragraph>, IndexError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c: CorpusLine = serde_json::from_str(&line).map_err(|e| IndexError::CorpusLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(Paragraph {
            doc_id: c.doc_id.unwrap_or_else(|| format!("d{}", i + 1)),
            title: c.title,
            text: c.text,
        });
    }
    Ok(out)
}
