//! Paragraph retrieval and the multi-hop question answering adapter.
//!
//! [`index`] holds a BM25 index (k1 = 1.2, b = 0.75, non-negative IDF) whose
//! search ranks title matches on query n-grams ahead of content scores.
//! [`validate`] checks hop findings with a keyword-overlap fallback, filters
//! answers and schedules increasingly different queries. [`qa`] binds it all
//! to the engine with certified hops preserved across replans.

pub mod index;
pub mod llm;
pub mod qa;
pub mod text;
pub mod validate;

pub use index::{
    build_index, read_corpus_jsonl, Bm25Index, Bm25Params, Hit, IndexError, Paragraph, Posting,
    DEFAULT_TOP_K, INDEX_VERSION,
};
pub use llm::LlmQa;
pub use qa::*;
pub use text::{content_words, stopwords, strip_disambiguation, title_key, tokenize, words};
pub use validate::*;
