//! Library side of the `sdp` binary, shared with the integration tests.

pub mod analysis;
pub mod config;
pub mod error;
pub mod run;

use std::path::Path;

use sdp_constraint::{generate_sandbox, Generated, SizeParams};
use sdp_retrieval::{build_index, read_corpus_jsonl, Bm25Params};

pub use error::CliError;

pub fn cmd_gen_sandbox(seed: u64, params: &SizeParams, out: &Path) -> Result<Generated, CliError> {
    let g = generate_sandbox(seed, params).map_err(|e| CliError::Config(e.to_string()))?;
    let text = serde_json::to_string_pretty(&g).expect("sandbox serializes");
    std::fs::write(out, text + "\n").map_err(|e| CliError::io(out, e))?;
    Ok(g)
}

/// Returns the number of indexed paragraphs.
pub fn cmd_build_index(corpus: &Path, params: Bm25Params, out: &Path) -> Result<usize, CliError> {
    let f = std::fs::File::open(corpus).map_err(|e| CliError::io(corpus, e))?;
    let docs = read_corpus_jsonl(std::io::BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", corpus.display())))?;
    let index = build_index(&docs, params).map_err(|e| CliError::Input(e.to_string()))?;
    index.save(out).map_err(|e| CliError::io(out, e))?;
    Ok(index.len())
}
