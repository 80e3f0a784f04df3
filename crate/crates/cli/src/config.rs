//! Run configuration: one TOML file, with any field overridable by a
//! `--dotted.name value` flag.

use std::path::{Path, PathBuf};

use sdp_core::EngineConfig;
use sdp_operators::LlmConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Constraint,
    Textworld,
    Multihop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Scripted,
    Deterministic,
    Llm,
}

/// Engine fields left unset fall back to the environment's preset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineOverrides {
    pub attempt_budget: Option<usize>,
    pub max_replans: Option<usize>,
    pub global_step_cap: Option<usize>,
    pub plan_length_cap: Option<usize>,
}

impl EngineOverrides {
    pub fn apply(&self, mut base: EngineConfig) -> EngineConfig {
        base.attempt_budget = self.attempt_budget.unwrap_or(base.attempt_budget);
        base.max_replans = self.max_replans.unwrap_or(base.max_replans);
        base.global_step_cap = self.global_step_cap.unwrap_or(base.global_step_cap);
        base.plan_length_cap = self.plan_length_cap.unwrap_or(base.plan_length_cap);
        base
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Constraint: a JSON list of trip specs. Multihop: a JSONL task file.
    pub tasks: Option<PathBuf>,
    /// Constraint: a generated sandbox file. Text world: a world file or a
    /// directory of them. Multihop: a corpus (.jsonl) or a built index.
    pub data: Option<PathBuf>,
    /// Scripted backends: the operator tables.
    pub script: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("sdp-out")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMode {
    #[default]
    Open,
    Distractor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultihopOptions {
    #[serde(default)]
    pub retrieval: RetrievalMode,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

fn default_top_k() -> usize {
    sdp_retrieval::DEFAULT_TOP_K
}

impl Default for MultihopOptions {
    fn default() -> Self {
        Self { retrieval: RetrievalMode::Open, top_k: default_top_k() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintOptions {
    /// Specs generated when no sandbox file is given.
    #[serde(default = "default_bundled_tasks")]
    pub tasks: usize,
}

fn default_bundled_tasks() -> usize {
    10
}

impl Default for ConstraintOptions {
    fn default() -> Self {
        Self { tasks: default_bundled_tasks() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub environment: EnvKind,
    pub backend: BackendKind,
    #[serde(default)]
    pub engine: EngineOverrides,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub llm: Option<LlmConfig>,
    #[serde(default)]
    pub multihop: MultihopOptions,
    #[serde(default)]
    pub constraint: ConstraintOptions,
}

fn default_workers() -> usize {
    1
}

impl RunConfig {
    /// Parses `text` (TOML, may be empty), applies overrides, validates.
    pub fn from_parts(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("config file: {e}")))?;
        for (key, value) in parse_overrides(overrides)? {
            set_dotted(&mut table, &key, value)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
            None => String::new(),
        };
        Self::from_parts(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        match (self.backend, &self.llm) {
            (BackendKind::Llm, None) => return bad("backend `llm` needs an [llm] block".into()),
            (b, Some(_)) if b != BackendKind::Llm => {
                return bad("an [llm] block is only allowed with backend `llm`".into());
            }
            _ => {}
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if let Some(l) = &self.llm {
            if l.endpoint.is_empty() || l.model.is_empty() || l.api_key_env.is_empty() {
                return bad("llm.endpoint, llm.model and llm.api_key_env must all be set".into());
            }
        }
        let base = self.engine.apply(EngineConfig::constraint());
        base.validate().map_err(|e| CliError::Config(e.to_string()))?;
        match (self.environment, self.backend) {
            (EnvKind::Constraint, BackendKind::Scripted) => {
                return bad("the constraint environment has no scripted backend; use `deterministic`".into());
            }
            (EnvKind::Multihop, BackendKind::Deterministic) => {
                return bad("the multihop environment has no deterministic backend; use `scripted`".into());
            }
            _ => {}
        }
        let need = |p: &Option<PathBuf>, what: &str| match p {
            Some(p) if !p.exists() => bad(format!("{what} `{}` does not exist", p.display())),
            None => bad(format!("{what} is required here")),
            Some(_) => Ok(()),
        };
        let exists_if_set = |p: &Option<PathBuf>, what: &str| match p {
            Some(_) => need(p, what),
            None => Ok(()),
        };
        exists_if_set(&self.paths.tasks, "paths.tasks")?;
        exists_if_set(&self.paths.data, "paths.data")?;
        exists_if_set(&self.paths.script, "paths.script")?;
        match self.environment {
            EnvKind::Multihop => {
                need(&self.paths.tasks, "paths.tasks")?;
                if self.multihop.retrieval == RetrievalMode::Open {
                    need(&self.paths.data, "paths.data (corpus or index)")?;
                }
                if self.multihop.top_k == 0 {
                    return bad("multihop.top_k must be at least 1".into());
                }
                if self.backend == BackendKind::Scripted {
                    need(&self.paths.script, "paths.script")?;
                }
            }
            EnvKind::Textworld if self.backend == BackendKind::Scripted => need(&self.paths.script, "paths.script")?,
            EnvKind::Constraint if self.paths.data.is_none() && self.constraint.tasks == 0 => {
                return bad("constraint.tasks must be at least 1".into());
            }
            _ => {}
        }
        Ok(())
    }

    pub fn engine_for(&self, preset: EngineConfig) -> EngineConfig {
        self.engine.apply(preset)
    }
}

/// `--a.b value` and `--a.b=value` pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(body) = a.strip_prefix("--") else {
            return Err(CliError::Config(format!("unexpected argument `{a}`; overrides look like --key.path value")));
        };
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| CliError::Config(format!("--{body} needs a value")))?;
                (body.to_string(), v.clone())
            }
        };
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(CliError::Config(format!("bad override key `{key}`")));
        }
        out.push((key.replace('-', "_"), value));
    }
    Ok(out)
}

/// Values are read as TOML scalars when they parse as one, else as strings.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .filter(|v| !v.is_table())
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_dotted(table: &mut toml::Table, key: &str, raw: String) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    // Paths and free-text fields stay strings even when they look numeric.
    let value = match (key, parse_value(&raw)) {
        (k, v) if k.starts_with("paths.") || k.starts_with("llm.") => toml::Value::String(match v {
            toml::Value::String(s) => s,
            _ => raw,
        }),
        (_, v) => v,
    };
    cur.insert(last.to_string(), value);
    Ok(())
}
