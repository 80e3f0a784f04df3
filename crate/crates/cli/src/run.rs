//! Batch runner for `sdp run`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use sdp_constraint::{generate_sandbox, run_trip, CheapestChooser, Chooser, Generated, LlmChooser, Sandbox, SizeParams, TripSpec};
use sdp_core::{run_episode, write_jsonl, EngineConfig, Termination, TrajectoryArtifact};
use sdp_operators::{ChatClient, LlmConfig};
use sdp_retrieval::{build_index, read_corpus_jsonl, run_qa, Bm25Index, Bm25Params, LlmQa, QaTask, Retrieval, ScriptedQa};
use sdp_textworld::{bundled_worlds, run_world, LlmTextOperators, ScriptedPolicy, SearchPolicy, TextWorldEnvironment, WorldDef};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{BackendKind, EnvKind, RetrievalMode, RunConfig};
use crate::error::CliError;

pub const ARTIFACTS_FILE: &str = "artifacts.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

type JobFn = Box<dyn Fn() -> Result<TrajectoryArtifact, String> + Send + Sync>;

pub struct Job {
    pub task_id: String,
    pub run: JobFn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    GoalCertified,
    NotCertified,
    /// An artifact exists but an operator failed mid-episode.
    OperatorFailure,
    /// No artifact was produced.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub task_id: String,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    pub steps: usize,
    pub replans: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSummary {
    pub tasks: usize,
    pub artifacts: usize,
    pub goal_certified: usize,
    pub operator_failures: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestTiming {
    pub started_unix_ms: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config: RunConfig,
    pub artifacts_file: String,
    pub tasks: Vec<ManifestEntry>,
    pub summary: ManifestSummary,
    /// The only wall-clock field.
    pub timing: ManifestTiming,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn client(llm: &LlmConfig) -> Result<ChatClient, String> {
    ChatClient::from_config(llm).map_err(|e| e.to_string())
}

fn check_key(cfg: &RunConfig) -> Result<(), CliError> {
    match &cfg.llm {
        Some(l) if std::env::var_os(&l.api_key_env).is_none() => {
            Err(CliError::Config(format!("environment variable `{}` (llm.api_key_env) is not set", l.api_key_env)))
        }
        _ => Ok(()),
    }
}

fn constraint_jobs(cfg: &RunConfig) -> Result<Vec<Job>, CliError> {
    let (sandbox, mut specs) = match &cfg.paths.data {
        Some(p) => {
            let g: Generated = read_json(p)?;
            (g.sandbox, g.specs)
        }
        None => {
            let params = SizeParams { specs: cfg.constraint.tasks, ..SizeParams::default() };
            let g = generate_sandbox(cfg.seed, &params).map_err(|e| CliError::Config(e.to_string()))?;
            (g.sandbox, g.specs)
        }
    };
    if let Some(p) = &cfg.paths.tasks {
        specs = read_json::<Vec<TripSpec>>(p)?;
    }
    let sandbox: Arc<Sandbox> = Arc::new(sandbox);
    let engine = cfg.engine_for(EngineConfig::constraint());
    Ok(specs
        .into_iter()
        .map(|spec| {
            let sandbox = sandbox.clone();
            let llm = cfg.llm.clone();
            Job {
                task_id: spec.id.clone(),
                run: Box::new(move || {
                    let chooser: Box<dyn Chooser> = match &llm {
                        Some(l) => Box::new(LlmChooser::new(client(l)?)),
                        None => Box::new(CheapestChooser),
                    };
                    run_trip(&spec, sandbox.clone(), chooser, &engine).map_err(|e| e.to_string())
                }),
            }
        })
        .collect())
}

fn load_worlds(path: Option<&Path>) -> Result<Vec<WorldDef>, CliError> {
    let Some(p) = path else { return Ok(bundled_worlds()) };
    let files: Vec<PathBuf> = if p.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(p)
            .map_err(|e| CliError::io(p, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|f| f.extension().is_some_and(|x| x == "json"))
            .collect();
        v.sort();
        v
    } else {
        vec![p.to_path_buf()]
    };
    if files.is_empty() {
        return Err(CliError::Config(format!("no world files in `{}`", p.display())));
    }
    files
        .iter()
        .map(|f| WorldDef::load(f).map_err(|e| CliError::Config(format!("{}: {e}", f.display()))))
        .collect()
}

fn textworld_jobs(cfg: &RunConfig) -> Result<Vec<Job>, CliError> {
    let worlds = load_worlds(cfg.paths.data.as_deref())?;
    let scripts: BTreeMap<String, BTreeMap<String, Vec<String>>> = match &cfg.paths.script {
        Some(p) => read_json(p)?,
        None => BTreeMap::new(),
    };
    let engine = cfg.engine_for(EngineConfig::textworld());
    let mut jobs = Vec::new();
    for w in worlds {
        let world = Arc::new(w);
        let id = world.name.clone();
        let run: JobFn = match cfg.backend {
            BackendKind::Scripted => {
                let table = scripts
                    .get(&id)
                    .cloned()
                    .ok_or_else(|| CliError::Input(format!("script has no entry for world `{id}`")))?;
                Box::new(move || run_world(world.clone(), ScriptedPolicy { table: table.clone() }, &engine).map_err(|e| e.to_string()))
            }
            BackendKind::Deterministic => {
                Box::new(move || run_world(world.clone(), SearchPolicy::default(), &engine).map_err(|e| e.to_string()))
            }
            BackendKind::Llm => {
                let llm = cfg.llm.clone().expect("validated: llm block present");
                Box::new(move || {
                    let ops = LlmTextOperators::new(client(&llm)?, world.clone());
                    let mut env = TextWorldEnvironment::new(world.clone());
                    run_episode(&engine, &ops, &mut env, &ops.task()).map_err(|e| e.to_string())
                })
            }
        };
        jobs.push(Job { task_id: id, run });
    }
    Ok(jobs)
}

pub fn load_index(path: &Path) -> Result<Bm25Index, CliError> {
    if path.extension().is_some_and(|x| x == "jsonl") {
        let f = File::open(path).map_err(|e| CliError::io(path, e))?;
        let corpus = read_corpus_jsonl(BufReader::new(f)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        build_index(&corpus, Bm25Params::default()).map_err(|e| CliError::Config(e.to_string()))
    } else {
        Bm25Index::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn read_qa_tasks(path: &Path) -> Result<Vec<QaTask>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

fn multihop_jobs(cfg: &RunConfig) -> Result<Vec<Job>, CliError> {
    let tasks = read_qa_tasks(cfg.paths.tasks.as_deref().expect("validated: tasks path present"))?;
    let retrieval = match cfg.multihop.retrieval {
        RetrievalMode::Distractor => Retrieval::Distractor,
        RetrievalMode::Open => {
            let index = load_index(cfg.paths.data.as_deref().expect("validated: data path present"))?;
            Retrieval::OpenDomain { index: Arc::new(index), top_k: cfg.multihop.top_k }
        }
    };
    let scripts: BTreeMap<String, Value> = match &cfg.paths.script {
        Some(p) => read_json(p)?,
        None => BTreeMap::new(),
    };
    let mut jobs = Vec::new();
    for task in tasks {
        let preset = if task.hop_count <= 2 { EngineConfig::two_hop() } else { EngineConfig::multi_hop() };
        let engine = cfg.engine_for(preset);
        let retrieval = retrieval.clone();
        let run: JobFn = match cfg.backend {
            BackendKind::Scripted => {
                let script = scripts
                    .get(&task.id)
                    .cloned()
                    .ok_or_else(|| CliError::Input(format!("script has no entry for task `{}`", task.id)))?;
                serde_json::from_value::<ScriptedQa>(script.clone())
                    .map_err(|e| CliError::Config(format!("script for `{}`: {e}", task.id)))?;
                let task = task.clone();
                Box::new(move || {
                    let backend: ScriptedQa = serde_json::from_value(script.clone()).map_err(|e| e.to_string())?;
                    run_qa(&task, backend, retrieval.clone(), &engine).map_err(|e| e.to_string())
                })
            }
            BackendKind::Llm => {
                let llm = cfg.llm.clone().expect("validated: llm block present");
                let task = task.clone();
                Box::new(move || run_qa(&task, LlmQa::new(client(&llm)?), retrieval.clone(), &engine).map_err(|e| e.to_string()))
            }
            BackendKind::Deterministic => unreachable!("rejected by config validation"),
        };
        jobs.push(Job { task_id: task.id.clone(), run });
    }
    Ok(jobs)
}

pub fn build_jobs(cfg: &RunConfig) -> Result<Vec<Job>, CliError> {
    check_key(cfg)?;
    let jobs = match cfg.environment {
        EnvKind::Constraint => constraint_jobs(cfg)?,
        EnvKind::Textworld => textworld_jobs(cfg)?,
        EnvKind::Multihop => multihop_jobs(cfg)?,
    };
    if jobs.is_empty() {
        return Err(CliError::Config("no tasks to run".into()));
    }
    let mut seen = BTreeSet::new();
    if let Some(j) = jobs.iter().find(|j| !seen.insert(j.task_id.clone())) {
        return Err(CliError::Config(format!("duplicate task id `{}`", j.task_id)));
    }
    Ok(jobs)
}

/// Runs jobs on `workers` threads; results come back in job order.
pub fn execute(jobs: &[Job], workers: usize) -> Vec<Result<TrajectoryArtifact, String>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<TrajectoryArtifact, String>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| (job.run)()))
                    .unwrap_or_else(|_| Err("episode panicked".into()));
                slots.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("result lock").into_iter().map(|r| r.expect("every job ran")).collect()
}

fn entry(task_id: &str, r: &Result<TrajectoryArtifact, String>) -> ManifestEntry {
    match r {
        Ok(a) => ManifestEntry {
            task_id: task_id.into(),
            status: match (&a.termination, a.goal_certified) {
                (Termination::OperatorFailure { .. }, _) => TaskStatus::OperatorFailure,
                (_, true) => TaskStatus::GoalCertified,
                (_, false) => TaskStatus::NotCertified,
            },
            termination: Some(a.termination.clone()),
            steps: a.steps(),
            replans: a.replan_events.len(),
            message: match &a.termination {
                Termination::OperatorFailure { message, .. } => Some(message.clone()),
                _ => None,
            },
        },
        Err(e) => ManifestEntry {
            task_id: task_id.into(),
            status: TaskStatus::Error,
            termination: None,
            steps: 0,
            replans: 0,
            message: Some(e.clone()),
        },
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Runs every task, writes `artifacts.jsonl` and `manifest.json` into the
/// output directory and returns the manifest.
pub fn cmd_run(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let started = now_ms();
    let clock = Instant::now();
    let jobs = build_jobs(cfg)?;
    let out = &cfg.paths.output;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let results = execute(&jobs, cfg.workers);
    let tasks: Vec<ManifestEntry> = jobs.iter().zip(&results).map(|(j, r)| entry(&j.task_id, r)).collect();
    let artifacts_path = out.join(ARTIFACTS_FILE);
    let f = File::create(&artifacts_path).map_err(|e| CliError::io(&artifacts_path, e))?;
    write_jsonl(BufWriter::new(f), results.iter().filter_map(|r| r.as_ref().ok()))
        .map_err(|e| CliError::io(&artifacts_path, e))?;
    let count = |s: TaskStatus| tasks.iter().filter(|t| t.status == s).count();
    let summary = ManifestSummary {
        tasks: tasks.len(),
        artifacts: results.iter().filter(|r| r.is_ok()).count(),
        goal_certified: count(TaskStatus::GoalCertified),
        operator_failures: count(TaskStatus::OperatorFailure),
        errors: count(TaskStatus::Error),
    };
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        config: cfg.clone(),
        artifacts_file: ARTIFACTS_FILE.into(),
        tasks,
        summary,
        timing: ManifestTiming { started_unix_ms: started, elapsed_ms: clock.elapsed().as_millis() as u64 },
    };
    let manifest_path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text + "\n").map_err(|e| CliError::io(&manifest_path, e))?;
    Ok(manifest)
}
