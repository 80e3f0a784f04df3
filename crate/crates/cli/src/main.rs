use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sdp_cli::analysis::{cmd_ablate, cmd_analyze};
use sdp_cli::config::RunConfig;
use sdp_cli::run::{cmd_run, MANIFEST_FILE};
use sdp_cli::{cmd_build_index, cmd_gen_sandbox, CliError};
use sdp_constraint::SizeParams;
use sdp_retrieval::Bm25Params;

/// Run certified-plan episodes and analyse their trajectories.
#[derive(Parser)]
#[command(name = "sdp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of one environment and write artifacts.jsonl plus manifest.json.
    ///
    /// Any config field can be set with a flag of the same dotted name,
    /// e.g. `--engine.attempt_budget 5` or `--paths.output=runs/a`.
    Run {
        /// TOML config file. Without one, every required field must come from flags.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Concurrent episodes.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `--key.path value` overrides.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY.PATH VALUE")]
        overrides: Vec<String>,
    },
    /// Cascade depth, replan curve, certified progress and calibration.
    Analyze {
        /// Artifact file, or a directory written by `run`.
        artifacts: PathBuf,
        /// JSON object mapping task id to answer correctness.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Also write plot-ready anatomy.csv.
        #[arg(long)]
        csv: bool,
        /// Report directory (defaults to the artifact directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay estimates for removing validate, replan or cascade.
    Ablate {
        artifacts: PathBuf,
        /// JSON object mapping task id to its original score.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic travel sandbox with solvable trip specs.
    GenSandbox {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        specs: usize,
        #[arg(long)]
        cities: Option<usize>,
        #[arg(long)]
        origins: Option<usize>,
        #[arg(long)]
        options_per_table: Option<usize>,
        #[arg(long)]
        flights_per_route: Option<usize>,
        #[arg(long)]
        ground_per_route: Option<usize>,
    },
    /// Build a BM25 index from a JSONL corpus of {title, text} lines.
    BuildIndex {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.2)]
        k1: f64,
        #[arg(long, default_value_t = 0.75)]
        b: f64,
    },
}

/// Removes `--name value` / `--name=value` from `args`, returning the last value.
fn take_flag(args: Vec<String>, name: &str) -> (Option<String>, Vec<String>) {
    let long = format!("--{name}");
    let prefix = format!("--{name}=");
    let mut found = None;
    let mut rest = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == long {
            found = it.next();
        } else if let Some(v) = a.strip_prefix(&prefix) {
            found = Some(v.to_string());
        } else {
            rest.push(a);
        }
    }
    (found, rest)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { mut config, workers, seed, out, overrides } => {
            // Named flags written after the first override arrive in the trailing list.
            let (config_flag, mut overrides) = take_flag(overrides, "config");
            config = config.or(config_flag.map(PathBuf::from));
            let (out_flag, rest) = take_flag(overrides, "out");
            overrides = rest;
            if let Some(o) = out_flag {
                overrides.extend(["--paths.output".into(), o]);
            }
            if let Some(w) = workers {
                overrides.extend(["--workers".into(), w.to_string()]);
            }
            if let Some(s) = seed {
                overrides.extend(["--seed".into(), s.to_string()]);
            }
            if let Some(o) = out {
                overrides.extend(["--paths.output".into(), o.display().to_string()]);
            }
            let cfg = RunConfig::load(config.as_deref(), &overrides)?;
            let m = cmd_run(&cfg)?;
            let s = &m.summary;
            println!(
                "{} tasks, {} artifacts, {} goal-certified, {} operator failures, {} errors",
                s.tasks, s.artifacts, s.goal_certified, s.operator_failures, s.errors
            );
            println!("wrote {}", cfg.paths.output.join(MANIFEST_FILE).display());
            if s.errors > 0 {
                return Err(CliError::TasksFailed { failed: s.errors, total: s.tasks });
            }
        }
        Command::Analyze { artifacts, labels, csv, out } => {
            let (_, table) = cmd_analyze(&artifacts, labels.as_deref(), csv, out.as_deref())?;
            print!("{table}");
        }
        Command::Ablate { artifacts, scores, csv, out } => {
            let (_, table) = cmd_ablate(&artifacts, &scores, csv, out.as_deref())?;
            print!("{table}");
        }
        Command::GenSandbox { seed, out, specs, cities, origins, options_per_table, flights_per_route, ground_per_route } => {
            let d = SizeParams::default();
            let params = SizeParams {
                cities: cities.unwrap_or(d.cities),
                origins: origins.unwrap_or(d.origins),
                options_per_table: options_per_table.unwrap_or(d.options_per_table),
                flights_per_route: flights_per_route.unwrap_or(d.flights_per_route),
                ground_per_route: ground_per_route.unwrap_or(d.ground_per_route),
                specs,
                attempts_per_spec: d.attempts_per_spec,
            };
            let g = cmd_gen_sandbox(seed, &params, &out)?;
            println!("{} specs ({} candidates excluded) written to {}", g.specs.len(), g.excluded.len(), out.display());
        }
        Command::BuildIndex { corpus, out, k1, b } => {
            if !(k1.is_finite() && k1 >= 0.0 && (0.0..=1.0).contains(&b)) {
                return Err(CliError::Config("k1 must be non-negative and b within [0, 1]".into()));
            }
            let n = cmd_build_index(&corpus, Bm25Params { k1, b }, &out)?;
            println!("indexed {n} paragraphs into {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
