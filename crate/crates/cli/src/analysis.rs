//! `sdp analyze` and `sdp ablate`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use sdp_analytics::{ablate, ablation_csv, ablation_table, anatomy, anatomy_csv, anatomy_table, AblationReport, AnatomyReport};
use sdp_core::{read_jsonl, TrajectoryArtifact};

use crate::error::CliError;
use crate::run::ARTIFACTS_FILE;

/// A directory holding `artifacts.jsonl` (or any `*.jsonl`), or a file.
pub fn read_artifacts(path: &Path) -> Result<Vec<TrajectoryArtifact>, CliError> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let main = path.join(ARTIFACTS_FILE);
        if main.is_file() {
            vec![main]
        } else {
            let mut v: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| CliError::io(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            v.sort();
            v
        }
    } else {
        vec![path.to_path_buf()]
    };
    let mut out = Vec::new();
    for f in files {
        let file = File::open(&f).map_err(|e| CliError::io(&f, e))?;
        out.extend(read_jsonl(BufReader::new(file)).map_err(|e| CliError::Input(format!("{}: {e}", f.display())))?);
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("no artifacts found in `{}`", path.display())));
    }
    Ok(out)
}

fn read_map<V: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<BTreeMap<String, V>, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))
}

fn out_dir(input: &Path, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = match out {
        Some(o) => o.to_path_buf(),
        None if input.is_dir() => input.to_path_buf(),
        None => input.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

/// Writes `anatomy.json`, `anatomy.txt` and, with `csv`, `anatomy.csv`.
/// Labels are a JSON object from task id to correctness.
pub fn cmd_analyze(input: &Path, labels: Option<&Path>, csv: bool, out: Option<&Path>) -> Result<(AnatomyReport, String), CliError> {
    let artifacts = read_artifacts(input)?;
    let labels = labels.map(read_map::<bool>).transpose()?;
    let report = anatomy(&artifacts, labels.as_ref()).map_err(|e| CliError::Input(e.to_string()))?;
    let dir = out_dir(input, out)?;
    let table = anatomy_table(&report);
    write(&dir, "anatomy.json", &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    write(&dir, "anatomy.txt", &table)?;
    if csv {
        write(&dir, "anatomy.csv", &anatomy_csv(&report))?;
    }
    Ok((report, table))
}

/// Writes `ablation.json`, `ablation.txt` and, with `csv`, `ablation.csv`.
/// Scores are a JSON object from task id to the original score.
pub fn cmd_ablate(input: &Path, scores: &Path, csv: bool, out: Option<&Path>) -> Result<(AblationReport, String), CliError> {
    let artifacts = read_artifacts(input)?;
    let scores = read_map::<f64>(scores)?;
    let report = ablate(&artifacts, &scores).map_err(|e| CliError::Input(e.to_string()))?;
    let dir = out_dir(input, out)?;
    let table = ablation_table(&report);
    write(&dir, "ablation.json", &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    write(&dir, "ablation.txt", &table)?;
    if csv {
        write(&dir, "ablation.csv", &ablation_csv(&report))?;
    }
    Ok((report, table))
}
