use std::collections::BTreeMap;

use sdp_core::TrajectoryArtifact;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnatomyError {
    #[error("no correctness label for task `{0}`")]
    LabelMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanBucket {
    pub runs: usize,
    pub successes: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressEntry {
    pub task_id: String,
    pub cursor: usize,
    pub plan_length: usize,
    pub progress: f64,
}

/// Goal certification against ground truth. Every run that did not certify
/// its goal falls in a `forced_*` class, whether or not its adapter set the
/// forced flag; `forced_flagged` counts the flagged ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    pub certified_correct: usize,
    pub certified_wrong: usize,
    pub forced_correct: usize,
    pub forced_wrong: usize,
    pub forced_flagged: usize,
}

impl Calibration {
    pub fn total(&self) -> usize {
        self.certified_correct + self.certified_wrong + self.forced_correct + self.forced_wrong
    }

    /// Fraction of runs where certification and correctness agree.
    pub fn agreement(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.certified_correct + self.forced_wrong) as f64 / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnatomyReport {
    pub runs: usize,
    pub transitions: usize,
    /// Transitions with cascade depth 2 or more, over all transitions.
    pub cascade_rate: f64,
    pub cascade_depth_histogram: BTreeMap<usize, usize>,
    /// Keyed by replan event count. Success is the label when labels are
    /// given, else goal certification.
    pub success_rate_by_replan_count: BTreeMap<usize, ReplanBucket>,
    /// Final cursor over plan length, failed runs only.
    pub certified_progress_per_run: Vec<ProgressEntry>,
    pub mean_failed_progress: Option<f64>,
    /// Present only when labels are given.
    pub calibration: Option<Calibration>,
}

fn frac(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn anatomy(artifacts: &[TrajectoryArtifact], labels: Option<&BTreeMap<String, bool>>) -> Result<AnatomyReport, AnatomyError> {
    let correct = |a: &TrajectoryArtifact| -> Result<Option<bool>, AnatomyError> {
        labels
            .map(|l| l.get(&a.task_id).copied().ok_or_else(|| AnatomyError::LabelMismatch(a.task_id.clone())))
            .transpose()
    };
    let mut histogram = BTreeMap::new();
    let mut transitions = 0;
    let mut cascaded = 0;
    let mut buckets: BTreeMap<usize, ReplanBucket> = BTreeMap::new();
    let mut progress = Vec::new();
    let mut calibration = labels.map(|_| Calibration::default());
    for a in artifacts {
        let label = correct(a)?;
        for t in &a.transitions {
            *histogram.entry(t.cascade_depth).or_insert(0) += 1;
            transitions += 1;
            cascaded += usize::from(t.cascade_depth >= 2);
        }
        let b = buckets.entry(a.replan_events.len()).or_insert(ReplanBucket { runs: 0, successes: 0, rate: 0.0 });
        b.runs += 1;
        b.successes += usize::from(label.unwrap_or(a.goal_certified));
        if !a.goal_certified {
            let n = a.plan_length();
            let cursor = a.final_cursor();
            progress.push(ProgressEntry { task_id: a.task_id.clone(), cursor, plan_length: n, progress: frac(cursor, n).min(1.0) });
        }
        if let (Some(c), Some(ok)) = (calibration.as_mut(), label) {
            match (a.goal_certified, ok) {
                (true, true) => c.certified_correct += 1,
                (true, false) => c.certified_wrong += 1,
                (false, true) => c.forced_correct += 1,
                (false, false) => c.forced_wrong += 1,
            }
            c.forced_flagged += usize::from(a.forced_finalization);
        }
    }
    for b in buckets.values_mut() {
        b.rate = frac(b.successes, b.runs);
    }
    let mean_failed_progress =
        (!progress.is_empty()).then(|| progress.iter().map(|p| p.progress).sum::<f64>() / progress.len() as f64);
    Ok(AnatomyReport {
        runs: artifacts.len(),
        transitions,
        cascade_rate: frac(cascaded, transitions),
        cascade_depth_histogram: histogram,
        success_rate_by_replan_count: buckets,
        certified_progress_per_run: progress,
        mean_failed_progress,
        calibration,
    })
}
