use std::fmt::Write;

use crate::ablation::AblationReport;
use crate::anatomy::AnatomyReport;

/// Left-aligned first column, right-aligned rest, padded to the widest cell.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            if i == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "{c:>w$}");
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(&line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

pub fn anatomy_table(r: &AnatomyReport) -> String {
    let mut out = format!("runs: {}   transitions: {}\n\n", r.runs, r.transitions);
    let _ = writeln!(out, "(a) cascade depth   cascade rate {}", f3(r.cascade_rate));
    let rows: Vec<Vec<String>> = r
        .cascade_depth_histogram
        .iter()
        .map(|(k, n)| vec![k.to_string(), n.to_string()])
        .collect();
    out.push_str(&table(&["depth", "transitions"], &rows));
    out.push_str("\n(b) success rate by replan count\n");
    let rows: Vec<Vec<String>> = r
        .success_rate_by_replan_count
        .iter()
        .map(|(k, b)| vec![k.to_string(), b.runs.to_string(), b.successes.to_string(), f3(b.rate)])
        .collect();
    out.push_str(&table(&["replans", "runs", "successes", "rate"], &rows));
    out.push_str("\n(c) certified progress in failed runs");
    match r.mean_failed_progress {
        Some(m) => {
            let _ = writeln!(out, "   mean {}", f3(m));
        }
        None => out.push_str("   no failed runs\n"),
    }
    let rows: Vec<Vec<String>> = r
        .certified_progress_per_run
        .iter()
        .map(|p| vec![p.task_id.clone(), p.cursor.to_string(), p.plan_length.to_string(), f3(p.progress)])
        .collect();
    if !rows.is_empty() {
        out.push_str(&table(&["task", "cursor", "plan", "progress"], &rows));
    }
    out.push_str("\n(d) calibration");
    match &r.calibration {
        None => out.push_str("   no labels given\n"),
        Some(c) => {
            let _ = writeln!(out, "   agreement {}", f3(c.agreement()));
            let rows = vec![
                vec!["goal certified".into(), c.certified_correct.to_string(), c.certified_wrong.to_string()],
                vec!["not certified".into(), c.forced_correct.to_string(), c.forced_wrong.to_string()],
            ];
            out.push_str(&table(&["", "correct", "wrong"], &rows));
            let _ = writeln!(out, "forced-finalization flag set on {} runs", c.forced_flagged);
        }
    }
    out
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    for r in rows {
        w.write_record(&r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

/// Long format: one row per plotted value, keyed by panel.
pub fn anatomy_csv(r: &AnatomyReport) -> String {
    let mut rows = Vec::new();
    for (k, n) in &r.cascade_depth_histogram {
        rows.push(vec!["cascade_depth".into(), k.to_string(), n.to_string(), String::new()]);
    }
    for (k, b) in &r.success_rate_by_replan_count {
        rows.push(vec!["replan_curve".into(), k.to_string(), b.runs.to_string(), b.rate.to_string()]);
    }
    for p in &r.certified_progress_per_run {
        rows.push(vec!["failed_progress".into(), p.task_id.clone(), p.cursor.to_string(), p.progress.to_string()]);
    }
    if let Some(c) = &r.calibration {
        for (k, n) in [
            ("certified_correct", c.certified_correct),
            ("certified_wrong", c.certified_wrong),
            ("forced_correct", c.forced_correct),
            ("forced_wrong", c.forced_wrong),
        ] {
            rows.push(vec!["calibration".into(), k.into(), n.to_string(), String::new()]);
        }
    }
    to_csv(&["panel", "key", "count", "value"], rows)
}

pub fn ablation_table(r: &AblationReport) -> String {
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|e| {
            vec![
                e.task_id.clone(),
                e.mechanism.name().into(),
                f3(e.original_score),
                f3(e.conversion_factor),
                f3(e.estimated_score),
                e.note.clone(),
            ]
        })
        .collect();
    let mut out = table(&["task", "mechanism", "original", "factor", "estimate", "note"], &rows);
    out.push_str("\nmeans\n");
    let rows: Vec<Vec<String>> = r
        .means
        .iter()
        .map(|m| vec![m.mechanism.name().into(), f3(m.original_score), f3(m.estimated_score)])
        .collect();
    out.push_str(&table(&["mechanism", "original", "estimate"], &rows));
    let _ = writeln!(out, "\n{}", r.caveat);
    out
}

pub fn ablation_csv(r: &AblationReport) -> String {
    to_csv(
        &["task_id", "mechanism", "original_score", "conversion_factor", "estimated_score", "note"],
        r.rows.iter().map(|e| {
            vec![
                e.task_id.clone(),
                e.mechanism.name().into(),
                e.original_score.to_string(),
                e.conversion_factor.to_string(),
                e.estimated_score.to_string(),
                e.note.clone(),
            ]
        }),
    )
}
