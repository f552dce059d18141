//! Report rendering: JSON lines for machines, aligned tables for people and
//! plain x/y columns for plotting sweeps.

use std::fmt::Write as _;

use goad_core::metrics::MetricsReport;
use goad_core::reference::{self, ReferenceCell, DATASETS};
use serde_json::json;

use crate::harness::{Method, SweepResult};

/// Placeholder for cells the published table leaves blank.
pub const ABSENT: &str = "n/a";

/// One record per run followed by a summary record.
pub fn json_lines(dataset: &str, method: Method, report: &MetricsReport) -> String {
    let mut out = String::new();
    for (k, run) in report.runs.iter().enumerate() {
        let rec = json!({"kind": "run", "dataset": dataset, "method": method, "run": k, "metrics": run});
        writeln!(out, "{rec}").unwrap();
    }
    let reference = reference::lookup(method.reference_name(), dataset);
    let rec = json!({
        "kind": "summary",
        "dataset": dataset,
        "method": method,
        "n_runs": report.runs.len(),
        "f1": report.f1,
        "precision": report.precision,
        "recall": report.recall,
        "roc_auc": report.roc_auc,
        "reference_f1_percent": reference.map(|c| c.f1),
        "reference_std_percent": reference.and_then(|c| c.std),
    });
    writeln!(out, "{rec}").unwrap();
    out
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

fn ref_cells(cell: Option<ReferenceCell>) -> (String, String) {
    match cell {
        Some(c) => (format!("{:.1}", c.f1), c.std.map_or(ABSENT.to_owned(), |s| format!("{s:.1}"))),
        None => (ABSENT.to_owned(), ABSENT.to_owned()),
    }
}

/// Measured results (percent) next to the published numbers.
pub fn comparison_table(rows: &[(&str, Method, &MetricsReport)]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<12} {:<6} {:>5} {:>7} {:>6} {:>6} {:>6} {:>6} {:>8} {:>7}",
        "dataset", "method", "runs", "F1", "sigma", "prec", "recall", "AUC", "ref F1", "ref sd"
    )
    .unwrap();
    for (dataset, method, r) in rows {
        let (rf, rs) = ref_cells(reference::lookup(method.reference_name(), dataset));
        writeln!(
            out,
            "{:<12} {:<6} {:>5} {:>7} {:>6} {:>6} {:>6} {:>6} {:>8} {:>7}",
            dataset,
            method.name(),
            r.runs.len(),
            pct(r.f1.mean),
            pct(r.f1.std),
            pct(r.precision.mean),
            pct(r.recall.mean),
            pct(r.roc_auc.mean),
            rf,
            rs
        )
        .unwrap();
    }
    out
}

/// The published F1 table in its original shape: methods by datasets, each
/// cell `F1` and `sigma`.
pub fn reference_table() -> String {
    let mut out = String::new();
    write!(out, "{:<8}", "method").unwrap();
    for d in DATASETS {
        write!(out, " {:>11} {:>5}", d, "sigma").unwrap();
    }
    out.push('\n');
    for row in reference::reference_table() {
        write!(out, "{:<8}", row.method).unwrap();
        for cell in row.cells {
            let (f, s) = ref_cells(Some(cell));
            write!(out, " {f:>11} {s:>5}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// `x mean_f1 std_f1 mean_auc` per sweep point, with a commented header.
pub fn sweep_xy(s: &SweepResult) -> String {
    let mut out = format!("# {} f1_mean f1_std auc_mean\n", s.axis);
    for (x, r) in s.values.iter().zip(&s.reports) {
        writeln!(out, "{x} {} {} {}", r.f1.mean, r.f1.std, r.roc_auc.mean).unwrap();
    }
    out
}

/// One decimal score per line, in input order.
pub fn score_stream(scores: &[f64]) -> String {
    let mut out = String::with_capacity(scores.len() * 20);
    for s in scores {
        writeln!(out, "{s:?}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use goad_core::metrics::evaluate_scores;

    fn report() -> MetricsReport {
        let runs = vec![evaluate_scores(&[0.1, 0.9, 0.2, 0.8], &[false, true, false, true]).unwrap()];
        MetricsReport::from_runs(runs)
    }

    #[test]
    fn json_lines_end_with_a_summary() {
        let text = json_lines("thyroid", Method::Lof, &report());
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1]["kind"], "summary");
        assert_eq!(lines[1]["reference_f1_percent"], 52.7);
        let custom = json_lines("mine", Method::Goad, &report());
        assert!(custom.lines().last().unwrap().contains("\"reference_f1_percent\":null"));
    }

    #[test]
    fn tables_mark_missing_cells() {
        let r = report();
        let t = comparison_table(&[("thyroid", Method::Goad, &r), ("mine", Method::Goad, &r)]);
        assert!(t.contains("74.5") && t.contains(ABSENT));
        let published = reference_table();
        assert_eq!(published.lines().count(), 7);
        assert!(published.lines().any(|l| l.starts_with("OC-SVM") && l.contains(ABSENT)));
        assert!(published.contains("98.9"));
    }

    #[test]
    fn scores_round_trip_through_the_stream() {
        let s = [0.1, 1e-300, 123456.789, -0.0];
        let back: Vec<f64> = score_stream(&s).lines().map(|l| l.parse().unwrap()).collect();
        assert_eq!(back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), s.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
