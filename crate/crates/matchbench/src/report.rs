//! Table rendering: CSV for downstream tooling, Markdown for reading.
//!
//! Cells follow the `f1 (p, r)` convention: F1 to three decimals with
//! precision and recall to two in parentheses. CSV output is long-form,
//! one row per cell.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::benchmark::Benchmark;
use crate::eval::{
    baseline_matching, evaluate, median, CombinationTables, ConsistencyRow, EvalError, MedianTable,
    MetricRow,
};
use crate::similarity::{best_threshold, pooled_pr_curve, score_dataset, Metric, PrCurve};

/// One dataset's baseline outcome at its best-F1 threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineEntry {
    pub dataset_id: String,
    pub threshold: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub candidates: usize,
}

/// Per-dataset baseline rows plus their cross-dataset mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub metric: Metric,
    pub rows: Vec<BaselineEntry>,
    pub mean_f1: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
}

/// Run the thresholded baseline on every dataset of the benchmark.
pub fn baseline_report(metric: Metric, benchmark: &Benchmark) -> Result<BaselineReport, EvalError> {
    let mut rows = Vec::new();
    for d in &benchmark.datasets {
        let truth = benchmark
            .truth(&d.id)
            .ok_or_else(|| EvalError::MissingTruth(d.id.clone()))?;
        let scores = score_dataset(metric, d);
        let (threshold, _) = best_threshold(&scores, truth)?;
        let matching = baseline_matching(metric, d, truth)?;
        let row = evaluate(&matching, truth, d, metric.to_string(), 1)?;
        rows.push(BaselineEntry {
            dataset_id: d.id.clone(),
            threshold,
            f1: row.f1,
            precision: row.precision,
            recall: row.recall,
            tp: row.tp,
            candidates: row.candidates,
        });
    }
    let n = rows.len() as f64;
    Ok(BaselineReport {
        metric,
        mean_f1: rows.iter().map(|r| r.f1).sum::<f64>() / n,
        mean_precision: rows.iter().map(|r| r.precision).sum::<f64>() / n,
        mean_recall: rows.iter().map(|r| r.recall).sum::<f64>() / n,
        rows,
    })
}

fn cell(f1: f64, p: f64, r: f64) -> String {
    format!("{f1:.3} ({p:.2}, {r:.2})")
}

pub fn baseline_markdown(report: &BaselineReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("| dataset | {} |\n|---|---|\n", report.metric));
    for row in &report.rows {
        out.push_str(&format!(
            "| {} | {} |\n",
            row.dataset_id,
            cell(row.f1, row.precision, row.recall)
        ));
    }
    out.push_str(&format!(
        "| mean | {} |\n",
        cell(report.mean_f1, report.mean_precision, report.mean_recall)
    ));
    out
}

pub fn baseline_csv(report: &BaselineReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "metric", "threshold", "f1", "precision", "recall", "tp", "candidates"])
        .expect("csv header");
    for row in &report.rows {
        w.write_record([
            row.dataset_id.as_str(),
            &report.metric.to_string(),
            &format!("{:.6}", row.threshold),
            &format!("{:.6}", row.f1),
            &format!("{:.6}", row.precision),
            &format!("{:.6}", row.recall),
            &row.tp.to_string(),
            &row.candidates.to_string(),
        ])
        .expect("csv row");
    }
    w.write_record([
        "mean",
        &report.metric.to_string(),
        "",
        &format!("{:.6}", report.mean_f1),
        &format!("{:.6}", report.mean_precision),
        &format!("{:.6}", report.mean_recall),
        "",
        "",
    ])
    .expect("csv mean row");
    finish(w)
}

pub fn median_markdown(table: &MedianTable) -> String {
    let mut out = String::new();
    out.push_str("| dataset |");
    for m in &table.methods {
        out.push_str(&format!(" {m} |"));
    }
    out.push('\n');
    out.push_str(&format!("|---|{}\n", "---|".repeat(table.methods.len())));
    for d in &table.datasets {
        out.push_str(&format!("| {d} |"));
        for m in &table.methods {
            match table.cell(d, m) {
                Some(c) => out.push_str(&format!(" {} |", cell(c.f1, c.precision, c.recall))),
                None => out.push_str(" |"),
            }
        }
        out.push('\n');
    }
    out.push_str("| mean |");
    for m in &table.methods {
        match table.mean_row.get(m) {
            Some(c) => out.push_str(&format!(" {} |", cell(c.f1, c.precision, c.recall))),
            None => out.push_str(" |"),
        }
    }
    out.push('\n');
    out
}

pub fn median_csv(table: &MedianTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "method", "median_f1", "median_precision", "median_recall"])
        .expect("csv header");
    for d in &table.datasets {
        for m in &table.methods {
            if let Some(c) = table.cell(d, m) {
                w.write_record([
                    d.as_str(),
                    m.as_str(),
                    &format!("{:.6}", c.f1),
                    &format!("{:.6}", c.precision),
                    &format!("{:.6}", c.recall),
                ])
                .expect("csv row");
            }
        }
    }
    for m in &table.methods {
        if let Some(c) = table.mean_row.get(m) {
            w.write_record([
                "mean",
                m.as_str(),
                &format!("{:.6}", c.f1),
                &format!("{:.6}", c.precision),
                &format!("{:.6}", c.recall),
            ])
            .expect("csv mean row");
        }
    }
    finish(w)
}

/// A single-value-per-cell table (e.g. decisiveness): one row per dataset,
/// one column per method, median over runs, mean row across datasets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueTable {
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    pub cells: BTreeMap<(String, String), f64>,
    pub mean_row: BTreeMap<String, f64>,
}

/// Reduce rows to a per-(dataset, method) median of one metric.
pub fn value_table(rows: &[MetricRow], value: fn(&MetricRow) -> f64) -> ValueTable {
    let mut datasets = Vec::new();
    let mut methods = Vec::new();
    let mut grouped: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for row in rows {
        if !datasets.contains(&row.dataset_id) {
            datasets.push(row.dataset_id.clone());
        }
        if !methods.contains(&row.method) {
            methods.push(row.method.clone());
        }
        grouped
            .entry((row.dataset_id.clone(), row.method.clone()))
            .or_default()
            .push(value(row));
    }
    let cells: BTreeMap<(String, String), f64> = grouped
        .into_iter()
        .map(|(k, v)| (k, median(&v)))
        .collect();
    let mut mean_row = BTreeMap::new();
    for m in &methods {
        let column: Vec<f64> = datasets
            .iter()
            .filter_map(|d| cells.get(&(d.clone(), m.clone())).copied())
            .collect();
        if !column.is_empty() {
            mean_row.insert(m.clone(), column.iter().sum::<f64>() / column.len() as f64);
        }
    }
    ValueTable {
        datasets,
        methods,
        cells,
        mean_row,
    }
}

pub fn value_markdown(table: &ValueTable, title: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("| dataset ({title}) |"));
    for m in &table.methods {
        out.push_str(&format!(" {m} |"));
    }
    out.push('\n');
    out.push_str(&format!("|---|{}\n", "---|".repeat(table.methods.len())));
    for d in &table.datasets {
        out.push_str(&format!("| {d} |"));
        for m in &table.methods {
            match table.cells.get(&(d.clone(), m.clone())) {
                Some(v) => out.push_str(&format!(" {v:.3} |")),
                None => out.push_str(" |"),
            }
        }
        out.push('\n');
    }
    out.push_str("| mean |");
    for m in &table.methods {
        match table.mean_row.get(m) {
            Some(v) => out.push_str(&format!(" {v:.3} |")),
            None => out.push_str(" |"),
        }
    }
    out.push('\n');
    out
}

pub fn value_csv(table: &ValueTable, value_name: &str) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "method", value_name]).expect("csv header");
    for d in &table.datasets {
        for m in &table.methods {
            if let Some(v) = table.cells.get(&(d.clone(), m.clone())) {
                w.write_record([d.as_str(), m.as_str(), &format!("{v:.6}")])
                    .expect("csv row");
            }
        }
    }
    for m in &table.methods {
        if let Some(v) = table.mean_row.get(m) {
            w.write_record(["mean", m.as_str(), &format!("{v:.6}")])
                .expect("csv mean row");
        }
    }
    finish(w)
}

/// Long-form per-run rows, one line per (dataset, method, run).
pub fn rows_csv(rows: &[MetricRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("csv row");
    }
    finish(w)
}

pub fn consistency_markdown(rows: &[ConsistencyRow]) -> String {
    let mut out = String::from("| method | sd f1 | sd precision | sd recall |\n|---|---|---|---|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {:.3} | {:.3} | {:.3} |\n",
            r.method, r.sd_f1, r.sd_precision, r.sd_recall
        ));
    }
    out
}

pub fn consistency_csv(rows: &[ConsistencyRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "sd_f1", "sd_precision", "sd_recall"])
        .expect("csv header");
    for r in rows {
        w.write_record([
            r.method.as_str(),
            &format!("{:.6}", r.sd_f1),
            &format!("{:.6}", r.sd_precision),
            &format!("{:.6}", r.sd_recall),
        ])
        .expect("csv row");
    }
    finish(w)
}

/// Which aggregate a combination matrix shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinationValue {
    /// True matches found (summed across datasets).
    TrueMatches,
    /// Candidates to inspect, |P⁺| (summed across datasets).
    Effort,
    /// F1 with (precision, recall), meaned across datasets.
    F1,
}

impl CombinationValue {
    fn title(&self) -> &'static str {
        match self {
            CombinationValue::TrueMatches => "true matches",
            CombinationValue::Effort => "candidates to inspect",
            CombinationValue::F1 => "f1 (p, r)",
        }
    }
}

/// Upper-triangular methods x methods matrix of one combination aggregate.
pub fn combination_markdown(tables: &CombinationTables, which: CombinationValue) -> String {
    let mut out = String::new();
    out.push_str(&format!("| {} |", which.title()));
    for m in &tables.methods {
        out.push_str(&format!(" {m} |"));
    }
    out.push('\n');
    out.push_str(&format!("|---|{}\n", "---|".repeat(tables.methods.len())));
    for (i, row_m) in tables.methods.iter().enumerate() {
        out.push_str(&format!("| {row_m} |"));
        for (j, col_m) in tables.methods.iter().enumerate() {
            if j < i {
                out.push_str(" |");
                continue;
            }
            let Some(c) = tables.cell(row_m, col_m) else {
                out.push_str(" |");
                continue;
            };
            let text = match which {
                CombinationValue::TrueMatches => format!("{:.1}", c.aggregate.tp),
                CombinationValue::Effort => format!("{:.1}", c.aggregate.candidates),
                CombinationValue::F1 => cell(
                    c.aggregate.f1,
                    c.aggregate.precision,
                    c.aggregate.recall,
                ),
            };
            out.push_str(&format!(" {text} |"));
        }
        out.push('\n');
    }
    out
}

pub fn combination_csv(tables: &CombinationTables) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method_a",
        "method_b",
        "true_matches",
        "candidates",
        "f1",
        "precision",
        "recall",
    ])
    .expect("csv header");
    for (i, a) in tables.methods.iter().enumerate() {
        for b in &tables.methods[i..] {
            if let Some(c) = tables.cell(a, b) {
                w.write_record([
                    a.as_str(),
                    b.as_str(),
                    &format!("{:.6}", c.aggregate.tp),
                    &format!("{:.6}", c.aggregate.candidates),
                    &format!("{:.6}", c.aggregate.f1),
                    &format!("{:.6}", c.aggregate.precision),
                    &format!("{:.6}", c.aggregate.recall),
                ])
                .expect("csv row");
            }
        }
    }
    finish(w)
}

/// Threshold sweep of one metric's pooled PR curve as CSV.
pub fn pr_curve_csv(curve: &PrCurve) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["threshold", "precision", "recall"]).expect("csv header");
    for p in &curve.points {
        w.write_record([
            format!("{:.6}", p.threshold),
            format!("{:.6}", p.precision),
            format!("{:.6}", p.recall),
        ])
        .expect("csv row");
    }
    finish(w)
}

/// Pooled PR curves and AUCs of every metric over a benchmark.
pub fn auc_comparison(benchmark: &Benchmark) -> Result<Vec<(Metric, PrCurve)>, EvalError> {
    let mut out = Vec::new();
    for metric in Metric::ALL {
        out.push((metric, pooled_pr_curve(metric, benchmark)?));
    }
    Ok(out)
}

pub fn auc_csv(curves: &[(Metric, PrCurve)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "auc"]).expect("csv header");
    for (m, c) in curves {
        w.write_record([m.to_string(), format!("{:.6}", c.auc)])
            .expect("csv row");
    }
    finish(w)
}

pub fn auc_markdown(curves: &[(Metric, PrCurve)]) -> String {
    let mut out = String::from("| metric | auc |\n|---|---|\n");
    for (m, c) in curves {
        out.push_str(&format!("| {m} | {:.3} |\n", c.auc));
    }
    out
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("csv buffer")).expect("csv is utf-8")
}
