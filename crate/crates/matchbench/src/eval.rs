//! Evaluation metrics and aggregate tables.
//!
//! Per run and dataset: precision, recall, F1 and decisiveness of one
//! Matching against the ground truth. Across runs: median tables with a
//! cross-dataset mean row, run-to-run consistency as averaged sample
//! standard deviations, and the method-combination analysis that unions
//! two methods' predicted matches over every run pair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::{Benchmark, Dataset, GroundTruth};
use crate::experiment::Matching;
use crate::similarity::{best_threshold, score_dataset, Metric, SimilarityError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset mismatch: expected {expected:?}, got {got:?}")]
    DatasetMismatch { expected: String, got: String },
    #[error("need at least {needed} runs, got {got}")]
    InsufficientRuns { needed: usize, got: usize },
    #[error("method {method:?} has {got} runs where {expected} were expected")]
    RunCountMismatch {
        method: String,
        expected: usize,
        got: usize,
    },
    #[error("method {method:?} run {run} lacks a matching for dataset {dataset:?}")]
    MissingDataset {
        method: String,
        run: usize,
        dataset: String,
    },
    #[error("benchmark lacks a ground truth for dataset {0:?}")]
    MissingTruth(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// One (dataset, method, run) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub dataset_id: String,
    pub method: String,
    pub run_index: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Fraction of the pair space that received a yes or no.
    pub decisiveness: f64,
    pub tp: usize,
    pub fp: usize,
    pub false_negatives: usize,
    /// |P⁺|: match candidates a reviewer would have to inspect.
    pub candidates: usize,
    /// Set when P⁺ was empty, making precision undefined (reported as 0).
    pub empty_candidates: bool,
}

/// Harmonic mean with the zero guard: 0 whenever p + r = 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Score one matching against the ground truth of its dataset.
pub fn evaluate(
    m: &Matching,
    t: &GroundTruth,
    d: &Dataset,
    method: impl Into<String>,
    run_index: usize,
) -> Result<MetricRow, EvalError> {
    for got in [&m.dataset_id, &t.dataset_id] {
        if *got != d.id {
            return Err(EvalError::DatasetMismatch {
                expected: d.id.clone(),
                got: got.clone(),
            });
        }
    }
    let tp = m.yes.intersection(&t.matches).count();
    let candidates = m.yes.len();
    let fp = candidates - tp;
    let false_negatives = t.matches.len() - tp;
    let empty_candidates = candidates == 0;
    let precision = if empty_candidates {
        0.0
    } else {
        tp as f64 / candidates as f64
    };
    let recall = if t.matches.is_empty() {
        0.0
    } else {
        tp as f64 / t.matches.len() as f64
    };
    let decided = candidates + m.no.len();
    let decisiveness = if d.pair_count() == 0 {
        0.0
    } else {
        decided as f64 / d.pair_count() as f64
    };
    Ok(MetricRow {
        dataset_id: d.id.clone(),
        method: method.into(),
        run_index,
        precision,
        recall,
        f1: f1_score(precision, recall),
        decisiveness,
        tp,
        fp,
        false_negatives,
        candidates,
        empty_candidates,
    })
}

/// Median; an even count takes the mean of the two central values.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n >= 2, "sample sd needs at least two values");
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Independently aggregated medians of one (dataset, method) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianCell {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Median-per-cell table with one column per method, one row per dataset,
/// and a bottom row of cross-dataset means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianTable {
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    pub cells: BTreeMap<(String, String), MedianCell>,
    pub mean_row: BTreeMap<String, MedianCell>,
}

impl MedianTable {
    pub fn cell(&self, dataset: &str, method: &str) -> Option<&MedianCell> {
        self.cells.get(&(dataset.to_string(), method.to_string()))
    }
}

/// Reduce per-run rows to per-(dataset, method) medians. The medians of
/// f1, precision and recall are taken independently, so a cell's three
/// numbers may come from different runs.
pub fn median_table(rows: &[MetricRow]) -> MedianTable {
    let mut datasets = Vec::new();
    let mut methods = Vec::new();
    let mut grouped: BTreeMap<(String, String), Vec<&MetricRow>> = BTreeMap::new();
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
            .push(row);
    }

    let mut cells = BTreeMap::new();
    for (key, group) in &grouped {
        let collect = |f: fn(&MetricRow) -> f64| -> Vec<f64> {
            group.iter().map(|r| f(r)).collect()
        };
        cells.insert(
            key.clone(),
            MedianCell {
                f1: median(&collect(|r| r.f1)),
                precision: median(&collect(|r| r.precision)),
                recall: median(&collect(|r| r.recall)),
            },
        );
    }

    let mut mean_row = BTreeMap::new();
    for method in &methods {
        let column: Vec<&MedianCell> = datasets
            .iter()
            .filter_map(|d| cells.get(&(d.clone(), method.clone())))
            .collect();
        if column.is_empty() {
            continue;
        }
        let n = column.len() as f64;
        mean_row.insert(
            method.clone(),
            MedianCell {
                f1: column.iter().map(|c| c.f1).sum::<f64>() / n,
                precision: column.iter().map(|c| c.precision).sum::<f64>() / n,
                recall: column.iter().map(|c| c.recall).sum::<f64>() / n,
            },
        );
    }

    MedianTable {
        datasets,
        methods,
        cells,
        mean_row,
    }
}

/// Run-to-run spread of one method: per-dataset sample standard deviations
/// of f1, precision and recall, averaged across datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub method: String,
    pub sd_f1: f64,
    pub sd_precision: f64,
    pub sd_recall: f64,
}

/// Consistency per method over ≥2 runs per dataset.
pub fn consistency(rows: &[MetricRow]) -> Result<Vec<ConsistencyRow>, EvalError> {
    let mut methods = Vec::new();
    let mut grouped: BTreeMap<(String, String), Vec<&MetricRow>> = BTreeMap::new();
    for row in rows {
        if !methods.contains(&row.method) {
            methods.push(row.method.clone());
        }
        grouped
            .entry((row.method.clone(), row.dataset_id.clone()))
            .or_default()
            .push(row);
    }

    let mut out = Vec::new();
    for method in methods {
        let mut sds_f1 = Vec::new();
        let mut sds_p = Vec::new();
        let mut sds_r = Vec::new();
        for ((m, _), group) in &grouped {
            if *m != method {
                continue;
            }
            if group.len() < 2 {
                return Err(EvalError::InsufficientRuns {
                    needed: 2,
                    got: group.len(),
                });
            }
            let series = |f: fn(&MetricRow) -> f64| -> Vec<f64> {
                group.iter().map(|r| f(r)).collect()
            };
            sds_f1.push(sample_sd(&series(|r| r.f1)));
            sds_p.push(sample_sd(&series(|r| r.precision)));
            sds_r.push(sample_sd(&series(|r| r.recall)));
        }
        let n = sds_f1.len() as f64;
        out.push(ConsistencyRow {
            method,
            sd_f1: sds_f1.iter().sum::<f64>() / n,
            sd_precision: sds_p.iter().sum::<f64>() / n,
            sd_recall: sds_r.iter().sum::<f64>() / n,
        });
    }
    Ok(out)
}

/// Union of two methods' predictions: everything either said yes to is a
/// candidate; a pair is a predicted non-match only if some side said no
/// and no side said yes.
pub fn combine(a: &Matching, b: &Matching) -> Result<Matching, EvalError> {
    if a.dataset_id != b.dataset_id {
        return Err(EvalError::DatasetMismatch {
            expected: a.dataset_id.clone(),
            got: b.dataset_id.clone(),
        });
    }
    let yes: std::collections::BTreeSet<_> = a.yes.union(&b.yes).cloned().collect();
    let no = a
        .no
        .union(&b.no)
        .filter(|p| !yes.contains(*p))
        .cloned()
        .collect();
    Ok(Matching {
        dataset_id: a.dataset_id.clone(),
        yes,
        no,
    })
}

/// One method's matchings across runs: `runs[k]` maps dataset id to the
/// matching of run k+1.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRuns {
    pub method: String,
    pub runs: Vec<BTreeMap<String, Matching>>,
}

/// Per-dataset averages over all run pairs of one method combination.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CellStats {
    pub tp: f64,
    pub candidates: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// One (method, method) cell: per-dataset stats plus the cross-dataset
/// aggregate (counts summed, rates meaned).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationCell {
    pub per_dataset: BTreeMap<String, CellStats>,
    pub aggregate: CellStats,
}

/// Symmetric method-combination matrix. The diagonal holds single-method
/// run averages; off-diagonal cells average the combined matching over
/// every run pair of the two methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationTables {
    pub methods: Vec<String>,
    pub cells: BTreeMap<(String, String), CombinationCell>,
}

impl CombinationTables {
    pub fn cell(&self, a: &str, b: &str) -> Option<&CombinationCell> {
        self.cells
            .get(&(a.to_string(), b.to_string()))
            .or_else(|| self.cells.get(&(b.to_string(), a.to_string())))
    }
}

fn stats_of(m: &Matching, t: &GroundTruth, d: &Dataset) -> Result<CellStats, EvalError> {
    let row = evaluate(m, t, d, "", 0)?;
    Ok(CellStats {
        tp: row.tp as f64,
        candidates: row.candidates as f64,
        f1: row.f1,
        precision: row.precision,
        recall: row.recall,
    })
}

fn mean_stats(stats: &[CellStats]) -> CellStats {
    let n = stats.len() as f64;
    CellStats {
        tp: stats.iter().map(|s| s.tp).sum::<f64>() / n,
        candidates: stats.iter().map(|s| s.candidates).sum::<f64>() / n,
        f1: stats.iter().map(|s| s.f1).sum::<f64>() / n,
        precision: stats.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: stats.iter().map(|s| s.recall).sum::<f64>() / n,
    }
}

fn aggregate_across_datasets(per_dataset: &BTreeMap<String, CellStats>) -> CellStats {
    let n = per_dataset.len() as f64;
    CellStats {
        tp: per_dataset.values().map(|s| s.tp).sum(),
        candidates: per_dataset.values().map(|s| s.candidates).sum(),
        f1: per_dataset.values().map(|s| s.f1).sum::<f64>() / n,
        precision: per_dataset.values().map(|s| s.precision).sum::<f64>() / n,
        recall: per_dataset.values().map(|s| s.recall).sum::<f64>() / n,
    }
}

/// Build the combination matrix for a set of methods with equal run
/// counts. True-match and candidate counts sum across datasets; f1,
/// precision and recall average across datasets.
pub fn combination_tables(
    methods: &[MethodRuns],
    benchmark: &Benchmark,
) -> Result<CombinationTables, EvalError> {
    let expected_runs = methods.first().map(|m| m.runs.len()).unwrap_or(0);
    for m in methods {
        if m.runs.len() != expected_runs {
            return Err(EvalError::RunCountMismatch {
                method: m.method.clone(),
                expected: expected_runs,
                got: m.runs.len(),
            });
        }
        for (k, run) in m.runs.iter().enumerate() {
            for d in &benchmark.datasets {
                if !run.contains_key(&d.id) {
                    return Err(EvalError::MissingDataset {
                        method: m.method.clone(),
                        run: k + 1,
                        dataset: d.id.clone(),
                    });
                }
            }
        }
    }
    if expected_runs == 0 {
        return Err(EvalError::InsufficientRuns { needed: 1, got: 0 });
    }

    let truth_of = |d: &Dataset| -> Result<&GroundTruth, EvalError> {
        benchmark
            .truth(&d.id)
            .ok_or_else(|| EvalError::MissingTruth(d.id.clone()))
    };

    let mut cells = BTreeMap::new();
    for (i, mi) in methods.iter().enumerate() {
        for mj in &methods[i..] {
            let mut per_dataset = BTreeMap::new();
            for d in &benchmark.datasets {
                let truth = truth_of(d)?;
                let mut stats = Vec::new();
                if mi.method == mj.method {
                    // Diagonal: the method's own runs, no self-union.
                    for run in &mi.runs {
                        stats.push(stats_of(&run[&d.id], truth, d)?);
                    }
                } else {
                    for run_a in &mi.runs {
                        for run_b in &mj.runs {
                            let combined = combine(&run_a[&d.id], &run_b[&d.id])?;
                            stats.push(stats_of(&combined, truth, d)?);
                        }
                    }
                }
                per_dataset.insert(d.id.clone(), mean_stats(&stats));
            }
            let aggregate = aggregate_across_datasets(&per_dataset);
            cells.insert(
                (mi.method.clone(), mj.method.clone()),
                CombinationCell {
                    per_dataset,
                    aggregate,
                },
            );
        }
    }

    Ok(CombinationTables {
        methods: methods.iter().map(|m| m.method.clone()).collect(),
        cells,
    })
}

/// Deterministic baseline matching: predict yes for every pair scoring at
/// least the dataset's best-F1 threshold, no for the rest.
pub fn baseline_matching(metric: Metric, d: &Dataset, t: &GroundTruth) -> Result<Matching, EvalError> {
    let scores = score_dataset(metric, d);
    let (theta, _) = best_threshold(&scores, t)?;
    let mut matching = Matching::empty(&d.id);
    for s in scores {
        if s.value >= theta {
            matching.yes.insert(s.pair);
        } else {
            matching.no.insert(s.pair);
        }
    }
    Ok(matching)
}

/// The baseline as a method in the combination analysis: the same
/// deterministic matching repeated for `runs` runs.
pub fn baseline_runs(
    metric: Metric,
    benchmark: &Benchmark,
    runs: usize,
) -> Result<MethodRuns, EvalError> {
    let mut per_dataset = BTreeMap::new();
    for d in &benchmark.datasets {
        let truth = benchmark
            .truth(&d.id)
            .ok_or_else(|| EvalError::MissingTruth(d.id.clone()))?;
        per_dataset.insert(d.id.clone(), baseline_matching(metric, d, truth)?);
    }
    Ok(MethodRuns {
        method: metric.to_string(),
        runs: vec![per_dataset; runs],
    })
}
