//! String-similarity baseline matchers.
//!
//! Four metrics over attribute names: padded-trigram Dice, Jaro-Winkler,
//! normalized Levenshtein and Monge-Elkan. Names are case-folded before
//! comparison. A thresholded matcher predicts a match for every pair whose
//! score reaches the threshold; the threshold is chosen per dataset as the
//! observed score value with the best F1 against the ground truth.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::{Dataset, GroundTruth, Pair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ngram,
    JaroWinkler,
    Levenshtein,
    MongeElkan,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Ngram,
        Metric::JaroWinkler,
        Metric::Levenshtein,
        Metric::MongeElkan,
    ];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Metric::Ngram => "ngram",
            Metric::JaroWinkler => "jaro_winkler",
            Metric::Levenshtein => "levenshtein",
            Metric::MongeElkan => "monge_elkan",
        };
        f.write_str(name)
    }
}

impl FromStr for Metric {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().replace('-', "_").as_str() {
            "ngram" | "n_gram" | "sim_ng" => Ok(Metric::Ngram),
            "jaro_winkler" | "jarowinkler" => Ok(Metric::JaroWinkler),
            "levenshtein" => Ok(Metric::Levenshtein),
            "monge_elkan" | "mongeelkan" => Ok(Metric::MongeElkan),
            other => Err(SimilarityError::UnknownMetric(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("unknown metric {0:?} (expected ngram, jaro_winkler, levenshtein or monge_elkan)")]
    UnknownMetric(String),
    #[error("dice similarity is undefined for two empty gram sets")]
    DegenerateInput,
    #[error("ground truth has no matches; threshold selection is undefined")]
    EmptyTruth,
}

/// The similarity of one attribute pair under one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub pair: Pair,
    pub value: f64,
    pub metric: Metric,
}

/// Character trigrams of `name` after padding with a `##` prefix and `%%`
/// suffix; duplicates collapse into a set.
pub fn trigrams(name: &str) -> BTreeSet<String> {
    let padded: Vec<char> = "##"
        .chars()
        .chain(name.chars())
        .chain("%%".chars())
        .collect();
    padded
        .windows(3)
        .map(|w| w.iter().collect::<String>())
        .collect()
}

/// Dice similarity of two gram sets: `2|A ∩ B| / (|A| + |B|)`.
pub fn dice(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Result<f64, SimilarityError> {
    if a.is_empty() && b.is_empty() {
        return Err(SimilarityError::DegenerateInput);
    }
    let common = a.intersection(b).count();
    Ok(2.0 * common as f64 / (a.len() + b.len()) as f64)
}

/// Similarity of two attribute names under `metric`, in `[0, 1]`.
/// Comparison is case-folded; names are otherwise taken verbatim.
pub fn sim(metric: Metric, a: &str, b: &str) -> f64 {
    let a = a.to_lowercase();
    let b = b.to_lowercase();
    match metric {
        // Padding guarantees non-empty gram sets for any input.
        Metric::Ngram => dice(&trigrams(&a), &trigrams(&b)).expect("padded grams are non-empty"),
        Metric::JaroWinkler => jaro_winkler(&a, &b),
        Metric::Levenshtein => levenshtein_similarity(&a, &b),
        Metric::MongeElkan => monge_elkan(&a, &b),
    }
}

fn jaro(a: &[char], b: &[char]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    if a == b {
        return 1.0;
    }
    let radius = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut a_matched = vec![false; a.len()];
    let mut b_matched = vec![false; b.len()];
    let mut matches = 0usize;
    for (i, &ca) in a.iter().enumerate() {
        let low = i.saturating_sub(radius);
        let high = (i + radius + 1).min(b.len());
        for j in low..high {
            if !b_matched[j] && b[j] == ca {
                a_matched[i] = true;
                b_matched[j] = true;
                matches += 1;
                break;
            }
        }
    }
    if matches == 0 {
        return 0.0;
    }
    let mut transpositions = 0usize;
    let mut j = 0usize;
    for (i, &matched) in a_matched.iter().enumerate() {
        if !matched {
            continue;
        }
        while !b_matched[j] {
            j += 1;
        }
        if a[i] != b[j] {
            transpositions += 1;
        }
        j += 1;
    }
    // Half-transpositions floor, as in Winkler's reference implementation.
    let t = (transpositions / 2) as f64;
    let m = matches as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

// Winkler variant: prefix scale 0.1 over at most 4 common leading
// characters, applied when the Jaro score exceeds 0.7.
fn jaro_winkler(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let base = jaro(&a, &b);
    if base <= 0.7 {
        return base;
    }
    let prefix = a
        .iter()
        .zip(b.iter())
        .take(4)
        .take_while(|(x, y)| x == y)
        .count();
    base + prefix as f64 * 0.1 * (1.0 - base)
}

fn levenshtein_distance(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            let next = (diagonal + cost).min(row[j] + 1).min(row[j + 1] + 1);
            diagonal = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// `1 − dist / max(|a|, |b|)`, the standard normalization to `[0, 1]`.
fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein_distance(&a, &b) as f64 / longest as f64
}

fn tokens(name: &str) -> Vec<String> {
    name.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

// Monge-Elkan over `_`/non-alphanumeric tokens with Jaro-Winkler as the
// inner metric, symmetrized by averaging both directions.
fn monge_elkan(a: &str, b: &str) -> f64 {
    let ta = tokens(a);
    let tb = tokens(b);
    if ta.is_empty() || tb.is_empty() {
        return jaro_winkler(a, b);
    }
    (monge_elkan_directed(&ta, &tb) + monge_elkan_directed(&tb, &ta)) / 2.0
}

fn monge_elkan_directed(from: &[String], to: &[String]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|x| {
            to.iter()
                .map(|y| jaro_winkler(x, y))
                .fold(0.0_f64, f64::max)
        })
        .sum();
    total / from.len() as f64
}

/// Score every pair in the dataset's pair space, in pair-space order.
pub fn score_dataset(metric: Metric, d: &Dataset) -> Vec<SimilarityScore> {
    d.pair_space()
        .into_iter()
        .map(|pair| {
            let value = sim(metric, &pair.source, &pair.target);
            SimilarityScore {
                pair,
                value,
                metric,
            }
        })
        .collect()
}

/// F1 of the yes-set `{pair : value ≥ theta}` against the truth.
fn f1_at(scores: &[SimilarityScore], truth: &GroundTruth, theta: f64) -> f64 {
    let mut tp = 0usize;
    let mut predicted = 0usize;
    for s in scores {
        if s.value >= theta {
            predicted += 1;
            if truth.matches.contains(&s.pair) {
                tp += 1;
            }
        }
    }
    if predicted == 0 || truth.matches.is_empty() {
        return 0.0;
    }
    let p = tp as f64 / predicted as f64;
    let r = tp as f64 / truth.matches.len() as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Pick the observed score value that maximizes F1 when used as the
/// threshold; ties break toward the smallest threshold (maximal recall).
/// Returns `(theta, f1)`.
pub fn best_threshold(
    scores: &[SimilarityScore],
    truth: &GroundTruth,
) -> Result<(f64, f64), SimilarityError> {
    if truth.matches.is_empty() {
        return Err(SimilarityError::EmptyTruth);
    }
    let mut thresholds: Vec<f64> = scores.iter().map(|s| s.value).collect();
    thresholds.sort_by(|a, b| a.total_cmp(b));
    thresholds.dedup();

    let mut best: Option<(f64, f64)> = None;
    for &theta in &thresholds {
        let f1 = f1_at(scores, truth, theta);
        // Ascending scan plus strict improvement keeps the smallest theta
        // among ties.
        match best {
            Some((_, best_f1)) if f1 <= best_f1 => {}
            _ => best = Some((theta, f1)),
        }
    }
    Ok(best.expect("at least one observed score"))
}

/// One point of a precision-recall sweep, produced at a distinct score
/// value used as the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// Points ordered by descending threshold (ascending recall).
    pub points: Vec<PrPoint>,
    pub auc: f64,
}

/// Precision-recall curve over `(score, is_match)` observations.
///
/// One point per distinct score value used as a threshold, ordered by
/// descending threshold. The AUC is the trapezoid over recall with the
/// curve extended to recall 0 at the precision of the highest threshold.
pub fn pr_curve_from_labeled(labeled: &[(f64, bool)]) -> Result<PrCurve, SimilarityError> {
    let positives = labeled.iter().filter(|(_, m)| *m).count();
    if positives == 0 {
        return Err(SimilarityError::EmptyTruth);
    }
    let mut sorted: Vec<(f64, bool)> = labeled.to_vec();
    // Descending by score; ties on score fall into one threshold bucket.
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut predicted = 0usize;
    let mut i = 0usize;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            predicted += 1;
            if sorted[i].1 {
                tp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            precision: tp as f64 / predicted as f64,
            recall: tp as f64 / positives as f64,
        });
    }

    let mut auc = 0.0;
    let mut prev_recall = 0.0;
    let mut prev_precision = points[0].precision;
    for p in &points {
        auc += (p.recall - prev_recall) * (p.precision + prev_precision) / 2.0;
        prev_recall = p.recall;
        prev_precision = p.precision;
    }
    Ok(PrCurve { points, auc })
}

/// Dataset-level PR curve for one metric's scores.
pub fn pr_curve(scores: &[SimilarityScore], truth: &GroundTruth) -> Result<PrCurve, SimilarityError> {
    let labeled: Vec<(f64, bool)> = scores
        .iter()
        .map(|s| (s.value, truth.matches.contains(&s.pair)))
        .collect();
    pr_curve_from_labeled(&labeled)
}

/// PR curve pooling every dataset of a benchmark into a single ranking.
pub fn pooled_pr_curve(
    metric: Metric,
    benchmark: &crate::benchmark::Benchmark,
) -> Result<PrCurve, SimilarityError> {
    let mut labeled = Vec::with_capacity(benchmark.total_pairs());
    for d in &benchmark.datasets {
        let truth = benchmark
            .truth(&d.id)
            .expect("validated benchmark has one truth per dataset");
        for s in score_dataset(metric, d) {
            labeled.push((s.value, truth.matches.contains(&s.pair)));
        }
    }
    pr_curve_from_labeled(&labeled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{Attribute, Schema};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn grams(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn trigrams_of_admittime_slide_over_the_padded_string() {
        let got = trigrams("admittime");
        let expected = grams(&[
            "##a", "#ad", "adm", "dmi", "mit", "itt", "tti", "tim", "ime", "me%", "e%%",
        ]);
        assert_eq!(got, expected);
        assert_eq!(got.len(), 11);
    }

    #[test]
    fn trigrams_of_empty_and_single_char_strings() {
        assert_eq!(trigrams(""), grams(&["##%", "#%%"]));
        assert_eq!(trigrams("a"), grams(&["##a", "#a%", "a%%"]));
    }

    #[test]
    fn dice_identity_disjoint_and_hand_counted() {
        let a = trigrams("gender");
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        let b = trigrams("xyzw");
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
        let x = grams(&["##a", "#ad", "adm"]);
        let y = grams(&["##a", "#ad", "adx"]);
        let got = dice(&x, &y).unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn dice_rejects_two_empty_sets() {
        assert!(matches!(
            dice(&BTreeSet::new(), &BTreeSet::new()),
            Err(SimilarityError::DegenerateInput)
        ));
    }

    #[test]
    fn sim_is_one_on_identical_names_for_every_metric() {
        for metric in Metric::ALL {
            assert_eq!(sim(metric, "gender", "gender"), 1.0, "{metric}");
            assert_eq!(sim(metric, "Gender", "gender"), 1.0, "case-folded {metric}");
        }
    }

    #[test]
    fn levenshtein_single_edit_normalized_by_max_length() {
        let got = sim(Metric::Levenshtein, "abc", "abd");
        assert!((got - 2.0 / 3.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn jaro_winkler_floors_half_transpositions() {
        // order_id vs rx_id: 4 matches (r, d, _, i), matched subsequences
        // r,d,_,i vs r,_,i,d disagree at 3 positions, so t = floor(3/2) = 1
        // and jaro = (4/8 + 4/5 + 3/4) / 3 = 0.6833..; below the 0.7 boost
        // threshold, so Jaro-Winkler equals plain Jaro here.
        let got = sim(Metric::JaroWinkler, "order_id", "rx_id");
        assert!((got - 2.05 / 3.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn ngram_regression_pin_admittime_vs_visit_start_datetime() {
        // Frozen from an independent gram-intersection script: the padded
        // trigram sets share {tim, ime, me%, e%%}, sizes 11 and 22.
        let got = sim(Metric::Ngram, "admittime", "visit_start_datetime");
        assert!((got - 8.0 / 33.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn unknown_metric_name_is_rejected() {
        assert!(matches!(
            "cosine".parse::<Metric>(),
            Err(SimilarityError::UnknownMetric(_))
        ));
        assert_eq!("Jaro-Winkler".parse::<Metric>().unwrap(), Metric::JaroWinkler);
    }

    fn toy_dataset() -> (Dataset, GroundTruth) {
        let mk = |table: &str, names: &[&str]| Schema {
            table_name: table.into(),
            description: String::new(),
            attributes: names
                .iter()
                .map(|n| Attribute {
                    name: n.to_string(),
                    description: String::new(),
                })
                .collect(),
        };
        let d = Dataset {
            id: "Toy".into(),
            source: mk("s", &["gender", "admittime"]),
            target: mk("t", &["gender", "visit_start_datetime", "race"]),
        };
        let truth = GroundTruth {
            dataset_id: "Toy".into(),
            matches: BTreeSet::from([Pair::new("gender", "gender")]),
        };
        (d, truth)
    }

    #[test]
    fn score_dataset_covers_the_pair_space_in_order() {
        let (d, _) = toy_dataset();
        for metric in Metric::ALL {
            let scores = score_dataset(metric, &d);
            assert_eq!(scores.len(), 6);
            assert_eq!(
                scores.iter().map(|s| s.pair.clone()).collect::<Vec<_>>(),
                d.pair_space()
            );
            assert!(scores.iter().all(|s| (0.0..=1.0).contains(&s.value)));
        }
    }

    #[test]
    fn duplicate_names_across_schemas_score_one_under_every_metric() {
        let (d, _) = toy_dataset();
        for metric in Metric::ALL {
            let scores = score_dataset(metric, &d);
            let hit = scores
                .iter()
                .find(|s| s.pair == Pair::new("gender", "gender"))
                .unwrap();
            assert_eq!(hit.value, 1.0, "{metric}");
        }
    }

    fn scored(pairs: &[(&str, f64)]) -> (Vec<SimilarityScore>, GroundTruth) {
        let scores = pairs
            .iter()
            .map(|(name, value)| SimilarityScore {
                pair: Pair::new(*name, *name),
                value: *value,
                metric: Metric::Ngram,
            })
            .collect();
        (
            scores,
            GroundTruth {
                dataset_id: "Toy".into(),
                matches: BTreeSet::new(),
            },
        )
    }

    #[test]
    fn best_threshold_enumerates_observed_values() {
        // Candidates: theta=0.9 -> F1 2/3, theta=0.5 -> 0.5, theta=0.4 -> 0.8.
        let (scores, mut truth) = scored(&[("p1", 0.9), ("p2", 0.5), ("p3", 0.4)]);
        truth.matches = BTreeSet::from([Pair::new("p1", "p1"), Pair::new("p3", "p3")]);
        let (theta, f1) = best_threshold(&scores, &truth).unwrap();
        assert_eq!(theta, 0.4);
        assert!((f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn best_threshold_reaches_one_on_perfect_separation() {
        let (scores, mut truth) = scored(&[("a", 0.9), ("b", 0.8), ("c", 0.3), ("d", 0.2)]);
        truth.matches = BTreeSet::from([Pair::new("a", "a"), Pair::new("b", "b")]);
        let (theta, f1) = best_threshold(&scores, &truth).unwrap();
        assert_eq!(f1, 1.0);
        assert_eq!(theta, 0.8);
    }

    #[test]
    fn best_threshold_requires_a_non_empty_truth() {
        let (scores, truth) = scored(&[("a", 0.9)]);
        assert!(matches!(
            best_threshold(&scores, &truth),
            Err(SimilarityError::EmptyTruth)
        ));
    }

    #[test]
    fn best_threshold_ties_break_toward_smaller_theta() {
        // theta=0.9 gives (p=1, r=0.5) and theta=0.2 gives (p=0.5, r=1),
        // both F1 = 2/3; the smaller theta wins for its higher recall.
        let (scores, mut truth) =
            scored(&[("m", 0.9), ("a", 0.6), ("b", 0.4), ("k", 0.2)]);
        truth.matches = BTreeSet::from([Pair::new("m", "m"), Pair::new("k", "k")]);
        let (theta, f1) = best_threshold(&scores, &truth).unwrap();
        assert_eq!(theta, 0.2);
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pr_curve_perfect_separator_has_auc_one() {
        let labeled = vec![(0.9, true), (0.8, true), (0.2, false), (0.1, false)];
        let curve = pr_curve_from_labeled(&labeled).unwrap();
        assert!((curve.auc - 1.0).abs() < 1e-12, "auc {}", curve.auc);
    }

    #[test]
    fn pr_curve_constant_scores_collapse_to_prevalence_point() {
        let labeled = vec![(0.5, true), (0.5, false), (0.5, false), (0.5, false)];
        let curve = pr_curve_from_labeled(&labeled).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.points[0].recall, 1.0);
        assert_eq!(curve.points[0].precision, 0.25);
        assert!((curve.auc - 0.25).abs() < 1e-12);
    }

    #[test]
    fn pr_curve_recalls_are_non_decreasing_by_descending_threshold() {
        let labeled = vec![
            (0.9, false),
            (0.8, true),
            (0.7, false),
            (0.6, true),
            (0.5, false),
        ];
        let curve = pr_curve_from_labeled(&labeled).unwrap();
        for w in curve.points.windows(2) {
            assert!(w[0].threshold > w[1].threshold);
            assert!(w[0].recall <= w[1].recall);
        }
    }

    // Brute-force oracle: evaluate F1 at every observed score directly.
    fn brute_force_best_f1(scores: &[SimilarityScore], truth: &GroundTruth) -> f64 {
        let mut best = 0.0_f64;
        for s in scores {
            let theta = s.value;
            let predicted: Vec<&SimilarityScore> =
                scores.iter().filter(|x| x.value >= theta).collect();
            let tp = predicted
                .iter()
                .filter(|x| truth.matches.contains(&x.pair))
                .count();
            if predicted.is_empty() {
                continue;
            }
            let p = tp as f64 / predicted.len() as f64;
            let r = tp as f64 / truth.matches.len() as f64;
            let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            best = best.max(f1);
        }
        best
    }

    proptest! {
        #[test]
        fn trigram_count_is_bounded_by_length_plus_two(s in "[a-z_]{0,24}") {
            let grams = trigrams(&s);
            prop_assert!(!grams.is_empty());
            prop_assert!(grams.len() <= s.chars().count() + 2);
        }

        #[test]
        fn dice_is_symmetric_and_bounded(a in "[a-z_]{1,16}", b in "[a-z_]{1,16}") {
            let (ga, gb) = (trigrams(&a), trigrams(&b));
            let ab = dice(&ga, &gb).unwrap();
            let ba = dice(&gb, &ga).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(dice(&ga, &ga).unwrap(), 1.0);
        }

        #[test]
        fn every_metric_stays_in_unit_interval_and_hits_one_on_self(
            a in "[a-zA-Z_0-9]{1,20}",
            b in "[a-zA-Z_0-9]{1,20}",
        ) {
            for metric in Metric::ALL {
                let v = sim(metric, &a, &b);
                prop_assert!((0.0..=1.0).contains(&v), "{} {} {} -> {}", metric, a, b, v);
                prop_assert_eq!(sim(metric, &a, &a), 1.0);
            }
        }

        #[test]
        fn ngram_and_levenshtein_are_symmetric(a in "[a-z_]{1,16}", b in "[a-z_]{1,16}") {
            for metric in [Metric::Ngram, Metric::Levenshtein] {
                prop_assert_eq!(sim(metric, &a, &b), sim(metric, &b, &a));
            }
        }

        #[test]
        fn best_threshold_matches_brute_force_enumeration(
            values in proptest::collection::vec(0..=10u8, 1..40),
            truth_mask in proptest::collection::vec(any::<bool>(), 1..40),
        ) {
            let n = values.len().min(truth_mask.len());
            let scores: Vec<SimilarityScore> = (0..n)
                .map(|i| SimilarityScore {
                    pair: Pair::new(format!("s{i}"), format!("t{i}")),
                    value: values[i] as f64 / 10.0,
                    metric: Metric::Ngram,
                })
                .collect();
            let matches: BTreeSet<Pair> = (0..n)
                .filter(|&i| truth_mask[i])
                .map(|i| Pair::new(format!("s{i}"), format!("t{i}")))
                .collect();
            prop_assume!(!matches.is_empty());
            let truth = GroundTruth { dataset_id: "Toy".into(), matches };
            let (theta, f1) = best_threshold(&scores, &truth).unwrap();
            prop_assert!((f1 - brute_force_best_f1(&scores, &truth)).abs() < 1e-12);
            // Lowering theta never decreases recall.
            let recall_at = |t: f64| {
                let tp = scores
                    .iter()
                    .filter(|s| s.value >= t && truth.matches.contains(&s.pair))
                    .count();
                tp as f64 / truth.matches.len() as f64
            };
            prop_assert!(recall_at(theta - 0.05) >= recall_at(theta));
        }
    }
}
