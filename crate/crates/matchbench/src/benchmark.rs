//! Matching benchmarks: schemas with documentation plus ground truth.
//!
//! A benchmark is a list of datasets, each pairing a source schema with a
//! target schema, together with one ground-truth set of valid 1:1 matches
//! per dataset. Manifests are JSON, either a single `benchmark.json`
//! document or a directory with an `index.json` plus one document per
//! dataset. Attribute names are compared case-insensitively but stored
//! verbatim.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A named schema element with its natural-language documentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

/// A relational schema: a table with an ordered list of attributes.
///
/// Attribute order is preserved from the manifest; prompt rendering
/// depends on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(rename = "table")]
    pub table_name: String,
    #[serde(default)]
    pub description: String,
    pub attributes: Vec<Attribute>,
}

impl Schema {
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Case-insensitive attribute lookup, returning the stored attribute.
    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        let folded = name.to_lowercase();
        self.attributes
            .iter()
            .find(|a| a.name.to_lowercase() == folded)
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.attributes.iter().map(|a| a.name.clone()).collect()
    }
}

/// An ordered (source attribute, target attribute) pair.
///
/// Names are stored verbatim; two pairs are equal only if both names are
/// byte-equal. Benchmark loading normalizes ground-truth names to the
/// schema spelling so verbatim comparison is safe downstream.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub source: String,
    pub target: String,
}

impl Pair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Pair {
            source: source.into(),
            target: target.into(),
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.source, self.target)
    }
}

/// One matching problem instance: a source schema against a target schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub id: String,
    pub source: Schema,
    pub target: Schema,
}

impl Dataset {
    /// Cartesian product of the two attribute lists in source-major order.
    pub fn pair_space(&self) -> Vec<Pair> {
        let mut pairs = Vec::with_capacity(self.pair_count());
        for s in &self.source.attributes {
            for t in &self.target.attributes {
                pairs.push(Pair::new(s.name.clone(), t.name.clone()));
            }
        }
        pairs
    }

    pub fn pair_count(&self) -> usize {
        self.source.len() * self.target.len()
    }
}

/// The set of valid 1:1 matches for one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub dataset_id: String,
    pub matches: BTreeSet<Pair>,
}

/// A full benchmark: datasets plus one ground truth per dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Benchmark {
    pub datasets: Vec<Dataset>,
    pub truths: Vec<GroundTruth>,
}

impl Benchmark {
    pub fn dataset(&self, id: &str) -> Option<&Dataset> {
        self.datasets.iter().find(|d| d.id == id)
    }

    pub fn truth(&self, id: &str) -> Option<&GroundTruth> {
        self.truths.iter().find(|t| t.dataset_id == id)
    }

    /// Total size of the pair search space over all datasets.
    pub fn total_pairs(&self) -> usize {
        self.datasets.iter().map(|d| d.pair_count()).sum()
    }

    /// Total number of ground-truth matches over all datasets.
    pub fn total_matches(&self) -> usize {
        self.truths.iter().map(|t| t.matches.len()).sum()
    }
}

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("manifest not found at {0}")]
    ManifestNotFound(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    Malformed {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("ground-truth error: {0}")]
    TruthError(String),
}

/// Severity of a validation finding. Loading fails on `Error`, while
/// `Warning` findings (e.g. duplicated truth pairs, deduplicated on load)
/// are reported but tolerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: String) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message,
        }
    }

    fn warning(message: String) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Warning => write!(f, "warning: {}", self.message),
            Severity::Error => write!(f, "error: {}", self.message),
        }
    }
}

// Manifest documents. `benchmark.json` carries datasets and truths in one
// document; the directory format has an `index.json` naming one document
// per dataset, each with its own `matches` array.

#[derive(Debug, Serialize, Deserialize)]
struct ManifestDoc {
    datasets: Vec<Dataset>,
    truth: Vec<TruthDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthDoc {
    dataset: String,
    matches: Vec<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexDoc {
    datasets: Vec<IndexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    id: String,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetDoc {
    id: String,
    source: Schema,
    target: Schema,
    matches: Vec<(String, String)>,
}

/// Load and fully validate a benchmark manifest.
///
/// `path` may be a `benchmark.json` file, a directory containing one, or a
/// directory containing an `index.json` plus per-dataset documents.
pub fn load_benchmark(path: impl AsRef<Path>) -> Result<Benchmark, BenchmarkError> {
    load_benchmark_with_diagnostics(path).map(|(b, _)| b)
}

/// As [`load_benchmark`], but also surfaces non-fatal diagnostics such as
/// truth pairs that were duplicated in the manifest.
pub fn load_benchmark_with_diagnostics(
    path: impl AsRef<Path>,
) -> Result<(Benchmark, Vec<Diagnostic>), BenchmarkError> {
    let path = path.as_ref();
    let (raw_datasets, raw_truths) = read_manifest(path)?;
    assemble(raw_datasets, raw_truths)
}

fn read_manifest(
    path: &Path,
) -> Result<(Vec<Dataset>, Vec<(String, Vec<(String, String)>)>), BenchmarkError> {
    if path.is_file() {
        return read_single_file(path);
    }
    if path.is_dir() {
        let single = path.join("benchmark.json");
        if single.is_file() {
            return read_single_file(&single);
        }
        let index = path.join("index.json");
        if index.is_file() {
            return read_indexed(path, &index);
        }
    }
    Err(BenchmarkError::ManifestNotFound(path.display().to_string()))
}

fn read_single_file(
    path: &Path,
) -> Result<(Vec<Dataset>, Vec<(String, Vec<(String, String)>)>), BenchmarkError> {
    let text = fs::read_to_string(path).map_err(|source| BenchmarkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc: ManifestDoc =
        serde_json::from_str(&text).map_err(|source| BenchmarkError::Malformed {
            path: path.display().to_string(),
            source,
        })?;
    let truths = doc.truth.into_iter().map(|t| (t.dataset, t.matches)).collect();
    Ok((doc.datasets, truths))
}

fn read_indexed(
    dir: &Path,
    index_path: &Path,
) -> Result<(Vec<Dataset>, Vec<(String, Vec<(String, String)>)>), BenchmarkError> {
    let text = fs::read_to_string(index_path).map_err(|source| BenchmarkError::Io {
        path: index_path.display().to_string(),
        source,
    })?;
    let index: IndexDoc =
        serde_json::from_str(&text).map_err(|source| BenchmarkError::Malformed {
            path: index_path.display().to_string(),
            source,
        })?;
    let mut datasets = Vec::new();
    let mut truths = Vec::new();
    for entry in index.datasets {
        let file = dir.join(&entry.file);
        let text = fs::read_to_string(&file).map_err(|source| BenchmarkError::Io {
            path: file.display().to_string(),
            source,
        })?;
        let doc: DatasetDoc =
            serde_json::from_str(&text).map_err(|source| BenchmarkError::Malformed {
                path: file.display().to_string(),
                source,
            })?;
        if doc.id != entry.id {
            return Err(BenchmarkError::SchemaError(format!(
                "dataset file {} declares id {:?} but the index says {:?}",
                file.display(),
                doc.id,
                entry.id
            )));
        }
        datasets.push(Dataset {
            id: doc.id.clone(),
            source: doc.source,
            target: doc.target,
        });
        truths.push((doc.id, doc.matches));
    }
    Ok((datasets, truths))
}

/// Build the validated model from raw manifest parts. Ground-truth names
/// are resolved case-insensitively and stored in the schema spelling;
/// duplicate pairs are dropped with a warning.
fn assemble(
    datasets: Vec<Dataset>,
    raw_truths: Vec<(String, Vec<(String, String)>)>,
) -> Result<(Benchmark, Vec<Diagnostic>), BenchmarkError> {
    let mut diagnostics = Vec::new();
    let mut truths = Vec::new();

    for (dataset_id, raw_matches) in raw_truths {
        let dataset = datasets.iter().find(|d| d.id == dataset_id).ok_or_else(|| {
            BenchmarkError::TruthError(format!(
                "ground truth references unknown dataset {dataset_id:?}"
            ))
        })?;
        let mut matches = BTreeSet::new();
        for (src, tgt) in raw_matches {
            let source = dataset.source.attribute(&src).ok_or_else(|| {
                BenchmarkError::TruthError(format!(
                    "{dataset_id}: ground truth names source attribute {src:?} absent from {}",
                    dataset.source.table_name
                ))
            })?;
            let target = dataset.target.attribute(&tgt).ok_or_else(|| {
                BenchmarkError::TruthError(format!(
                    "{dataset_id}: ground truth names target attribute {tgt:?} absent from {}",
                    dataset.target.table_name
                ))
            })?;
            let pair = Pair::new(source.name.clone(), target.name.clone());
            if !matches.insert(pair.clone()) {
                diagnostics.push(Diagnostic::warning(format!(
                    "{dataset_id}: truth pair {pair} duplicated in manifest; deduplicated"
                )));
            }
        }
        truths.push(GroundTruth {
            dataset_id,
            matches,
        });
    }

    let benchmark = Benchmark { datasets, truths };
    let findings = validate_benchmark(&benchmark);
    if let Some(first_schema) = findings
        .iter()
        .find(|d| d.severity == Severity::Error && d.message.starts_with("schema"))
    {
        return Err(BenchmarkError::SchemaError(first_schema.message.clone()));
    }
    if let Some(first_error) = findings.iter().find(|d| d.severity == Severity::Error) {
        return Err(BenchmarkError::TruthError(first_error.message.clone()));
    }
    diagnostics.extend(findings);
    Ok((benchmark, diagnostics))
}

/// Check every benchmark invariant, returning an empty list iff all hold.
pub fn validate_benchmark(b: &Benchmark) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut seen_ids = BTreeSet::new();
    for d in &b.datasets {
        if !seen_ids.insert(d.id.clone()) {
            out.push(Diagnostic::error(format!(
                "dataset id {:?} is not unique",
                d.id
            )));
        }
        for (role, schema) in [("source", &d.source), ("target", &d.target)] {
            if schema.attributes.is_empty() {
                out.push(Diagnostic::error(format!(
                    "schema {}: {role} table {} has no attributes",
                    d.id, schema.table_name
                )));
            }
            let mut seen = BTreeMap::new();
            for a in &schema.attributes {
                if a.name.is_empty() {
                    out.push(Diagnostic::error(format!(
                        "schema {}: {role} table {} has an attribute with an empty name",
                        d.id, schema.table_name
                    )));
                    continue;
                }
                if let Some(prev) = seen.insert(a.name.to_lowercase(), a.name.clone()) {
                    out.push(Diagnostic::error(format!(
                        "schema {}: {role} table {} attribute {:?} duplicates {:?} (case-insensitive)",
                        d.id, schema.table_name, a.name, prev
                    )));
                }
            }
        }
    }

    let mut truth_ids = BTreeSet::new();
    for t in &b.truths {
        if !truth_ids.insert(t.dataset_id.clone()) {
            out.push(Diagnostic::error(format!(
                "more than one ground truth for dataset {:?}",
                t.dataset_id
            )));
        }
        match b.dataset(&t.dataset_id) {
            None => out.push(Diagnostic::error(format!(
                "ground truth references unknown dataset {:?}",
                t.dataset_id
            ))),
            Some(d) => {
                for pair in &t.matches {
                    if d.source.attribute(&pair.source).is_none()
                        || d.target.attribute(&pair.target).is_none()
                    {
                        out.push(Diagnostic::error(format!(
                            "{}: truth pair {pair} is outside the dataset's pair space",
                            t.dataset_id
                        )));
                    }
                }
            }
        }
    }
    for d in &b.datasets {
        if b.truth(&d.id).is_none() {
            out.push(Diagnostic::error(format!(
                "dataset {:?} has no ground truth",
                d.id
            )));
        }
    }

    out
}

/// Serialize a benchmark to the single-document `benchmark.json` format.
pub fn save_benchmark(b: &Benchmark, path: impl AsRef<Path>) -> Result<(), BenchmarkError> {
    let doc = ManifestDoc {
        datasets: b.datasets.clone(),
        truth: b
            .truths
            .iter()
            .map(|t| TruthDoc {
                dataset: t.dataset_id.clone(),
                matches: t
                    .matches
                    .iter()
                    .map(|p| (p.source.clone(), p.target.clone()))
                    .collect(),
            })
            .collect(),
    };
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| BenchmarkError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    let text = serde_json::to_string_pretty(&doc).expect("benchmark serializes");
    fs::write(path, text + "\n").map_err(|source| BenchmarkError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Import a benchmark from a directory of CSV files.
///
/// Expected layout (UTF-8, header row required):
///
/// - `tables.csv`: `table,description`
/// - `attributes.csv`: `table,attribute,description` (file order becomes
///   attribute order)
/// - `datasets.csv`: `dataset,source_table,target_table`
/// - `matches.csv`: `dataset,source_attribute,target_attribute`
pub fn import_benchmark(dir: impl AsRef<Path>) -> Result<Benchmark, BenchmarkError> {
    let dir = dir.as_ref();
    let io_err = |path: &Path, source: csv::Error| match source.kind() {
        csv::ErrorKind::Io(_) => BenchmarkError::ManifestNotFound(path.display().to_string()),
        _ => BenchmarkError::SchemaError(format!("{}: {}", path.display(), source)),
    };

    let tables_path = dir.join("tables.csv");
    let mut table_desc: BTreeMap<String, String> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(&tables_path).map_err(|e| io_err(&tables_path, e))?;
    for record in reader.deserialize() {
        let row: TableRow = record.map_err(|e| io_err(&tables_path, e))?;
        table_desc.insert(row.table, row.description);
    }

    let attrs_path = dir.join("attributes.csv");
    let mut table_attrs: BTreeMap<String, Vec<Attribute>> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(&attrs_path).map_err(|e| io_err(&attrs_path, e))?;
    for record in reader.deserialize() {
        let row: AttributeRow = record.map_err(|e| io_err(&attrs_path, e))?;
        table_attrs.entry(row.table).or_default().push(Attribute {
            name: row.attribute,
            description: row.description,
        });
    }

    let make_schema = |table: &str| -> Result<Schema, BenchmarkError> {
        let attributes = table_attrs.get(table).cloned().ok_or_else(|| {
            BenchmarkError::SchemaError(format!("table {table:?} has no attributes.csv rows"))
        })?;
        Ok(Schema {
            table_name: table.to_string(),
            description: table_desc.get(table).cloned().unwrap_or_default(),
            attributes,
        })
    };

    let datasets_path = dir.join("datasets.csv");
    let mut datasets = Vec::new();
    let mut reader =
        csv::Reader::from_path(&datasets_path).map_err(|e| io_err(&datasets_path, e))?;
    for record in reader.deserialize() {
        let row: DatasetRow = record.map_err(|e| io_err(&datasets_path, e))?;
        datasets.push(Dataset {
            id: row.dataset,
            source: make_schema(&row.source_table)?,
            target: make_schema(&row.target_table)?,
        });
    }

    let matches_path = dir.join("matches.csv");
    let mut truth_pairs: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(&matches_path).map_err(|e| io_err(&matches_path, e))?;
    for record in reader.deserialize() {
        let row: MatchRow = record.map_err(|e| io_err(&matches_path, e))?;
        truth_pairs
            .entry(row.dataset)
            .or_default()
            .push((row.source_attribute, row.target_attribute));
    }
    let raw_truths = datasets
        .iter()
        .map(|d| (d.id.clone(), truth_pairs.get(&d.id).cloned().unwrap_or_default()))
        .collect();

    assemble(datasets, raw_truths).map(|(b, _)| b)
}

#[derive(Deserialize)]
struct TableRow {
    table: String,
    #[serde(default)]
    description: String,
}

#[derive(Deserialize)]
struct AttributeRow {
    table: String,
    attribute: String,
    #[serde(default)]
    description: String,
}

#[derive(Deserialize)]
struct DatasetRow {
    dataset: String,
    source_table: String,
    target_table: String,
}

#[derive(Deserialize)]
struct MatchRow {
    dataset: String,
    source_attribute: String,
    target_attribute: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(table: &str, names: &[&str]) -> Schema {
        Schema {
            table_name: table.to_string(),
            description: String::new(),
            attributes: names
                .iter()
                .map(|n| Attribute {
                    name: n.to_string(),
                    description: String::new(),
                })
                .collect(),
        }
    }

    fn toy_benchmark() -> Benchmark {
        let d = Dataset {
            id: "Toy".into(),
            source: schema("s", &["a1", "a2"]),
            target: schema("t", &["b1", "b2", "b3"]),
        };
        let truth = GroundTruth {
            dataset_id: "Toy".into(),
            matches: BTreeSet::from([Pair::new("a1", "b1")]),
        };
        Benchmark {
            datasets: vec![d],
            truths: vec![truth],
        }
    }

    #[test]
    fn pair_space_is_source_major_cartesian_product() {
        let b = toy_benchmark();
        let pairs = b.datasets[0].pair_space();
        assert_eq!(pairs.len(), 6);
        assert_eq!(pairs[0], Pair::new("a1", "b1"));
        assert_eq!(pairs[1], Pair::new("a1", "b2"));
        assert_eq!(pairs[2], Pair::new("a1", "b3"));
        assert_eq!(pairs[3], Pair::new("a2", "b1"));
    }

    #[test]
    fn validate_passes_on_well_formed_benchmark() {
        assert!(validate_benchmark(&toy_benchmark()).is_empty());
    }

    #[test]
    fn validate_flags_case_folded_duplicate_attribute() {
        let mut b = toy_benchmark();
        b.datasets[0].source.attributes.push(Attribute {
            name: "A1".into(),
            description: String::new(),
        });
        let diags = validate_benchmark(&b);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("duplicates"));
    }

    #[test]
    fn validate_flags_truth_outside_pair_space() {
        let mut b = toy_benchmark();
        b.truths[0].matches.insert(Pair::new("a1", "xyz"));
        let diags = validate_benchmark(&b);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("outside"));
    }

    #[test]
    fn load_rejects_truth_naming_unknown_attribute() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = serde_json::json!({
            "datasets": [{
                "id": "Toy",
                "source": {"table": "s", "attributes": [{"name": "a1"}]},
                "target": {"table": "t", "attributes": [{"name": "b1"}]},
            }],
            "truth": [{"dataset": "Toy", "matches": [["a1", "xyz"]]}],
        });
        let path = dir.path().join("benchmark.json");
        fs::write(&path, manifest.to_string()).unwrap();
        match load_benchmark(&path) {
            Err(BenchmarkError::TruthError(msg)) => assert!(msg.contains("xyz")),
            other => panic!("expected TruthError, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_empty_schema() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = serde_json::json!({
            "datasets": [{
                "id": "Toy",
                "source": {"table": "s", "attributes": []},
                "target": {"table": "t", "attributes": [{"name": "b1"}]},
            }],
            "truth": [{"dataset": "Toy", "matches": []}],
        });
        let path = dir.path().join("benchmark.json");
        fs::write(&path, manifest.to_string()).unwrap();
        assert!(matches!(
            load_benchmark(&path),
            Err(BenchmarkError::SchemaError(_))
        ));
    }

    #[test]
    fn load_deduplicates_truth_pairs_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = serde_json::json!({
            "datasets": [{
                "id": "Toy",
                "source": {"table": "s", "attributes": [{"name": "a1"}]},
                "target": {"table": "t", "attributes": [{"name": "b1"}]},
            }],
            "truth": [{"dataset": "Toy", "matches": [["a1", "b1"], ["A1", "B1"]]}],
        });
        let path = dir.path().join("benchmark.json");
        fs::write(&path, manifest.to_string()).unwrap();
        let (b, diags) = load_benchmark_with_diagnostics(&path).unwrap();
        assert_eq!(b.truths[0].matches.len(), 1);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("duplicated"));
    }

    #[test]
    fn truth_names_are_normalized_to_schema_spelling() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = serde_json::json!({
            "datasets": [{
                "id": "Toy",
                "source": {"table": "s", "attributes": [{"name": "Gender"}]},
                "target": {"table": "t", "attributes": [{"name": "gender_source_value"}]},
            }],
            "truth": [{"dataset": "Toy", "matches": [["gender", "GENDER_SOURCE_VALUE"]]}],
        });
        let path = dir.path().join("benchmark.json");
        fs::write(&path, manifest.to_string()).unwrap();
        let b = load_benchmark(&path).unwrap();
        let pair = b.truths[0].matches.iter().next().unwrap();
        assert_eq!(pair.source, "Gender");
        assert_eq!(pair.target, "gender_source_value");
    }

    #[test]
    fn missing_manifest_reports_not_found() {
        assert!(matches!(
            load_benchmark("/nonexistent/nowhere"),
            Err(BenchmarkError::ManifestNotFound(_))
        ));
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let b = toy_benchmark();
        let path = dir.path().join("benchmark.json");
        save_benchmark(&b, &path).unwrap();
        let reloaded = load_benchmark(&path).unwrap();
        assert_eq!(b, reloaded);
    }
}
