//! Experiment orchestration.
//!
//! One experiment fixes (dataset, scope, model, run): every job's prompt is
//! sent a configured number of times (default three), each completion is
//! parsed into votes, and the per-pair majority becomes one Matching over
//! the full pair space. A suite repeats that for every dataset, scope and
//! run index. Completions go through the response store first, so an
//! interrupted suite resumes without repeating live requests.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::{Benchmark, Dataset, Pair};
use crate::llm::{
    Backend, CompletionRequest, LlmError, Message, RawResponse, RequestContext, ResponseKey,
    ResponseStore, SamplingParams, StoreError,
};
use crate::parse::{extract_json, majority, to_votes, VoteSet, VoteValue};
use crate::prompt::{build_jobs, expected_pairs, PromptJob, PromptTemplate, TaskScope, TemplateError};

/// A tri-partition of a dataset's pair space: predicted matches (yes),
/// predicted non-matches (no), and the undecided remainder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    pub dataset_id: String,
    pub yes: BTreeSet<Pair>,
    pub no: BTreeSet<Pair>,
}

impl Matching {
    pub fn empty(dataset_id: impl Into<String>) -> Matching {
        Matching {
            dataset_id: dataset_id.into(),
            yes: BTreeSet::new(),
            no: BTreeSet::new(),
        }
    }

    /// Pairs of the dataset neither predicted yes nor no.
    pub fn unknown(&self, d: &Dataset) -> BTreeSet<Pair> {
        d.pair_space()
            .into_iter()
            .filter(|p| !self.yes.contains(p) && !self.no.contains(p))
            .collect()
    }
}

/// One experiment's outcome: the matching plus the raw vote tuples it was
/// decided from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentRecord {
    pub dataset_id: String,
    pub scope: TaskScope,
    pub model: String,
    pub run_index: usize,
    pub matching: Matching,
    pub votes: BTreeMap<Pair, Vec<VoteValue>>,
}

impl ExperimentRecord {
    /// True when the stored matching equals the majority of the stored
    /// votes for every pair.
    pub fn is_consistent(&self) -> bool {
        self.votes.iter().all(|(pair, votes)| {
            let decided = majority(votes);
            match decided {
                VoteValue::Yes => self.matching.yes.contains(pair) && !self.matching.no.contains(pair),
                VoteValue::No => self.matching.no.contains(pair) && !self.matching.yes.contains(pair),
                VoteValue::Unknown => {
                    !self.matching.yes.contains(pair) && !self.matching.no.contains(pair)
                }
            }
        })
    }
}

#[derive(Serialize, Deserialize)]
struct RecordPair {
    source: String,
    target: String,
    votes: Vec<VoteValue>,
    decision: VoteValue,
}

#[derive(Serialize, Deserialize)]
struct RecordDoc {
    dataset: String,
    scope: TaskScope,
    model: String,
    run: usize,
    pairs: Vec<RecordPair>,
}

impl Serialize for ExperimentRecord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs = self
            .votes
            .iter()
            .map(|(pair, votes)| RecordPair {
                source: pair.source.clone(),
                target: pair.target.clone(),
                votes: votes.clone(),
                decision: majority(votes),
            })
            .collect();
        RecordDoc {
            dataset: self.dataset_id.clone(),
            scope: self.scope,
            model: self.model.clone(),
            run: self.run_index,
            pairs,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExperimentRecord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = RecordDoc::deserialize(deserializer)?;
        let mut matching = Matching::empty(doc.dataset.clone());
        let mut votes = BTreeMap::new();
        for p in doc.pairs {
            let pair = Pair::new(p.source, p.target);
            match p.decision {
                VoteValue::Yes => {
                    matching.yes.insert(pair.clone());
                }
                VoteValue::No => {
                    matching.no.insert(pair.clone());
                }
                VoteValue::Unknown => {}
            }
            votes.insert(pair, p.votes);
        }
        Ok(ExperimentRecord {
            dataset_id: doc.dataset,
            scope: doc.scope,
            model: doc.model,
            run_index: doc.run,
            matching,
            votes,
        })
    }
}

/// Knobs of a full suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub scopes: Vec<TaskScope>,
    pub model: String,
    pub runs: usize,
    pub votes: usize,
    pub concurrency: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            scopes: TaskScope::ALL.to_vec(),
            model: "gpt-3.5-turbo-0125".into(),
            runs: 5,
            votes: 3,
            concurrency: 4,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.runs < 1 {
            return Err(ExperimentError::InvalidConfig("runs must be at least 1".into()));
        }
        if self.votes < 1 || self.votes % 2 == 0 {
            return Err(ExperimentError::InvalidConfig(format!(
                "votes must be odd and at least 1, got {}",
                self.votes
            )));
        }
        if self.concurrency < 1 {
            return Err(ExperimentError::InvalidConfig(
                "concurrency must be at least 1".into(),
            ));
        }
        if self.scopes.is_empty() {
            return Err(ExperimentError::InvalidConfig(
                "at least one task scope is required".into(),
            ));
        }
        if self.model.is_empty() {
            return Err(ExperimentError::InvalidConfig("model must be non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("invalid suite configuration: {0}")]
    InvalidConfig(String),
    #[error("benchmark has no dataset {0:?}")]
    UnknownDataset(String),
    #[error("failed to persist {path}: {source}")]
    Persist {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

/// Everything an experiment needs, borrowed in one place.
pub struct Harness<'a> {
    pub benchmark: &'a Benchmark,
    pub backend: &'a dyn Backend,
    pub store: &'a ResponseStore,
    pub template: &'a PromptTemplate,
    pub config: &'a SuiteConfig,
}

impl Harness<'_> {
    /// Run one (dataset, scope, run) experiment: obtain `votes` completions
    /// per job (store-first), majority-vote per pair, persist the parsed
    /// votes and the record next to the raw responses.
    pub fn run_experiment(
        &self,
        dataset_id: &str,
        scope: TaskScope,
        run_index: usize,
    ) -> Result<ExperimentRecord, ExperimentError> {
        self.config.validate()?;
        let dataset = self
            .benchmark
            .dataset(dataset_id)
            .ok_or_else(|| ExperimentError::UnknownDataset(dataset_id.to_string()))?;
        let jobs = build_jobs(dataset, scope);
        let texts = self.obtain_all(&jobs, scope, run_index)?;
        let record = assemble_record(
            dataset,
            scope,
            &self.config.model,
            run_index,
            self.config.votes,
            &jobs,
            &texts,
        );
        self.persist(&record, &jobs, &texts)?;
        Ok(record)
    }

    /// Run every (dataset, scope, run) combination of the config, in
    /// deterministic order.
    pub fn run_suite(&self) -> Result<Vec<ExperimentRecord>, ExperimentError> {
        self.config.validate()?;
        let mut records = Vec::new();
        for dataset in &self.benchmark.datasets {
            for &scope in &self.config.scopes {
                for run_index in 1..=self.config.runs {
                    records.push(self.run_experiment(&dataset.id, scope, run_index)?);
                }
            }
        }
        Ok(records)
    }

    /// Fetch all (job, vote) completions, store-first, fanning live calls
    /// out over the configured worker count. Everything obtained before an
    /// error is already persisted in the store.
    fn obtain_all(
        &self,
        jobs: &[PromptJob],
        scope: TaskScope,
        run_index: usize,
    ) -> Result<BTreeMap<(usize, usize), String>, ExperimentError> {
        struct Task {
            order: usize,
            job: PromptJob,
            prompt: String,
            vote_index: usize,
        }

        let mut tasks = Vec::new();
        for job in jobs {
            // All votes for one job reuse the identical prompt string.
            let prompt = self.template.render(job, self.benchmark)?;
            for vote_index in 1..=self.config.votes {
                tasks.push(Task {
                    order: tasks.len(),
                    job: job.clone(),
                    prompt: prompt.clone(),
                    vote_index,
                });
            }
        }

        let queue = Mutex::new(VecDeque::from(tasks));
        let results: Mutex<BTreeMap<(usize, usize), String>> = Mutex::new(BTreeMap::new());
        let first_error: Mutex<Option<(usize, ExperimentError)>> = Mutex::new(None);

        let obtain = |task: &Task| -> Result<String, ExperimentError> {
            let key = ResponseKey {
                dataset_id: task.job.dataset_id.clone(),
                scope,
                model: self.config.model.clone(),
                run_index,
                vote_index: task.vote_index,
                job_index: task.job.job_index,
            };
            if let Some(hit) = self.store.get(&key)? {
                return Ok(hit.text);
            }
            let request = CompletionRequest {
                model: self.config.model.clone(),
                messages: vec![Message::user(task.prompt.clone())],
                params: SamplingParams::default(),
                context: RequestContext {
                    job: task.job.clone(),
                    run_index,
                    vote_index: task.vote_index,
                },
            };
            let completion = self.backend.complete(&request)?;
            self.store
                .put(&RawResponse::new(key, completion.text.clone(), completion.token_usage))?;
            Ok(completion.text)
        };

        std::thread::scope(|s| {
            for _ in 0..self.config.concurrency {
                s.spawn(|| loop {
                    let Some(task) = queue.lock().expect("queue lock").pop_front() else {
                        break;
                    };
                    if first_error.lock().expect("error lock").is_some() {
                        break;
                    }
                    match obtain(&task) {
                        Ok(text) => {
                            results
                                .lock()
                                .expect("results lock")
                                .insert((task.job.job_index, task.vote_index), text);
                        }
                        Err(e) => {
                            let mut slot = first_error.lock().expect("error lock");
                            // Keep the earliest task's error so the outcome
                            // does not depend on worker scheduling.
                            if slot.as_ref().is_none_or(|(o, _)| task.order < *o) {
                                *slot = Some((task.order, e));
                            }
                        }
                    }
                });
            }
        });

        if let Some((_, e)) = first_error.into_inner().expect("error lock") {
            return Err(e);
        }
        Ok(results.into_inner().expect("results lock"))
    }

    /// Write `run<k>.votes.jsonl` (parsed votes) and `run<k>.record.json`
    /// (the matching) next to the raw responses.
    fn persist(
        &self,
        record: &ExperimentRecord,
        jobs: &[PromptJob],
        texts: &BTreeMap<(usize, usize), String>,
    ) -> Result<(), ExperimentError> {
        let run_file = self.store.run_file(
            &record.model,
            record.scope,
            &record.dataset_id,
            record.run_index,
        );
        let dir = run_file.parent().expect("run files live in a directory");
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Persist {
            path: dir.to_path_buf(),
            source,
        })?;

        let mut lines = String::new();
        for job in jobs {
            for vote_index in 1..=self.config.votes {
                let vote_set = parse_vote_set(
                    texts.get(&(job.job_index, vote_index)).map(String::as_str),
                    job,
                    record.run_index,
                    vote_index,
                );
                lines.push_str(&serde_json::to_string(&vote_set).expect("vote set serializes"));
                lines.push('\n');
            }
        }
        let votes_path = run_file.with_file_name(format!("run{}.votes.jsonl", record.run_index));
        fs::write(&votes_path, lines).map_err(|source| ExperimentError::Persist {
            path: votes_path.clone(),
            source,
        })?;

        let record_path = run_file.with_file_name(format!("run{}.record.json", record.run_index));
        let mut doc = serde_json::to_string_pretty(record).expect("record serializes");
        doc.push('\n');
        fs::write(&record_path, doc).map_err(|source| ExperimentError::Persist {
            path: record_path.clone(),
            source,
        })?;
        Ok(())
    }
}

/// Parse one completion into a vote set; any parse failure degrades to
/// all-Unknown votes with a diagnostic.
fn parse_vote_set(
    text: Option<&str>,
    job: &PromptJob,
    run_index: usize,
    vote_index: usize,
) -> VoteSet {
    let mut vote_set = match text.map(extract_json) {
        Some(Ok(value)) => to_votes(&value, job),
        Some(Err(e)) => {
            let mut vs = to_votes(&serde_json::Value::Null, job);
            vs.diagnostics = vec![e.to_string()];
            vs
        }
        None => {
            let mut vs = to_votes(&serde_json::Value::Null, job);
            vs.diagnostics = vec!["no completion was obtained for this job".to_string()];
            vs
        }
    };
    vote_set.provenance.run_index = run_index;
    vote_set.provenance.vote_index = vote_index;
    vote_set
}

/// Deterministically reduce raw completion texts to a record: parse each
/// (job, vote) text, collect per-pair vote tuples, majority-vote each pair.
pub fn assemble_record(
    dataset: &Dataset,
    scope: TaskScope,
    model: &str,
    run_index: usize,
    votes_per_job: usize,
    jobs: &[PromptJob],
    texts: &BTreeMap<(usize, usize), String>,
) -> ExperimentRecord {
    let mut votes: BTreeMap<Pair, Vec<VoteValue>> = BTreeMap::new();
    for job in jobs {
        let sets: Vec<VoteSet> = (1..=votes_per_job)
            .map(|vote_index| {
                parse_vote_set(
                    texts.get(&(job.job_index, vote_index)).map(String::as_str),
                    job,
                    run_index,
                    vote_index,
                )
            })
            .collect();
        for pair in expected_pairs(job) {
            let tuple: Vec<VoteValue> = sets
                .iter()
                .map(|s| s.votes.get(&pair).copied().unwrap_or(VoteValue::Unknown))
                .collect();
            votes.insert(pair, tuple);
        }
    }

    let mut matching = Matching::empty(&dataset.id);
    for (pair, tuple) in &votes {
        match majority(tuple) {
            VoteValue::Yes => {
                matching.yes.insert(pair.clone());
            }
            VoteValue::No => {
                matching.no.insert(pair.clone());
            }
            VoteValue::Unknown => {}
        }
    }

    ExperimentRecord {
        dataset_id: dataset.id.clone(),
        scope,
        model: model.to_string(),
        run_index,
        matching,
        votes,
    }
}

/// Rebuild a matching purely from stored raw responses. Equality with the
/// originally persisted record verifies record integrity.
pub fn replay(
    store: &ResponseStore,
    benchmark: &Benchmark,
    model: &str,
    scope: TaskScope,
    dataset_id: &str,
    run_index: usize,
    votes_per_job: usize,
) -> Result<ExperimentRecord, ExperimentError> {
    let dataset = benchmark
        .dataset(dataset_id)
        .ok_or_else(|| ExperimentError::UnknownDataset(dataset_id.to_string()))?;
    let jobs = build_jobs(dataset, scope);
    let mut texts = BTreeMap::new();
    for response in store.load_run(model, scope, dataset_id, run_index)? {
        texts.insert(
            (response.key.job_index, response.key.vote_index),
            response.text,
        );
    }
    Ok(assemble_record(
        dataset,
        scope,
        model,
        run_index,
        votes_per_job,
        &jobs,
        &texts,
    ))
}
