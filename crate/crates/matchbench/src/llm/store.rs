//! Append-only raw-response store.
//!
//! One JSON-Lines file per (model, scope, dataset, run) holds every
//! completion obtained for that run, keyed by vote and job index. Existing
//! keys are never overwritten, so a populated store lets a suite resume
//! without repeating live requests, and raw text can be re-parsed later.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::TaskScope;

/// Unique identity of one completion within a store.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResponseKey {
    pub dataset_id: String,
    pub scope: TaskScope,
    pub model: String,
    pub run_index: usize,
    pub vote_index: usize,
    pub job_index: usize,
}

/// A stored completion: the verbatim text plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawResponse {
    pub key: ResponseKey,
    pub text: String,
    /// Unix seconds at the time the completion was obtained.
    pub timestamp: u64,
    pub token_usage: Option<u64>,
}

impl RawResponse {
    pub fn new(key: ResponseKey, text: String, token_usage: Option<u64>) -> RawResponse {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RawResponse {
            key,
            text,
            timestamp,
            token_usage,
        }
    }
}

/// On-disk line format; the path already encodes model/scope/dataset/run,
/// but each line repeats them so files are self-describing.
#[derive(Serialize, Deserialize)]
struct ResponseLine {
    dataset: String,
    scope: TaskScope,
    model: String,
    run: usize,
    vote: usize,
    job: usize,
    text: String,
    timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    token_usage: Option<u64>,
}

impl From<&RawResponse> for ResponseLine {
    fn from(r: &RawResponse) -> ResponseLine {
        ResponseLine {
            dataset: r.key.dataset_id.clone(),
            scope: r.key.scope,
            model: r.key.model.clone(),
            run: r.key.run_index,
            vote: r.key.vote_index,
            job: r.key.job_index,
            text: r.text.clone(),
            timestamp: r.timestamp,
            token_usage: r.token_usage,
        }
    }
}

impl From<ResponseLine> for RawResponse {
    fn from(l: ResponseLine) -> RawResponse {
        RawResponse {
            key: ResponseKey {
                dataset_id: l.dataset,
                scope: l.scope,
                model: l.model,
                run_index: l.run,
                vote_index: l.vote,
                job_index: l.job,
            },
            text: l.text,
            timestamp: l.timestamp,
            token_usage: l.token_usage,
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O failure at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("store file {path} is corrupt at line {line}: {message}")]
    StoreCorrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// File-backed response store rooted at one directory.
///
/// Writes are serialized by an internal lock; a per-file key index keeps
/// duplicate detection cheap. First write wins for any key.
pub struct ResponseStore {
    root: PathBuf,
    index: Mutex<HashMap<PathBuf, HashSet<(usize, usize)>>>,
}

impl ResponseStore {
    pub fn open(root: impl Into<PathBuf>) -> ResponseStore {
        ResponseStore {
            root: root.into(),
            index: Mutex::new(HashMap::new()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `<root>/<model>/<scope>/<dataset>/run<k>.jsonl`
    pub fn run_file(&self, model: &str, scope: TaskScope, dataset: &str, run: usize) -> PathBuf {
        self.root
            .join(sanitize(model))
            .join(scope.to_string())
            .join(sanitize(dataset))
            .join(format!("run{run}.jsonl"))
    }

    fn key_file(&self, key: &ResponseKey) -> PathBuf {
        self.run_file(&key.model, key.scope, &key.dataset_id, key.run_index)
    }

    /// Append a response unless its key is already present.
    pub fn put(&self, response: &RawResponse) -> Result<(), StoreError> {
        let path = self.key_file(&response.key);
        let mut index = self.index.lock().expect("store lock");
        let keys = load_keys(&mut index, &path)?;
        let slot = (response.key.vote_index, response.key.job_index);
        if keys.contains(&slot) {
            return Ok(());
        }
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|source| StoreError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        let line = serde_json::to_string(&ResponseLine::from(response))
            .expect("response serializes");
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| StoreError::Io {
                path: path.clone(),
                source,
            })?;
        writeln!(file, "{line}").map_err(|source| StoreError::Io {
            path: path.clone(),
            source,
        })?;
        index.get_mut(&path).expect("indexed above").insert(slot);
        Ok(())
    }

    /// The stored response for a key, if any.
    pub fn get(&self, key: &ResponseKey) -> Result<Option<RawResponse>, StoreError> {
        let path = self.key_file(key);
        {
            let mut index = self.index.lock().expect("store lock");
            let keys = load_keys(&mut index, &path)?;
            if !keys.contains(&(key.vote_index, key.job_index)) {
                return Ok(None);
            }
        }
        // First occurrence wins, matching put's append-only semantics.
        Ok(read_lines(&path)?.into_iter().find(|r| r.key == *key))
    }

    /// Every stored response of one run file, in file order.
    pub fn load_run(
        &self,
        model: &str,
        scope: TaskScope,
        dataset: &str,
        run: usize,
    ) -> Result<Vec<RawResponse>, StoreError> {
        read_lines(&self.run_file(model, scope, dataset, run))
    }
}

fn load_keys<'a>(
    index: &'a mut HashMap<PathBuf, HashSet<(usize, usize)>>,
    path: &Path,
) -> Result<&'a mut HashSet<(usize, usize)>, StoreError> {
    if !index.contains_key(path) {
        let keys = read_lines(path)?
            .into_iter()
            .map(|r| (r.key.vote_index, r.key.job_index))
            .collect();
        index.insert(path.to_path_buf(), keys);
    }
    Ok(index.get_mut(path).expect("just inserted"))
}

fn read_lines(path: &Path) -> Result<Vec<RawResponse>, StoreError> {
    let content = match fs::read_to_string(path) {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(StoreError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let mut responses = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ResponseLine =
            serde_json::from_str(line).map_err(|e| StoreError::StoreCorrupt {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        responses.push(parsed.into());
    }
    Ok(responses)
}

fn sanitize(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "_".to_string()
    } else {
        cleaned
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn key(run: usize, vote: usize, job: usize) -> ResponseKey {
        ResponseKey {
            dataset_id: "Toy".into(),
            scope: TaskScope::OneToN,
            model: "gpt-test".into(),
            run_index: run,
            vote_index: vote,
            job_index: job,
        }
    }

    #[test]
    fn put_then_get_round_trips_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResponseStore::open(dir.path());
        let text = "prose then\n```json\n{\"answer\": \"yes\"}\n```";
        let response = RawResponse::new(key(1, 1, 0), text.into(), Some(42));
        store.put(&response).unwrap();
        let got = store.get(&key(1, 1, 0)).unwrap().unwrap();
        assert_eq!(got, response);
        assert_eq!(got.text, text);
    }

    #[test]
    fn absent_keys_read_back_as_none() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResponseStore::open(dir.path());
        assert_eq!(store.get(&key(1, 1, 0)).unwrap(), None);
    }

    #[test]
    fn first_write_wins_for_duplicate_keys() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResponseStore::open(dir.path());
        store
            .put(&RawResponse::new(key(1, 1, 0), "first".into(), None))
            .unwrap();
        store
            .put(&RawResponse::new(key(1, 1, 0), "second".into(), None))
            .unwrap();
        assert_eq!(store.get(&key(1, 1, 0)).unwrap().unwrap().text, "first");
        assert_eq!(store.load_run("gpt-test", TaskScope::OneToN, "Toy", 1).unwrap().len(), 1);
    }

    #[test]
    fn votes_are_cached_independently() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResponseStore::open(dir.path());
        for vote in 1..=3 {
            store
                .put(&RawResponse::new(key(1, vote, 0), format!("v{vote}"), None))
                .unwrap();
        }
        for vote in 1..=3 {
            assert_eq!(store.get(&key(1, vote, 0)).unwrap().unwrap().text, format!("v{vote}"));
        }
    }

    #[test]
    fn run_files_follow_the_model_scope_dataset_layout() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResponseStore::open(dir.path());
        store
            .put(&RawResponse::new(key(2, 1, 0), "x".into(), None))
            .unwrap();
        let expected = dir
            .path()
            .join("gpt-test")
            .join("1-to-n")
            .join("Toy")
            .join("run2.jsonl");
        assert!(expected.is_file(), "missing {expected:?}");
    }

    #[test]
    fn unruly_model_names_are_sanitized_in_paths() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResponseStore::open(dir.path());
        let mut k = key(1, 1, 0);
        k.model = "org/model:v1".into();
        store.put(&RawResponse::new(k.clone(), "x".into(), None)).unwrap();
        assert!(dir.path().join("org_model_v1").is_dir());
        assert_eq!(store.get(&k).unwrap().unwrap().text, "x");
    }

    #[test]
    fn corrupt_lines_are_reported_with_their_position() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResponseStore::open(dir.path());
        store
            .put(&RawResponse::new(key(1, 1, 0), "ok".into(), None))
            .unwrap();
        let path = store.run_file("gpt-test", TaskScope::OneToN, "Toy", 1);
        let mut content = fs::read_to_string(&path).unwrap();
        content.push_str("not json\n");
        fs::write(&path, content).unwrap();
        let fresh = ResponseStore::open(dir.path());
        match fresh.load_run("gpt-test", TaskScope::OneToN, "Toy", 1) {
            Err(StoreError::StoreCorrupt { line: 2, .. }) => {}
            other => panic!("expected StoreCorrupt at line 2, got {other:?}"),
        }
    }

    #[test]
    fn concurrent_puts_land_exactly_once_each() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(ResponseStore::open(dir.path()));
        let mut handles = Vec::new();
        for worker in 0..8 {
            let store = Arc::clone(&store);
            handles.push(std::thread::spawn(move || {
                for job in 0..20 {
                    let k = key(1, worker % 3 + 1, job);
                    store
                        .put(&RawResponse::new(k, format!("w{worker}-j{job}"), None))
                        .unwrap();
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        let all = store.load_run("gpt-test", TaskScope::OneToN, "Toy", 1).unwrap();
        assert_eq!(all.len(), 60, "3 votes x 20 jobs, no duplicates");
        let mut slots: Vec<(usize, usize)> = all
            .iter()
            .map(|r| (r.key.vote_index, r.key.job_index))
            .collect();
        slots.sort();
        slots.dedup();
        assert_eq!(slots.len(), 60);
    }
}
