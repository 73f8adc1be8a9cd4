//! Vote extraction from model output.
//!
//! Completions mix chain-of-thought prose with a JSON payload. Extraction
//! first tries fenced code blocks, then an outermost balanced `{...}` or
//! `[...]` scan. The payload is then normalized into one vote per expected
//! pair of the job; anything missing, unrecognized or malformed degrades to
//! `Unknown`, never to an error.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::benchmark::Pair;
use crate::prompt::{expected_pairs, PromptJob, TaskScope};

/// Three-step answer scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoteValue {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for VoteValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            VoteValue::Yes => "yes",
            VoteValue::No => "no",
            VoteValue::Unknown => "unknown",
        };
        f.write_str(name)
    }
}

impl VoteValue {
    /// Case-insensitive token normalization; anything off-scale is Unknown.
    pub fn from_token(token: &str) -> VoteValue {
        match token.trim().to_lowercase().as_str() {
            "yes" => VoteValue::Yes,
            "no" => VoteValue::No,
            _ => VoteValue::Unknown,
        }
    }
}

/// Where a vote set came from within an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub run_index: usize,
    pub vote_index: usize,
    pub job_index: usize,
}

/// One response's votes over the expected pairs of its job. Pairs absent
/// from `votes` are semantically Unknown; `to_votes` materializes them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteSet {
    pub dataset_id: String,
    pub votes: BTreeMap<Pair, VoteValue>,
    pub provenance: Provenance,
    pub diagnostics: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct VoteEntry {
    source: String,
    target: String,
    answer: VoteValue,
}

#[derive(Serialize, Deserialize)]
struct VoteSetDoc {
    dataset: String,
    #[serde(flatten)]
    provenance: Provenance,
    votes: Vec<VoteEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    diagnostics: Vec<String>,
}

impl Serialize for VoteSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        VoteSetDoc {
            dataset: self.dataset_id.clone(),
            provenance: self.provenance,
            votes: self
                .votes
                .iter()
                .map(|(pair, &answer)| VoteEntry {
                    source: pair.source.clone(),
                    target: pair.target.clone(),
                    answer,
                })
                .collect(),
            diagnostics: self.diagnostics.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VoteSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = VoteSetDoc::deserialize(deserializer)?;
        Ok(VoteSet {
            dataset_id: doc.dataset,
            votes: doc
                .votes
                .into_iter()
                .map(|e| (Pair::new(e.source, e.target), e.answer))
                .collect(),
            provenance: doc.provenance,
            diagnostics: doc.diagnostics,
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("no JSON payload found in completion text")]
    NoJsonFound,
    #[error("completion text contains JSON-like regions but none parse")]
    MalformedJson,
}

/// Pull the first parseable JSON value out of free-form completion text.
///
/// Fenced code blocks are tried first, then every outermost balanced
/// `{...}`/`[...]` region in order of appearance. Prose around the payload
/// is ignored. `NoJsonFound` means no candidate region existed at all;
/// `MalformedJson` means candidates existed but none parsed.
pub fn extract_json(text: &str) -> Result<Value, ParseError> {
    let mut saw_candidate = false;
    for block in fenced_blocks(text) {
        saw_candidate = true;
        if let Ok(v) = serde_json::from_str::<Value>(block.trim()) {
            return Ok(v);
        }
        // A fence may wrap prose around the payload; scan inside it too.
        if let Some(v) = scan_balanced(block) {
            return Ok(v);
        }
    }
    if let Some(v) = scan_balanced(text) {
        return Ok(v);
    }
    if saw_candidate || text.contains(['{', '[']) {
        Err(ParseError::MalformedJson)
    } else {
        Err(ParseError::NoJsonFound)
    }
}

/// Contents of every ``` fenced block, language tags stripped.
fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let Some(close) = after.find("```") else { break };
        let mut body = &after[..close];
        if let Some(eol) = body.find('\n') {
            // Drop a language tag such as ```json.
            let first = body[..eol].trim();
            if !first.is_empty() && !first.contains(['{', '[']) {
                body = &body[eol + 1..];
            }
        }
        blocks.push(body);
        rest = &after[close + 3..];
    }
    blocks
}

/// Try every outermost balanced brace/bracket region, string-aware.
fn scan_balanced(text: &str) -> Option<Value> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let open = bytes[i];
        if open != b'{' && open != b'[' {
            i += 1;
            continue;
        }
        match balanced_end(bytes, i) {
            Some(end) => {
                if let Ok(v) = serde_json::from_str::<Value>(&text[i..=end]) {
                    return Some(v);
                }
                i += 1;
            }
            None => i += 1,
        }
    }
    None
}

/// Index of the close matching the opener at `start`, honoring strings.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' | b'[' => depth += 1,
            b'}' | b']' => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return Some(start + offset);
                }
            }
            _ => {}
        }
    }
    None
}

/// Normalize an extracted JSON value into one vote per expected pair.
///
/// Total by construction: entries naming attributes outside the job are
/// dropped with a diagnostic, duplicate entries keep the last occurrence
/// with a diagnostic, off-scale answers become Unknown, and expected pairs
/// the payload never mentions default to Unknown.
pub fn to_votes(value: &Value, job: &PromptJob) -> VoteSet {
    let expected = expected_pairs(job);
    let mut votes: BTreeMap<Pair, VoteValue> = expected
        .iter()
        .map(|p| (p.clone(), VoteValue::Unknown))
        .collect();
    let mut diagnostics = Vec::new();

    let mut seen: BTreeMap<Pair, usize> = BTreeMap::new();
    for (pair, answer) in payload_entries(value, job, &mut diagnostics) {
        match resolve_pair(&pair, &expected) {
            Some(resolved) => {
                let count = seen.entry(resolved.clone()).or_insert(0);
                *count += 1;
                if *count > 1 {
                    diagnostics.push(format!(
                        "duplicate entry for {resolved}; keeping the last answer"
                    ));
                }
                votes.insert(resolved, answer);
            }
            None => diagnostics.push(format!(
                "dropped entry for {pair}: not among the pairs this prompt asked about"
            )),
        }
    }

    VoteSet {
        dataset_id: job.dataset_id.clone(),
        votes,
        provenance: Provenance {
            job_index: job.job_index,
            ..Provenance::default()
        },
        diagnostics,
    }
}

/// Raw (pair, answer) claims found in the payload, before validation.
fn payload_entries(
    value: &Value,
    job: &PromptJob,
    diagnostics: &mut Vec<String>,
) -> Vec<(Pair, VoteValue)> {
    let mut entries = Vec::new();
    let single_source = (job.source_attrs.len() == 1).then(|| job.source_attrs[0].clone());
    let single_target = (job.target_attrs.len() == 1).then(|| job.target_attrs[0].clone());

    // A bare {"answer": ...} covers the job's only pair.
    if let Some(answer) = value.get("answer").and_then(Value::as_str) {
        if job.scope == TaskScope::OneToOne || (single_source.is_some() && single_target.is_some())
        {
            entries.push((
                Pair::new(
                    job.source_attrs[0].clone(),
                    job.target_attrs[0].clone(),
                ),
                VoteValue::from_token(answer),
            ));
            return entries;
        }
    }

    let Some(matches) = value.get("matches").and_then(Value::as_array) else {
        if !entries.is_empty() {
            return entries;
        }
        diagnostics.push("payload has neither an \"answer\" nor a \"matches\" key".to_string());
        return entries;
    };

    for m in matches {
        let source = m
            .get("source")
            .and_then(Value::as_str)
            .map(str::to_string)
            .or_else(|| single_source.clone());
        let target = m
            .get("target")
            .and_then(Value::as_str)
            .map(str::to_string)
            .or_else(|| single_target.clone());
        let answer = m
            .get("answer")
            .and_then(Value::as_str)
            .map(VoteValue::from_token)
            .unwrap_or(VoteValue::Unknown);
        match (source, target) {
            (Some(s), Some(t)) => entries.push((Pair::new(s, t), answer)),
            _ => diagnostics.push(format!(
                "dropped entry {m}: does not name both sides of a pair"
            )),
        }
    }
    entries
}

/// Case-insensitive lookup of a claimed pair among the expected pairs,
/// returning the expected spelling.
fn resolve_pair(claimed: &Pair, expected: &[Pair]) -> Option<Pair> {
    let (s, t) = (claimed.source.to_lowercase(), claimed.target.to_lowercase());
    expected
        .iter()
        .find(|p| p.source.to_lowercase() == s && p.target.to_lowercase() == t)
        .cloned()
}

/// Majority over an odd number of votes: the answer held by strictly more
/// than half, Unknown on a split.
pub fn majority(votes: &[VoteValue]) -> VoteValue {
    let yes = votes.iter().filter(|&&v| v == VoteValue::Yes).count();
    let no = votes.iter().filter(|&&v| v == VoteValue::No).count();
    if 2 * yes > votes.len() {
        VoteValue::Yes
    } else if 2 * no > votes.len() {
        VoteValue::No
    } else {
        VoteValue::Unknown
    }
}
