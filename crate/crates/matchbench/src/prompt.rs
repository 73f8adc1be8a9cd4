//! Prompt jobs and template rendering.
//!
//! A task scope fixes how much of the two schemas one prompt carries. Each
//! dataset is cut into jobs accordingly; together the jobs of one scope
//! cover the dataset's pair space exactly once. Rendering fills a template
//! with four sections: an introduction with the matcher persona and the
//! match definition, source and target schema information, and a task
//! description with a step-by-step instruction and a JSON answer schema.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::{Benchmark, Dataset, Pair, Schema};

/// How many source and target attributes a single prompt covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskScope {
    #[serde(rename = "1-to-1")]
    OneToOne,
    #[serde(rename = "1-to-n")]
    OneToN,
    #[serde(rename = "n-to-1")]
    NToOne,
    #[serde(rename = "n-to-m")]
    NToM,
}

impl TaskScope {
    pub const ALL: [TaskScope; 4] = [
        TaskScope::OneToOne,
        TaskScope::OneToN,
        TaskScope::NToOne,
        TaskScope::NToM,
    ];
}

impl fmt::Display for TaskScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TaskScope::OneToOne => "1-to-1",
            TaskScope::OneToN => "1-to-n",
            TaskScope::NToOne => "n-to-1",
            TaskScope::NToM => "n-to-m",
        };
        f.write_str(name)
    }
}

impl FromStr for TaskScope {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().replace('_', "-").as_str() {
            "1-to-1" | "1to1" | "one-to-one" => Ok(TaskScope::OneToOne),
            "1-to-n" | "1ton" | "one-to-n" => Ok(TaskScope::OneToN),
            "n-to-1" | "nto1" | "n-to-one" => Ok(TaskScope::NToOne),
            "n-to-m" | "ntom" => Ok(TaskScope::NToM),
            other => Err(TemplateError::UnknownScope(other.to_string())),
        }
    }
}

/// One prompt's worth of work: the attributes it asks about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptJob {
    pub dataset_id: String,
    pub scope: TaskScope,
    pub source_attrs: Vec<String>,
    pub target_attrs: Vec<String>,
    pub job_index: usize,
}

/// Cut a dataset into jobs for the scope, ordered by schema attribute
/// order. Job counts: |S|·|T| for 1-to-1, |S| for 1-to-n, |T| for n-to-1,
/// one for n-to-m.
pub fn build_jobs(d: &Dataset, scope: TaskScope) -> Vec<PromptJob> {
    let sources: Vec<String> = d.source.attributes.iter().map(|a| a.name.clone()).collect();
    let targets: Vec<String> = d.target.attributes.iter().map(|a| a.name.clone()).collect();
    let job = |job_index, source_attrs, target_attrs| PromptJob {
        dataset_id: d.id.clone(),
        scope,
        source_attrs,
        target_attrs,
        job_index,
    };
    match scope {
        TaskScope::OneToOne => sources
            .iter()
            .flat_map(|s| targets.iter().map(move |t| (s.clone(), t.clone())))
            .enumerate()
            .map(|(i, (s, t))| job(i, vec![s], vec![t]))
            .collect(),
        TaskScope::OneToN => sources
            .iter()
            .enumerate()
            .map(|(i, s)| job(i, vec![s.clone()], targets.clone()))
            .collect(),
        TaskScope::NToOne => targets
            .iter()
            .enumerate()
            .map(|(i, t)| job(i, sources.clone(), vec![t.clone()]))
            .collect(),
        TaskScope::NToM => vec![job(0, sources, targets)],
    }
}

/// The pairs a response to this job is expected to vote on: the cartesian
/// product of its source and target attributes, source-major.
pub fn expected_pairs(job: &PromptJob) -> Vec<Pair> {
    job.source_attrs
        .iter()
        .flat_map(|s| job.target_attrs.iter().map(move |t| Pair::new(s, t)))
        .collect()
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("failed to read template: {0}")]
    Io(#[from] std::io::Error),
    #[error("template lacks required placeholder {{{{{0}}}}}")]
    MissingPlaceholder(String),
    #[error("template uses unknown placeholder {{{{{0}}}}}")]
    UnknownPlaceholder(String),
    #[error("job references unknown dataset {0:?}")]
    UnknownDataset(String),
    #[error("job references attribute {name:?} missing from dataset {dataset:?}")]
    UnknownAttribute { dataset: String, name: String },
    #[error("unknown task scope {0:?} (expected 1-to-1, 1-to-n, n-to-1 or n-to-m)")]
    UnknownScope(String),
}

/// The definition of a valid 1:1 match, substituted for `{{definition}}`.
pub const MATCH_DEFINITION: &str = "Two attributes form a valid 1:1 match \
if there exists an invertible function that maps the values of the source \
attribute to the values of the target attribute.";

/// Chain-of-thought cue required in every task description, verbatim.
pub const STEP_BY_STEP: &str = "Lets think step by step";

const DEFAULT_TEMPLATE: &str = include_str!("../templates/default.tmpl");

const REQUIRED_PLACEHOLDERS: [&str; 5] = [
    "source_table",
    "source_attributes",
    "target_table",
    "target_attributes",
    "output_schema",
];

const KNOWN_PLACEHOLDERS: [&str; 8] = [
    "source_table",
    "source_description",
    "source_attributes",
    "target_table",
    "target_description",
    "target_attributes",
    "definition",
    "output_schema",
];

/// Prompt text with `{{placeholder}}` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::from_text(DEFAULT_TEMPLATE).expect("bundled template is valid")
    }
}

impl PromptTemplate {
    pub fn from_text(text: &str) -> Result<Self, TemplateError> {
        for name in REQUIRED_PLACEHOLDERS {
            if !text.contains(&format!("{{{{{name}}}}}")) {
                return Err(TemplateError::MissingPlaceholder(name.to_string()));
            }
        }
        if let Some(unknown) = placeholders(text)
            .into_iter()
            .find(|p| !KNOWN_PLACEHOLDERS.contains(&p.as_str()))
        {
            return Err(TemplateError::UnknownPlaceholder(unknown));
        }
        Ok(PromptTemplate {
            text: text.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, TemplateError> {
        PromptTemplate::from_text(&std::fs::read_to_string(path)?)
    }

    /// Fill the template for one job. Deterministic: identical inputs give
    /// byte-identical text.
    pub fn render(&self, job: &PromptJob, b: &Benchmark) -> Result<String, TemplateError> {
        let dataset = b
            .dataset(&job.dataset_id)
            .ok_or_else(|| TemplateError::UnknownDataset(job.dataset_id.clone()))?;
        let source_attrs = attribute_block(&dataset.source, &job.source_attrs, &job.dataset_id)?;
        let target_attrs = attribute_block(&dataset.target, &job.target_attrs, &job.dataset_id)?;
        let fill = |text: String, name: &str, value: &str| {
            text.replace(&format!("{{{{{name}}}}}"), value)
        };
        let mut text = self.text.clone();
        text = fill(text, "source_table", &dataset.source.table_name);
        text = fill(text, "source_description", &describe(&dataset.source.description));
        text = fill(text, "source_attributes", &source_attrs);
        text = fill(text, "target_table", &dataset.target.table_name);
        text = fill(text, "target_description", &describe(&dataset.target.description));
        text = fill(text, "target_attributes", &target_attrs);
        text = fill(text, "definition", MATCH_DEFINITION);
        text = fill(text, "output_schema", output_schema(job.scope));
        Ok(text)
    }
}

fn placeholders(text: &str) -> Vec<String> {
    let mut found = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        rest = &rest[start + 2..];
        if let Some(end) = rest.find("}}") {
            found.push(rest[..end].to_string());
            rest = &rest[end + 2..];
        } else {
            break;
        }
    }
    found
}

fn describe(description: &str) -> String {
    if description.trim().is_empty() {
        "(no description)".to_string()
    } else {
        description.to_string()
    }
}

/// `- name: description` lines for the job's slice of one schema.
fn attribute_block(
    schema: &Schema,
    names: &[String],
    dataset_id: &str,
) -> Result<String, TemplateError> {
    let mut lines = Vec::with_capacity(names.len());
    for name in names {
        let attr = schema
            .attribute(name)
            .ok_or_else(|| TemplateError::UnknownAttribute {
                dataset: dataset_id.to_string(),
                name: name.clone(),
            })?;
        lines.push(format!("- {}: {}", attr.name, describe(&attr.description)));
    }
    Ok(lines.join("\n"))
}

/// The JSON answer instruction for a scope: a single answer for 1-to-1, an
/// answer per named attribute for 1-to-n and n-to-1, and an answer per
/// (source, target) pair for n-to-m.
pub fn output_schema(scope: TaskScope) -> &'static str {
    match scope {
        TaskScope::OneToOne => {
            "Respond with a JSON object of the form \
             {\"answer\": \"yes\" | \"no\" | \"unknown\"}."
        }
        TaskScope::OneToN => {
            "Respond with a JSON object of the form \
             {\"matches\": [{\"target\": \"<target attribute name>\", \
             \"answer\": \"yes\" | \"no\" | \"unknown\"}, ...]} \
             with one entry per target attribute."
        }
        TaskScope::NToOne => {
            "Respond with a JSON object of the form \
             {\"matches\": [{\"source\": \"<source attribute name>\", \
             \"answer\": \"yes\" | \"no\" | \"unknown\"}, ...]} \
             with one entry per source attribute."
        }
        TaskScope::NToM => {
            "Respond with a JSON object of the form \
             {\"matches\": [{\"source\": \"<source attribute name>\", \
             \"target\": \"<target attribute name>\", \
             \"answer\": \"yes\" | \"no\" | \"unknown\"}, ...]} \
             with one entry per pair of a source and a target attribute."
        }
    }
}
