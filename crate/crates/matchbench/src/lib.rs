//! Schema-matching toolkit and experiment harness.
//!
//! The crate matches attributes between pairs of relational schemas using
//! only names and natural-language descriptions. It provides:
//!
//! - benchmark loading and validation ([`benchmark`]),
//! - string-similarity baseline matchers with per-dataset threshold
//!   selection and PR-curve comparison ([`similarity`]),
//! - prompt construction for the four task scopes ([`prompt`]),
//! - an OpenAI-compatible completion client, a deterministic mock backend
//!   and a persistent raw-response store ([`llm`]),
//! - vote extraction from free-form model output and majority voting
//!   ([`parse`]),
//! - the experiment protocol: three votes per prompt, majority-voted into
//!   a matching, repeated over several runs ([`experiment`]),
//! - the metric suite: precision/recall/F1, decisiveness, consistency and
//!   method-combination analysis ([`eval`]), with CSV/Markdown reports
//!   ([`report`]).

pub mod benchmark;
pub mod eval;
pub mod experiment;
pub mod llm;
pub mod parse;
pub mod prompt;
pub mod report;
pub mod similarity;
