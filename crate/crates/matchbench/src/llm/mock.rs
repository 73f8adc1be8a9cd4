//! Deterministic completion backend for tests and offline runs.
//!
//! The oracle policy answers from the benchmark's ground truth, degraded
//! by seeded noise: each (pair, run, vote) slot draws stable uniforms from
//! a hash, flips the true answer when the flip draw falls below the flip
//! probability, and omits the pair when the omit draw falls below the omit
//! probability. Because the draws do not depend on the probabilities, the
//! set of flipped slots only grows as the flip probability grows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::benchmark::{Benchmark, Pair};
use crate::parse::VoteValue;
use crate::prompt::{expected_pairs, PromptJob, TaskScope};

use super::{Backend, Completion, CompletionRequest, LlmError};

#[derive(Debug, Clone, PartialEq)]
pub enum MockPolicy {
    /// Ground-truth answers with seeded flip/omit noise.
    Oracle {
        flip_prob: f64,
        omit_prob: f64,
        seed: u64,
    },
    /// Canned text per request slot, keyed by
    /// `dataset|scope|run<k>|vote<k>|job<k>`.
    Scripted(BTreeMap<String, String>),
    /// The same answer for every pair.
    Constant(VoteValue),
}

impl MockPolicy {
    pub fn perfect_oracle(seed: u64) -> MockPolicy {
        MockPolicy::Oracle {
            flip_prob: 0.0,
            omit_prob: 0.0,
            seed,
        }
    }
}

pub struct MockBackend {
    policy: MockPolicy,
    benchmark: Arc<Benchmark>,
}

/// Store-style identifier of one request slot, used by scripted policies.
pub fn script_key(req: &CompletionRequest) -> String {
    let c = &req.context;
    format!(
        "{}|{}|run{}|vote{}|job{}",
        c.job.dataset_id, c.job.scope, c.run_index, c.vote_index, c.job.job_index
    )
}

impl MockBackend {
    pub fn new(policy: MockPolicy, benchmark: Arc<Benchmark>) -> MockBackend {
        MockBackend { policy, benchmark }
    }

    fn oracle_answer(
        &self,
        req: &CompletionRequest,
        flip_prob: f64,
        omit_prob: f64,
        seed: u64,
    ) -> String {
        let job = &req.context.job;
        let truth = self.benchmark.truth(&job.dataset_id);
        render_response(job, |pair| {
            let slot = [
                req.model.as_str(),
                &job.dataset_id,
                &job.scope.to_string(),
                &req.context.run_index.to_string(),
                &req.context.vote_index.to_string(),
                &pair.source,
                &pair.target,
            ]
            .join("\u{1f}");
            if uniform(seed, "omit", &slot) < omit_prob {
                return None;
            }
            let correct = truth.is_some_and(|t| t.matches.contains(pair));
            let mut answer = if correct { VoteValue::Yes } else { VoteValue::No };
            if uniform(seed, "flip", &slot) < flip_prob {
                answer = match answer {
                    VoteValue::Yes => VoteValue::No,
                    VoteValue::No => VoteValue::Yes,
                    VoteValue::Unknown => VoteValue::Unknown,
                };
            }
            Some(answer)
        })
    }
}

impl Backend for MockBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, LlmError> {
        let text = match &self.policy {
            MockPolicy::Constant(v) => render_response(&req.context.job, |_| Some(*v)),
            MockPolicy::Scripted(map) => {
                let key = script_key(req);
                map.get(&key)
                    .cloned()
                    .ok_or(LlmError::NoScriptedResponse(key))?
            }
            MockPolicy::Oracle {
                flip_prob,
                omit_prob,
                seed,
            } => self.oracle_answer(req, *flip_prob, *omit_prob, *seed),
        };
        Ok(Completion {
            text,
            token_usage: None,
        })
    }
}

/// Stable uniform in `[0, 1)` from a hash of (seed, purpose, slot).
fn uniform(seed: u64, purpose: &str, slot: &str) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_be_bytes());
    hasher.update([0x1f]);
    hasher.update(purpose.as_bytes());
    hasher.update([0x1f]);
    hasher.update(slot.as_bytes());
    let digest = hasher.finalize();
    let word = u64::from_be_bytes(digest[..8].try_into().expect("eight bytes"));
    word as f64 / (u64::MAX as f64 + 1.0)
}

/// Build a completion in the shape real models produce: reasoning prose
/// followed by a fenced JSON payload in the job's answer schema. `answer`
/// returning `None` leaves the pair out of the payload.
fn render_response<F>(job: &PromptJob, answer: F) -> String
where
    F: Fn(&Pair) -> Option<VoteValue>,
{
    let answered: Vec<(Pair, VoteValue)> = expected_pairs(job)
        .into_iter()
        .filter_map(|p| answer(&p).map(|v| (p, v)))
        .collect();

    let payload = match job.scope {
        TaskScope::OneToOne => match answered.first() {
            Some((_, v)) => format!("{{\"answer\": \"{v}\"}}"),
            None => "{}".to_string(),
        },
        scope => {
            let mut entries = String::new();
            for (i, (pair, v)) in answered.iter().enumerate() {
                if i > 0 {
                    entries.push_str(", ");
                }
                match scope {
                    TaskScope::OneToN => {
                        write!(entries, "{{\"target\": {:?}, \"answer\": \"{v}\"}}", pair.target)
                    }
                    TaskScope::NToOne => {
                        write!(entries, "{{\"source\": {:?}, \"answer\": \"{v}\"}}", pair.source)
                    }
                    _ => write!(
                        entries,
                        "{{\"source\": {:?}, \"target\": {:?}, \"answer\": \"{v}\"}}",
                        pair.source, pair.target
                    ),
                }
                .expect("writing to string");
            }
            format!("{{\"matches\": [{entries}]}}")
        }
    };

    format!(
        "Lets think step by step. I compared the value ranges of each source \
         attribute against the target attributes and checked whether an \
         invertible mapping exists.\n```json\n{payload}\n```\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{Attribute, Dataset, GroundTruth, Schema};
    use crate::llm::{Message, RequestContext, SamplingParams};
    use crate::parse::{extract_json, to_votes};
    use crate::prompt::build_jobs;
    use std::collections::BTreeSet;

    fn toy_benchmark() -> Arc<Benchmark> {
        let schema = |table: &str, names: &[&str]| Schema {
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
        Arc::new(Benchmark {
            datasets: vec![Dataset {
                id: "Toy".into(),
                source: schema("s", &["id", "sex", "born"]),
                target: schema("t", &["person_id", "gender", "birth_year"]),
            }],
            truths: vec![GroundTruth {
                dataset_id: "Toy".into(),
                matches: BTreeSet::from([
                    Pair::new("id", "person_id"),
                    Pair::new("sex", "gender"),
                ]),
            }],
        })
    }

    fn request(scope: TaskScope, job_index: usize, run: usize, vote: usize) -> CompletionRequest {
        let b = toy_benchmark();
        let job = build_jobs(&b.datasets[0], scope)[job_index].clone();
        CompletionRequest {
            model: "mock-model".into(),
            messages: vec![Message::user("prompt")],
            params: SamplingParams::default(),
            context: RequestContext {
                job,
                run_index: run,
                vote_index: vote,
            },
        }
    }

    fn votes_of(backend: &MockBackend, req: &CompletionRequest) -> BTreeMap<Pair, VoteValue> {
        let text = backend.complete(req).unwrap().text;
        let value = extract_json(&text).unwrap();
        to_votes(&value, &req.context.job).votes
    }

    #[test]
    fn constant_yes_answers_every_expected_pair() {
        let backend = MockBackend::new(MockPolicy::Constant(VoteValue::Yes), toy_benchmark());
        for scope in TaskScope::ALL {
            let req = request(scope, 0, 1, 1);
            let votes = votes_of(&backend, &req);
            assert!(votes.values().all(|&v| v == VoteValue::Yes), "{scope}");
            assert_eq!(votes.len(), expected_pairs(&req.context.job).len());
        }
    }

    #[test]
    fn perfect_oracle_reproduces_the_ground_truth() {
        let b = toy_benchmark();
        let backend = MockBackend::new(MockPolicy::perfect_oracle(7), Arc::clone(&b));
        let truth = &b.truths[0].matches;
        for scope in TaskScope::ALL {
            for (i, job) in build_jobs(&b.datasets[0], scope).iter().enumerate() {
                let req = request(scope, i, 1, 1);
                for (pair, vote) in votes_of(&backend, &req) {
                    let expected = if truth.contains(&pair) {
                        VoteValue::Yes
                    } else {
                        VoteValue::No
                    };
                    assert_eq!(vote, expected, "{scope} job {i} {pair}");
                }
                assert_eq!(votes_of(&backend, &req).len(), expected_pairs(job).len());
            }
        }
    }

    #[test]
    fn oracle_output_is_byte_identical_for_a_fixed_seed() {
        let req = request(TaskScope::NToM, 0, 2, 3);
        let one = MockBackend::new(
            MockPolicy::Oracle {
                flip_prob: 0.4,
                omit_prob: 0.3,
                seed: 11,
            },
            toy_benchmark(),
        );
        let two = MockBackend::new(
            MockPolicy::Oracle {
                flip_prob: 0.4,
                omit_prob: 0.3,
                seed: 11,
            },
            toy_benchmark(),
        );
        assert_eq!(
            one.complete(&req).unwrap().text,
            two.complete(&req).unwrap().text
        );
    }

    #[test]
    fn distinct_votes_draw_distinct_noise() {
        let backend = MockBackend::new(
            MockPolicy::Oracle {
                flip_prob: 0.5,
                omit_prob: 0.0,
                seed: 3,
            },
            toy_benchmark(),
        );
        let texts: BTreeSet<String> = (1..=3)
            .map(|vote| {
                backend
                    .complete(&request(TaskScope::NToM, 0, 1, vote))
                    .unwrap()
                    .text
            })
            .collect();
        assert!(texts.len() > 1, "all three votes came out identical");
    }

    #[test]
    fn full_omission_yields_votes_for_nothing() {
        let backend = MockBackend::new(
            MockPolicy::Oracle {
                flip_prob: 0.0,
                omit_prob: 1.0,
                seed: 5,
            },
            toy_benchmark(),
        );
        let req = request(TaskScope::OneToN, 1, 1, 1);
        let votes = votes_of(&backend, &req);
        assert!(votes.values().all(|&v| v == VoteValue::Unknown));
    }

    #[test]
    fn full_flip_inverts_every_answer() {
        let b = toy_benchmark();
        let backend = MockBackend::new(
            MockPolicy::Oracle {
                flip_prob: 1.0,
                omit_prob: 0.0,
                seed: 5,
            },
            Arc::clone(&b),
        );
        let req = request(TaskScope::NToM, 0, 1, 1);
        let truth = &b.truths[0].matches;
        for (pair, vote) in votes_of(&backend, &req) {
            let expected = if truth.contains(&pair) {
                VoteValue::No
            } else {
                VoteValue::Yes
            };
            assert_eq!(vote, expected, "{pair}");
        }
    }

    #[test]
    fn flip_events_are_nested_across_probabilities() {
        let b = toy_benchmark();
        let truth = &b.truths[0].matches;
        let epsilons = [0.0, 0.1, 0.25, 0.5, 0.75, 1.0];
        let mut previous: Option<BTreeSet<Pair>> = None;
        for eps in epsilons {
            let backend = MockBackend::new(
                MockPolicy::Oracle {
                    flip_prob: eps,
                    omit_prob: 0.0,
                    seed: 9,
                },
                Arc::clone(&b),
            );
            let req = request(TaskScope::NToM, 0, 1, 1);
            let flipped: BTreeSet<Pair> = votes_of(&backend, &req)
                .into_iter()
                .filter(|(pair, vote)| {
                    let correct = if truth.contains(pair) {
                        VoteValue::Yes
                    } else {
                        VoteValue::No
                    };
                    *vote != correct
                })
                .map(|(pair, _)| pair)
                .collect();
            if let Some(prev) = &previous {
                assert!(
                    prev.is_subset(&flipped),
                    "flips at lower probability not contained at {eps}"
                );
            }
            previous = Some(flipped);
        }
    }

    #[test]
    fn scripted_responses_come_back_verbatim() {
        let req = request(TaskScope::OneToOne, 4, 2, 1);
        let key = script_key(&req);
        assert_eq!(key, "Toy|1-to-1|run2|vote1|job4");
        let map = BTreeMap::from([(key, "canned {\"answer\": \"yes\"}".to_string())]);
        let backend = MockBackend::new(MockPolicy::Scripted(map), toy_benchmark());
        assert_eq!(
            backend.complete(&req).unwrap().text,
            "canned {\"answer\": \"yes\"}"
        );
        let miss = request(TaskScope::OneToOne, 5, 2, 1);
        assert!(matches!(
            backend.complete(&miss),
            Err(LlmError::NoScriptedResponse(_))
        ));
    }
}
