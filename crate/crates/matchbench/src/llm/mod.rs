//! Completion backends: a live OpenAI-compatible HTTP client, a
//! deterministic mock for tests, and a persistent raw-response store.

pub mod mock;
pub mod store;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::prompt::PromptJob;

pub use mock::{MockBackend, MockPolicy};
pub use store::{RawResponse, ResponseKey, ResponseStore, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Message {
        Message {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Message {
        Message {
            role: "system".into(),
            content: content.into(),
        }
    }
}

/// Sampling overrides; `None` fields are omitted from the request body so
/// the endpoint's defaults apply.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SamplingParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
}

/// Which experiment slot a completion is for. The live backend ignores
/// this; the mock derives its deterministic answer from it, and the
/// orchestrator uses it as the store key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestContext {
    pub job: PromptJob,
    pub run_index: usize,
    pub vote_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub params: SamplingParams,
    pub context: RequestContext,
}

/// A completion's text plus the token usage reported by the endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub token_usage: Option<u64>,
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("authentication rejected (HTTP {status}): {message}")]
    AuthError { status: u16, message: String },
    #[error("rate limited; gave up after {attempts} attempts")]
    RateLimitExhausted { attempts: u32 },
    #[error("transport failure: {0}")]
    TransportError(String),
    #[error("request budget of {limit} live calls exhausted")]
    BudgetExceeded { limit: u64 },
    #[error("mock backend has no scripted response for {0}")]
    NoScriptedResponse(String),
}

pub trait Backend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, LlmError>;
}

/// Configuration for the live chat-completions client.
#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub base_url: String,
    pub api_key: String,
    /// Total HTTP attempts per request, including the first.
    pub max_attempts: u32,
    /// First backoff delay; doubles per retry with multiplicative jitter.
    pub base_delay_ms: u64,
    pub timeout: Duration,
    /// Hard cap on HTTP attempts per backend instance.
    pub budget: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key: String::new(),
            max_attempts: 5,
            base_delay_ms: 500,
            timeout: Duration::from_secs(60),
            budget: 2000,
        }
    }
}

/// Blocking client for OpenAI-compatible `/chat/completions` endpoints.
///
/// Transient failures (HTTP 429, 5xx, timeouts) retry with exponential
/// backoff and jitter; auth failures do not retry. Every attempt draws on
/// the configured budget.
pub struct LiveBackend {
    cfg: LiveConfig,
    client: reqwest::blocking::Client,
    attempts_used: AtomicU64,
}

impl LiveBackend {
    pub fn new(cfg: LiveConfig) -> Result<LiveBackend, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| LlmError::TransportError(e.to_string()))?;
        Ok(LiveBackend {
            cfg,
            client,
            attempts_used: AtomicU64::new(0),
        })
    }

    /// HTTP attempts issued so far.
    pub fn attempts_used(&self) -> u64 {
        self.attempts_used.load(Ordering::SeqCst)
    }

    fn take_budget(&self) -> Result<(), LlmError> {
        let before = self.attempts_used.fetch_add(1, Ordering::SeqCst);
        if before >= self.cfg.budget {
            return Err(LlmError::BudgetExceeded {
                limit: self.cfg.budget,
            });
        }
        Ok(())
    }

    fn backoff(&self, attempt: u32) {
        use rand::Rng;
        let base = self.cfg.base_delay_ms.saturating_mul(1 << attempt.min(10));
        let jitter = rand::rng().random_range(0.5..1.5);
        std::thread::sleep(Duration::from_millis((base as f64 * jitter) as u64));
    }
}

impl Backend for LiveBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, LlmError> {
        let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
        let mut body = json!({
            "model": req.model,
            "messages": req.messages,
        });
        if let Some(t) = req.params.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(p) = req.params.top_p {
            body["top_p"] = json!(p);
        }

        let mut rate_limited = false;
        for attempt in 0..self.cfg.max_attempts {
            self.take_budget()?;
            let sent = self
                .client
                .post(&url)
                .bearer_auth(&self.cfg.api_key)
                .json(&body)
                .send();
            match sent {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return parse_completion_body(&resp.text().map_err(|e| {
                            LlmError::TransportError(format!("reading response body: {e}"))
                        })?);
                    }
                    let code = status.as_u16();
                    let message = resp.text().unwrap_or_default();
                    match code {
                        401 | 403 => {
                            return Err(LlmError::AuthError {
                                status: code,
                                message: truncate(&message, 200),
                            })
                        }
                        429 => rate_limited = true,
                        500..=599 => {}
                        _ => {
                            return Err(LlmError::TransportError(format!(
                                "HTTP {code}: {}",
                                truncate(&message, 200)
                            )))
                        }
                    }
                }
                Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => {}
                Err(e) => return Err(LlmError::TransportError(e.to_string())),
            }
            if attempt + 1 < self.cfg.max_attempts {
                self.backoff(attempt);
            }
        }
        if rate_limited {
            Err(LlmError::RateLimitExhausted {
                attempts: self.cfg.max_attempts,
            })
        } else {
            Err(LlmError::TransportError(format!(
                "no successful response after {} attempts",
                self.cfg.max_attempts
            )))
        }
    }
}

fn parse_completion_body(body: &str) -> Result<Completion, LlmError> {
    let value: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| LlmError::TransportError(format!("malformed completion body: {e}")))?;
    let text = value["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| {
            LlmError::TransportError("completion body lacks choices[0].message.content".into())
        })?
        .to_string();
    let token_usage = value["usage"]["total_tokens"].as_u64();
    Ok(Completion { text, token_usage })
}

fn truncate(s: &str, n: usize) -> String {
    if s.len() <= n {
        return s.to_string();
    }
    let mut end = n;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}...", &s[..end])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::TaskScope;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::AtomicUsize;
    use std::sync::Arc;

    /// One-thread HTTP double: serves the canned (status, body) replies in
    /// order, one per connection, then stops listening.
    fn serve(replies: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}/v1", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&hits);
        std::thread::spawn(move || {
            for (status, body) in replies {
                let Ok((mut stream, _)) = listener.accept() else { return };
                counter.fetch_add(1, Ordering::SeqCst);
                let mut buf = [0u8; 8192];
                let _ = stream.read(&mut buf);
                let reason = match status {
                    200 => "OK",
                    401 => "Unauthorized",
                    429 => "Too Many Requests",
                    _ => "Error",
                };
                let response = format!(
                    "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\n\
                     Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        (base, hits)
    }

    fn request() -> CompletionRequest {
        CompletionRequest {
            model: "gpt-test".into(),
            messages: vec![Message::user("hello")],
            params: SamplingParams::default(),
            context: RequestContext {
                job: PromptJob {
                    dataset_id: "Toy".into(),
                    scope: TaskScope::OneToOne,
                    source_attrs: vec!["a".into()],
                    target_attrs: vec!["t".into()],
                    job_index: 0,
                },
                run_index: 1,
                vote_index: 1,
            },
        }
    }

    fn config(base_url: String) -> LiveConfig {
        LiveConfig {
            base_url,
            api_key: "k".into(),
            max_attempts: 4,
            base_delay_ms: 1,
            timeout: Duration::from_secs(5),
            budget: 100,
        }
    }

    fn ok_body(content: &str) -> String {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}],
            "usage": {"total_tokens": 7}
        })
        .to_string()
    }

    #[test]
    fn successful_completion_returns_text_and_usage() {
        let (base, hits) = serve(vec![(200, ok_body("the answer"))]);
        let backend = LiveBackend::new(config(base)).unwrap();
        let got = backend.complete(&request()).unwrap();
        assert_eq!(got.text, "the answer");
        assert_eq!(got.token_usage, Some(7));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn auth_failures_do_not_retry() {
        let (base, hits) = serve(vec![(401, "{\"error\": \"bad key\"}".into())]);
        let backend = LiveBackend::new(config(base)).unwrap();
        match backend.complete(&request()) {
            Err(LlmError::AuthError { status: 401, .. }) => {}
            other => panic!("expected AuthError, got {other:?}"),
        }
        assert_eq!(hits.load(Ordering::SeqCst), 1);
        assert_eq!(backend.attempts_used(), 1);
    }

    #[test]
    fn rate_limits_retry_until_success() {
        let (base, hits) = serve(vec![
            (429, "slow down".into()),
            (429, "slow down".into()),
            (200, ok_body("eventually")),
        ]);
        let backend = LiveBackend::new(config(base)).unwrap();
        assert_eq!(backend.complete(&request()).unwrap().text, "eventually");
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn exhausted_rate_limit_reports_attempts() {
        let replies = (0..4).map(|_| (429, "no".to_string())).collect();
        let (base, _) = serve(replies);
        let backend = LiveBackend::new(config(base)).unwrap();
        match backend.complete(&request()) {
            Err(LlmError::RateLimitExhausted { attempts: 4 }) => {}
            other => panic!("expected RateLimitExhausted, got {other:?}"),
        }
    }

    #[test]
    fn server_errors_retry_then_surface_as_transport() {
        let replies = (0..4).map(|_| (500, "boom".to_string())).collect();
        let (base, hits) = serve(replies);
        let backend = LiveBackend::new(config(base)).unwrap();
        match backend.complete(&request()) {
            Err(LlmError::TransportError(_)) => {}
            other => panic!("expected TransportError, got {other:?}"),
        }
        assert_eq!(hits.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn budget_caps_total_attempts() {
        let (base, _) = serve(vec![(200, ok_body("one")), (200, ok_body("two"))]);
        let mut cfg = config(base);
        cfg.budget = 1;
        let backend = LiveBackend::new(cfg).unwrap();
        assert!(backend.complete(&request()).is_ok());
        match backend.complete(&request()) {
            Err(LlmError::BudgetExceeded { limit: 1 }) => {}
            other => panic!("expected BudgetExceeded, got {other:?}"),
        }
    }

    #[test]
    fn other_client_errors_are_not_retried() {
        let (base, hits) = serve(vec![(400, "{\"error\":\"bad request\"}".into())]);
        let backend = LiveBackend::new(config(base)).unwrap();
        assert!(matches!(
            backend.complete(&request()),
            Err(LlmError::TransportError(_))
        ));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }
}
