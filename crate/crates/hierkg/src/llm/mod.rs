//! Uniform chat-completion interface over any OpenAI-compatible endpoint,
//! plus a deterministic offline mock backend.
//!
//! The client owns retries (exponential backoff on transport errors and
//! HTTP 429/5xx), determinism settings (temperature and seed are forwarded
//! when the provider accepts them; real determinism for tests comes from the
//! mock), a bounded-concurrency gate, and the audit log.

mod http;
mod mock;

pub use http::HttpBackend;
pub use mock::MockBackend;

use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, LlmError, Result};

/// Connection and behavior settings for one chat-completion endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key. The key itself
    /// never appears in config files.
    pub api_key_env: String,
    pub temperature: f64,
    /// Forwarded when set; many endpoints ignore it, so this is best-effort.
    pub random_seed: Option<u64>,
    pub max_retries: u32,
    pub request_timeout: Duration,
    pub max_concurrent_requests: usize,
    /// Base backoff for retry attempt n: `retry_backoff_ms << n`.
    pub retry_backoff_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".to_string(),
            model_name: "gpt-4o".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            temperature: 0.0,
            random_seed: Some(42),
            max_retries: 2,
            request_timeout: Duration::from_secs(60),
            max_concurrent_requests: 4,
            retry_backoff_ms: 250,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature < 0.0 {
            return Err(Error::validation("temperature must be >= 0"));
        }
        if self.max_concurrent_requests < 1 {
            return Err(Error::validation("max_concurrent_requests must be >= 1"));
        }
        Ok(())
    }
}

/// One chat exchange: a system prompt and a user prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub user_prompt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// The endpoint's first choice, verbatim.
#[derive(Debug, Clone)]
pub struct ChatResponse {
    pub text: String,
    pub token_usage: Option<TokenUsage>,
    pub latency: Duration,
}

/// What a backend returns before the client adds timing.
#[derive(Debug, Clone)]
pub struct BackendReply {
    pub text: String,
    pub token_usage: Option<TokenUsage>,
}

/// Backend failure, classified for the retry loop.
#[derive(Debug)]
pub enum BackendError {
    /// Transport failures and HTTP 429/5xx; retried with backoff.
    Retryable { reason: String, timeout: bool },
    /// Everything else; surfaced immediately.
    Fatal(LlmError),
}

/// A transport capable of answering one chat request.
pub trait ChatBackend: Send + Sync {
    fn send(&self, request: &ChatRequest) -> std::result::Result<BackendReply, BackendError>;
    fn name(&self) -> &'static str;
}

/// Stage tag and unit identifier attached to audit entries.
#[derive(Debug, Clone)]
pub struct CallTag {
    pub stage: String,
    pub unit: String,
}

impl CallTag {
    pub fn new(stage: impl Into<String>, unit: impl Into<String>) -> Self {
        CallTag {
            stage: stage.into(),
            unit: unit.into(),
        }
    }
}

/// Chat client: backend plus retries, concurrency bound, and audit log.
/// Shareable across threads; nothing is serialized except the concurrency
/// gate.
pub struct LlmClient {
    backend: Box<dyn ChatBackend>,
    config: ProviderConfig,
    gate: Semaphore,
    audit: Option<AuditLog>,
}

impl LlmClient {
    pub fn new(config: ProviderConfig, backend: Box<dyn ChatBackend>) -> Self {
        let permits = config.max_concurrent_requests.max(1);
        LlmClient {
            backend,
            config,
            gate: Semaphore::new(permits),
            audit: None,
        }
    }

    /// Client over the deterministic mock backend.
    pub fn mock(config: ProviderConfig) -> Self {
        Self::new(config, Box::new(MockBackend::new()))
    }

    /// Client over an OpenAI-compatible HTTP endpoint. Fails early when the
    /// API key environment variable is unset.
    pub fn live(config: ProviderConfig) -> Result<Self, LlmError> {
        let backend = HttpBackend::new(&config)?;
        Ok(Self::new(config, Box::new(backend)))
    }

    pub fn with_audit(mut self, audit: AuditLog) -> Self {
        self.audit = Some(audit);
        self
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    /// Send one request. Retries retryable failures with exponential backoff
    /// up to `max_retries`; returns the first choice text verbatim.
    pub fn complete(&self, request: &ChatRequest, tag: &CallTag) -> Result<ChatResponse, LlmError> {
        let _permit = self.gate.acquire();
        let attempts_allowed = self.config.max_retries + 1;
        let mut attempt_log: Vec<String> = Vec::new();
        let mut last_was_timeout = false;

        for attempt in 0..attempts_allowed {
            let started = Instant::now();
            match self.backend.send(request) {
                Ok(reply) => {
                    let response = ChatResponse {
                        text: reply.text,
                        token_usage: reply.token_usage,
                        latency: started.elapsed(),
                    };
                    self.audit_entry(tag, request, attempt + 1, Some(&response), None);
                    return Ok(response);
                }
                Err(BackendError::Fatal(err)) => {
                    self.audit_entry(tag, request, attempt + 1, None, Some(&err.to_string()));
                    return Err(err);
                }
                Err(BackendError::Retryable { reason, timeout }) => {
                    last_was_timeout = timeout;
                    log::warn!(
                        "retryable failure on {} attempt {}/{}: {}",
                        tag.unit,
                        attempt + 1,
                        attempts_allowed,
                        reason
                    );
                    attempt_log.push(format!("attempt {}: {}", attempt + 1, reason));
                    if attempt + 1 < attempts_allowed {
                        std::thread::sleep(Duration::from_millis(
                            self.config.retry_backoff_ms << attempt,
                        ));
                    }
                }
            }
        }

        let err = if last_was_timeout {
            LlmError::Timeout(self.config.request_timeout)
        } else {
            LlmError::RetriesExhausted {
                attempts: attempts_allowed,
                log: attempt_log.join("; "),
            }
        };
        self.audit_entry(tag, request, attempts_allowed, None, Some(&err.to_string()));
        Err(err)
    }

    fn audit_entry(
        &self,
        tag: &CallTag,
        request: &ChatRequest,
        attempts: u32,
        response: Option<&ChatResponse>,
        error: Option<&str>,
    ) {
        let Some(audit) = &self.audit else { return };
        let entry = serde_json::json!({
            "stage": tag.stage,
            "unit": tag.unit,
            "backend": self.backend.name(),
            "model": self.config.model_name,
            "attempts": attempts,
            "user_prompt": request.user_prompt,
            "response": response.map(|r| r.text.as_str()),
            "latency_ms": response.map(|r| r.latency.as_millis() as u64),
            "error": error,
        });
        audit.append(&entry);
    }
}

/// Append-only JSONL audit log; one entry per request/response pair.
pub struct AuditLog {
    path: PathBuf,
    writer: Mutex<BufWriter<std::fs::File>>,
}

impl AuditLog {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(AuditLog {
            path: path.to_path_buf(),
            writer: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn append(&self, entry: &serde_json::Value) {
        let mut writer = self.writer.lock().expect("audit lock");
        if let Err(e) = writeln!(writer, "{entry}").and_then(|_| writer.flush()) {
            log::warn!("audit log write failed: {e}");
        }
    }
}

/// A backend that returns pre-configured replies in order. Useful for
/// testing failure paths the rule-based mock never exercises (malformed
/// output, degenerate answers).
pub struct ScriptedBackend {
    replies: Mutex<std::collections::VecDeque<String>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedBackend {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
        }
    }
}

impl ChatBackend for ScriptedBackend {
    fn send(&self, _request: &ChatRequest) -> std::result::Result<BackendReply, BackendError> {
        let mut replies = self.replies.lock().expect("script lock");
        match replies.pop_front() {
            Some(text) => Ok(BackendReply {
                text,
                token_usage: None,
            }),
            None => Err(BackendError::Fatal(LlmError::MalformedResponse(
                "scripted backend ran out of replies".to_string(),
            ))),
        }
    }

    fn name(&self) -> &'static str {
        "scripted"
    }
}

/// Minimal counting semaphore bounding in-flight requests.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

struct SemaphorePermit<'a> {
    semaphore: &'a Semaphore,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphorePermit<'_> {
        let mut permits = self.permits.lock().expect("semaphore lock");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore wait");
        }
        *permits -= 1;
        SemaphorePermit { semaphore: self }
    }
}

impl Drop for SemaphorePermit<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().expect("semaphore lock");
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}
