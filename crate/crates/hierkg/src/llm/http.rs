//! OpenAI-compatible chat-completions backend over HTTP.

use serde::Deserialize;

use super::{BackendError, BackendReply, ChatBackend, ChatRequest, ProviderConfig, TokenUsage};
use crate::error::LlmError;

/// Blocking HTTP backend. The API key is resolved from the environment
/// variable named in the config at construction time, never stored in
/// config files.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    endpoint_url: String,
    model_name: String,
    api_key: String,
    temperature: f64,
    random_seed: Option<u64>,
}

impl HttpBackend {
    pub fn new(config: &ProviderConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| LlmError::MissingApiKey(config.api_key_env.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| LlmError::MalformedResponse(format!("client construction failed: {e}")))?;
        Ok(HttpBackend {
            client,
            endpoint_url: config.endpoint_url.clone(),
            model_name: config.model_name.clone(),
            api_key,
            temperature: config.temperature,
            random_seed: config.random_seed,
        })
    }
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Debug, Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl ChatBackend for HttpBackend {
    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError> {
        let mut body = serde_json::json!({
            "model": self.model_name,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": self.temperature,
        });
        if let Some(seed) = self.random_seed {
            body["seed"] = serde_json::json!(seed);
        }

        let result = self
            .client
            .post(&self.endpoint_url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send();

        let response = match result {
            Ok(response) => response,
            Err(e) if e.is_timeout() => {
                return Err(BackendError::Retryable {
                    reason: format!("timeout: {e}"),
                    timeout: true,
                })
            }
            Err(e) => {
                return Err(BackendError::Retryable {
                    reason: format!("transport: {e}"),
                    timeout: false,
                })
            }
        };

        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            let body = response.text().unwrap_or_default();
            return Err(BackendError::Retryable {
                reason: format!("HTTP {}: {}", status.as_u16(), snippet(&body)),
                timeout: false,
            });
        }
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Err(BackendError::Fatal(LlmError::Provider {
                status: status.as_u16(),
                body: snippet(&body),
            }));
        }

        let wire: WireResponse = match response.json() {
            Ok(wire) => wire,
            Err(e) => {
                return Err(BackendError::Fatal(LlmError::MalformedResponse(format!(
                    "response body was not valid chat-completion JSON: {e}"
                ))))
            }
        };
        let text = wire
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| {
                BackendError::Fatal(LlmError::MalformedResponse(
                    "response carried no choices".to_string(),
                ))
            })?;
        Ok(BackendReply {
            text,
            token_usage: wire.usage.map(|u| TokenUsage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            }),
        })
    }

    fn name(&self) -> &'static str {
        "live"
    }
}

fn snippet(body: &str) -> String {
    const LIMIT: usize = 400;
    if body.len() <= LIMIT {
        body.to_string()
    } else {
        body.chars().take(LIMIT).collect()
    }
}
