//! Chat-completions HTTP client with exponential backoff on transient
//! failures.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "DOCSUM_LLM_API_KEY";
/// Generation cap for every annotation request.
pub const MAX_OUTPUT_TOKENS: u32 = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub base_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub parallelism: usize,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    pub timeout_secs: u64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            base_url: "http://127.0.0.1:8000".into(),
            model_name: "mistralai/Mistral-7B-Instruct-v0.3".into(),
            temperature: 0.0,
            max_retries: 5,
            parallelism: 4,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
            timeout_secs: 120,
            api_key: None,
        }
    }
}

impl LlmConfig {
    pub fn max_output_tokens(&self) -> u32 {
        MAX_OUTPUT_TOKENS
    }

    pub fn with_env_key(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            base_delay: Duration::from_millis(self.base_delay_ms),
            max_delay: Duration::from_millis(self.max_delay_ms),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl RetryPolicy {
    /// `base · 2^attempt`, capped at `max_delay`.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

pub fn is_retryable_status(status: u16) -> bool {
    status == 429 || (500..=599).contains(&status)
}

fn build_agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

/// POSTs `body` and returns the decoded JSON response, retrying rate limits,
/// server errors and transport failures.
pub(crate) fn post_json_with_retry(
    agent: &ureq::Agent,
    url: &str,
    api_key: Option<&str>,
    body: &Value,
    policy: RetryPolicy,
) -> Result<Value> {
    let mut attempt = 0u32;
    loop {
        let mut request = agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let (err, retry_after) = match request.send_json(body) {
            Ok(mut response) => {
                let status = response.status().as_u16();
                if (200..300).contains(&status) {
                    return response
                        .body_mut()
                        .read_json::<Value>()
                        .map_err(|e| Error::LlmPayload(e.to_string()));
                }
                let err = Error::LlmStatus {
                    status,
                    attempts: attempt + 1,
                };
                if !is_retryable_status(status) {
                    return Err(err);
                }
                let retry_after = response
                    .headers()
                    .get("retry-after")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse::<u64>().ok())
                    .map(Duration::from_secs);
                (err, retry_after)
            }
            Err(e) => (Error::LlmTransport(e.to_string()), None),
        };
        if attempt >= policy.max_retries {
            return Err(err);
        }
        let wait = retry_after
            .map_or(policy.backoff(attempt), |ra| ra.max(policy.backoff(attempt)))
            .min(policy.max_delay);
        log::warn!("{err}; retrying in {wait:?}");
        std::thread::sleep(wait);
        attempt += 1;
    }
}

/// Anything that turns a prompt into a completion.
pub trait CompletionBackend: Sync {
    fn model_name(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String>;
}

pub struct HttpChatClient {
    config: LlmConfig,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(config: LlmConfig) -> Result<Self> {
        if config.api_key.is_none() {
            return Err(Error::MissingApiKey(API_KEY_ENV));
        }
        let agent = build_agent(Duration::from_secs(config.timeout_secs));
        Ok(HttpChatClient { config, agent })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": self.config.max_output_tokens(),
            "temperature": self.config.temperature,
        })
    }
}

fn completion_text(payload: &Value) -> Result<String> {
    payload
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| Error::LlmPayload("missing choices[0].message.content".into()))
}

impl CompletionBackend for HttpChatClient {
    fn model_name(&self) -> &str {
        &self.config.model_name
    }

    fn complete(&self, prompt: &str) -> Result<String> {
        let url = format!("{}/v1/chat/completions", self.config.base_url.trim_end_matches('/'));
        let payload = post_json_with_retry(
            &self.agent,
            &url,
            self.config.api_key.as_deref(),
            &self.request_body(prompt),
            self.config.retry_policy(),
        )?;
        completion_text(&payload)
    }
}

/// One-shot completion call.
pub fn call_llm(config: &LlmConfig, prompt: &str) -> Result<String> {
    HttpChatClient::new(config.clone())?.complete(prompt)
}

pub(crate) fn embeddings_agent(timeout_secs: u64) -> ureq::Agent {
    build_agent(Duration::from_secs(timeout_secs))
}
