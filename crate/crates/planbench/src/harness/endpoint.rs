//! Chat-completion endpoint plumbing: config, retries, and the HTTP client.
//!
//! The API token is looked up in an environment variable at request time and
//! is never stored in config files or in this code.

use std::env;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Retry schedule for transient endpoint failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total attempts, first try included. At least 1.
    pub max_attempts: u32,
    /// Sleep before attempt k+1 is `base_backoff_ms << (k-1)`, so retries
    /// back off exponentially.
    pub base_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_backoff_ms: 500,
        }
    }
}

/// Where and how to reach the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEndpointConfig {
    /// Base URL up to but not including `/chat/completions`.
    pub base_url: String,
    /// Model name sent in the request body.
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_auth_env")]
    pub auth_env: String,
    /// Upper bound on simultaneous in-flight requests.
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub temperature: f64,
}

fn default_auth_env() -> String {
    "PLANBENCH_API_KEY".to_string()
}

fn default_max_concurrent() -> usize {
    4
}

fn default_timeout_secs() -> u64 {
    120
}

/// A config field that makes the endpoint unusable.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("base_url must not be empty")]
    EmptyBaseUrl,
    #[error("model must not be empty")]
    EmptyModel,
    #[error("max_concurrent must be at least 1")]
    ZeroConcurrency,
    #[error("retry.max_attempts must be at least 1")]
    ZeroAttempts,
}

impl ModelEndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> ModelEndpointConfig {
        ModelEndpointConfig {
            base_url: base_url.into(),
            model: model.into(),
            auth_env: default_auth_env(),
            max_concurrent: default_max_concurrent(),
            retry: RetryPolicy::default(),
            timeout_secs: default_timeout_secs(),
            temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.base_url.trim().is_empty() {
            return Err(ConfigError::EmptyBaseUrl);
        }
        if self.model.trim().is_empty() {
            return Err(ConfigError::EmptyModel);
        }
        if self.max_concurrent == 0 {
            return Err(ConfigError::ZeroConcurrency);
        }
        if self.retry.max_attempts == 0 {
            return Err(ConfigError::ZeroAttempts);
        }
        Ok(())
    }

    /// Full URL of the chat-completion route.
    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// A request that did not yield usable text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    #[error("environment variable {0} is not set (expected the API token there)")]
    MissingToken(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("response JSON missing choices[0].message.content: {0}")]
    BadResponse(String),
}

impl EndpointError {
    /// Worth retrying? Auth and malformed-response problems are not: the
    /// next attempt would fail the same way.
    fn transient(&self) -> bool {
        match self {
            EndpointError::Transport(_) => true,
            EndpointError::Status { status, .. } => *status == 429 || *status >= 500,
            EndpointError::MissingToken(_) | EndpointError::BadResponse(_) => false,
        }
    }
}

/// Run `attempt` under the retry policy, sleeping between tries.
///
/// Stops early on non-transient errors; otherwise returns the last error
/// once attempts are exhausted.
pub fn with_retries<T>(
    policy: RetryPolicy,
    mut attempt: impl FnMut() -> Result<T, EndpointError>,
) -> Result<T, EndpointError> {
    let attempts = policy.max_attempts.max(1);
    let mut last = None;
    for k in 0..attempts {
        if k > 0 {
            let sleep_ms = policy.base_backoff_ms.saturating_mul(1 << (k - 1).min(16));
            std::thread::sleep(Duration::from_millis(sleep_ms));
        }
        match attempt() {
            Ok(v) => return Ok(v),
            Err(e) if e.transient() => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt ran"))
}

/// Anything that answers a single-turn prompt with text.
///
/// The HTTP client implements this; tests and the oracle baselines provide
/// local stand-ins.
pub trait ChatModel: Sync {
    fn complete(&self, prompt: &str) -> Result<String, EndpointError>;
}

/// Blocking HTTP client for the chat-completion protocol.
pub struct HttpChatModel {
    config: ModelEndpointConfig,
    client: reqwest::blocking::Client,
}

impl HttpChatModel {
    pub fn new(config: ModelEndpointConfig) -> Result<HttpChatModel, ConfigError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .expect("building a client with a plain timeout cannot fail");
        Ok(HttpChatModel { config, client })
    }

    pub fn config(&self) -> &ModelEndpointConfig {
        &self.config
    }

    fn request_once(&self, prompt: &str) -> Result<String, EndpointError> {
        // Read the token fresh on every request so rotation works without
        // rebuilding the client.
        let token = env::var(&self.config.auth_env)
            .map_err(|_| EndpointError::MissingToken(self.config.auth_env.clone()))?;
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let response = self
            .client
            .post(self.config.completions_url())
            .bearer_auth(token)
            .json(&body)
            .send()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(EndpointError::Status {
                status: status.as_u16(),
                body: truncate(&text, 500),
            });
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|_| EndpointError::BadResponse(truncate(&text, 200)))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| EndpointError::BadResponse(truncate(&text, 200)))
    }
}

fn truncate(s: &str, max: usize) -> String {
    if s.len() <= max {
        s.to_string()
    } else {
        let mut end = max;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &s[..end])
    }
}

impl ChatModel for HttpChatModel {
    fn complete(&self, prompt: &str) -> Result<String, EndpointError> {
        with_retries(self.config.retry, || self.request_once(prompt))
    }
}
