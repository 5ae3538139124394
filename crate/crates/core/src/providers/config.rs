use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::retry::RetryPolicy;
use super::ProviderError;

fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}
fn default_parallelism() -> usize {
    4
}
fn default_batch() -> usize {
    64
}
fn default_max_input_chars() -> usize {
    8_000
}
fn default_max_tokens() -> u32 {
    2_048
}

/// Connection settings for one OpenAI-compatible endpoint. The API key is
/// never stored here, only the name of the environment variable holding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub url: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Embedding endpoints only: texts per request.
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Embedding endpoints only: longer inputs are truncated (and reported).
    #[serde(default = "default_max_input_chars")]
    pub max_input_chars: usize,
    /// Chat endpoints only.
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

impl ProviderConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            api_key_env: None,
            timeout_s: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            parallelism: default_parallelism(),
            batch_size: default_batch(),
            max_input_chars: default_max_input_chars(),
            temperature: 0.0,
            max_tokens: default_max_tokens(),
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |m: &str| Err(ProviderError::Config(format!("{}: {m}", self.model)));
        if self.url.trim().is_empty() {
            return bad("url must be set");
        }
        if self.model.trim().is_empty() {
            return bad("model must be set");
        }
        if self.timeout_s == 0 {
            return bad("timeout_s must be > 0");
        }
        if self.parallelism == 0 {
            return bad("parallelism must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must lie in [0, 2]");
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_s)
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            base_delay: Duration::from_millis(self.backoff_ms),
        }
    }

    /// Resolve the bearer token from the configured environment variable.
    pub fn api_key(&self) -> Result<Option<String>, ProviderError> {
        match &self.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| ProviderError::Auth(format!("environment variable `{var}` is not set"))),
        }
    }
}

/// Provider configuration file: one optional table per role.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvidersFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chat: Option<ProviderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<ProviderConfig>,
    /// Token-embedding endpoint used by the pair-similarity scorer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorer: Option<ProviderConfig>,
}

impl ProvidersFile {
    pub fn from_toml(text: &str) -> Result<Self, ProviderError> {
        let parsed: Self = toml::from_str(text).map_err(|e| ProviderError::Config(e.to_string()))?;
        for cfg in [&parsed.chat, &parsed.embedding, &parsed.scorer].into_iter().flatten() {
            cfg.validate()?;
        }
        Ok(parsed)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}
