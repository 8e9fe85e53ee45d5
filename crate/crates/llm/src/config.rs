use serde::{Deserialize, Serialize};

/// Connection and sampling settings for a chat-completions backend.
///
/// The API key itself is never stored; `api_key_env` names the environment
/// variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub base_url: String,
    pub model_name: String,
    pub api_key_env: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: Option<u32>,
    pub request_timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub concurrency_limit: usize,
    pub requests_per_minute: Option<u32>,
    pub system_prompt: Option<String>,
    /// Free-text description of the serving stack (hardware, quantization),
    /// copied into run manifests.
    pub serving_description: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model_name: "default".into(),
            api_key_env: "LLM_API_KEY".into(),
            temperature: 0.6,
            top_p: 0.9,
            max_tokens: None,
            request_timeout_secs: 120,
            max_retries: 4,
            backoff_base_ms: 500,
            concurrency_limit: 4,
            requests_per_minute: None,
            system_prompt: None,
            serving_description: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid backend config: {0}")]
pub struct ConfigError(pub String);

impl BackendConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ConfigError(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if self.top_p.is_nan() || self.top_p <= 0.0 || self.top_p > 1.0 {
            return Err(ConfigError(format!("top_p must be in (0, 1], got {}", self.top_p)));
        }
        if self.concurrency_limit < 1 {
            return Err(ConfigError("concurrency_limit must be >= 1".into()));
        }
        if self.requests_per_minute == Some(0) {
            return Err(ConfigError("requests_per_minute must be >= 1".into()));
        }
        Ok(())
    }

    /// The key from the environment, if set and non-empty.
    pub fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty())
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}
