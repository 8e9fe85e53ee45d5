use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use thiserror::Error;
use tokio::sync::{Mutex, Semaphore};
use tokio::time::Instant;

use crate::cache::{cache_key, ResponseCache};
use crate::config::{BackendConfig, ConfigError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("authentication failed (HTTP {0})")]
    AuthFailure(u16),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("backend unavailable after {attempts} attempts: {message}")]
    BackendUnavailable { attempts: u32, message: String },
    #[error("backend rejected the request (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    InvalidResponse(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("response cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// HTTP attempts made; 0 on a cache hit.
    pub attempts: u32,
    pub cached: bool,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

/// Chat-completions client. Cheap to share behind an `Arc`.
#[derive(Debug)]
pub struct ChatClient {
    cfg: BackendConfig,
    http: reqwest::Client,
    api_key: Option<String>,
    cache: Option<Arc<ResponseCache>>,
    permits: Semaphore,
    next_slot: Mutex<Option<Instant>>,
    requests: AtomicU64,
}

enum Failure {
    Retry { rate_limited: bool, message: String, wait: Option<Duration> },
    Fatal(LlmError),
}

impl ChatClient {
    pub fn new(cfg: BackendConfig, cache: Option<Arc<ResponseCache>>) -> Result<Self, LlmError> {
        cfg.validate()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(cfg.request_timeout_secs))
            .build()
            .map_err(|e| LlmError::BackendUnavailable { attempts: 0, message: e.to_string() })?;
        Ok(ChatClient {
            api_key: cfg.api_key(),
            permits: Semaphore::new(cfg.concurrency_limit),
            cfg,
            http,
            cache,
            next_slot: Mutex::new(None),
            requests: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    /// HTTP requests sent so far.
    pub fn requests_sent(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// Completes `prompt`, answering from the cache when possible. `attempt`
    /// distinguishes deliberate re-asks of the same prompt.
    pub async fn complete(&self, prompt: &str, attempt: u32) -> Result<Completion, LlmError> {
        let key = cache_key(&self.cfg, prompt, attempt);
        if let Some(text) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(Completion { text, attempts: 0, cached: true });
        }
        let (text, attempts) = self.complete_uncached(prompt).await?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &text).map_err(|e| LlmError::Cache(e.to_string()))?;
        }
        Ok(Completion { text, attempts, cached: false })
    }

    async fn wait_for_slot(&self) {
        let Some(rpm) = self.cfg.requests_per_minute else { return };
        let interval = Duration::from_secs_f64(60.0 / rpm as f64);
        let slot = {
            let mut next = self.next_slot.lock().await;
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + interval);
            slot
        };
        tokio::time::sleep_until(slot).await;
    }

    async fn complete_uncached(&self, prompt: &str) -> Result<(String, u32), LlmError> {
        let mut messages = Vec::new();
        if let Some(system) = &self.cfg.system_prompt {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": prompt}));
        let mut body = json!({
            "model": self.cfg.model_name,
            "messages": messages,
            "temperature": self.cfg.temperature,
            "top_p": self.cfg.top_p,
        });
        if let Some(max) = self.cfg.max_tokens {
            body["max_tokens"] = json!(max);
        }

        let mut attempts = 0;
        loop {
            attempts += 1;
            self.wait_for_slot().await;
            let outcome = {
                let _permit = self.permits.acquire().await.expect("semaphore never closed");
                self.requests.fetch_add(1, Ordering::Relaxed);
                self.send(&body).await
            };
            let (rate_limited, message, wait) = match outcome {
                Ok(text) => return Ok((text, attempts)),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry { rate_limited, message, wait }) => (rate_limited, message, wait),
            };
            if attempts > self.cfg.max_retries {
                return Err(if rate_limited {
                    LlmError::RateLimited { attempts }
                } else {
                    LlmError::BackendUnavailable { attempts, message }
                });
            }
            let backoff = Duration::from_millis(self.cfg.backoff_base_ms.saturating_mul(1 << (attempts - 1).min(16)));
            tracing::debug!(attempts, %message, "retrying backend request");
            tokio::time::sleep(wait.unwrap_or(backoff).min(Duration::from_secs(120))).await;
        }
    }

    async fn send(&self, body: &serde_json::Value) -> Result<String, Failure> {
        let mut req = self.http.post(self.cfg.endpoint()).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| Failure::Retry {
            rate_limited: false,
            message: e.to_string(),
            wait: None,
        })?;
        let status = resp.status();
        let retry_after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = resp.text().await.map_err(|e| Failure::Retry {
            rate_limited: false,
            message: e.to_string(),
            wait: None,
        })?;
        match status.as_u16() {
            200..=299 => {
                let parsed: ChatResponse = serde_json::from_str(&text)
                    .map_err(|e| Failure::Fatal(LlmError::InvalidResponse(e.to_string())))?;
                parsed
                    .choices
                    .into_iter()
                    .next()
                    .and_then(|c| c.message.content)
                    .ok_or_else(|| Failure::Fatal(LlmError::InvalidResponse("no message content".into())))
            }
            code @ (401 | 403) => Err(Failure::Fatal(LlmError::AuthFailure(code))),
            429 => Err(Failure::Retry { rate_limited: true, message: "HTTP 429".into(), wait: retry_after }),
            code @ (408 | 500..=599) => Err(Failure::Retry {
                rate_limited: false,
                message: format!("HTTP {code}"),
                wait: retry_after,
            }),
            code => Err(Failure::Fatal(LlmError::Rejected { status: code, body: truncate(&text, 500) })),
        }
    }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}…", &s[..i]),
        None => s.to_string(),
    }
}
