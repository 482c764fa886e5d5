use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use log::warn;
use rand::Rng;
use serde_json::{json, Value};

use super::{BackendConfig, BackendError, BackendKind, CompletionBackend};

/// Environment variable holding the bearer token for HTTP endpoints.
pub const API_KEY_ENV: &str = "PROMPT_MCTS_API_KEY";

const MAX_BACKOFF: Duration = Duration::from_secs(30);

/// Counting semaphore bounding in-flight requests.
struct Gate {
    limit: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(limit: usize) -> Self {
        Self { limit: limit.max(1), in_flight: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().expect("gate poisoned");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("gate poisoned");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("gate poisoned") -= 1;
        self.0.freed.notify_one();
    }
}

enum Failure {
    Transient(String),
    Fatal(BackendError),
}

/// Blocking client for an OpenAI-style chat-completions endpoint.
pub struct HttpBackend {
    config: BackendConfig,
    url: String,
    agent: ureq::Agent,
    api_key: Option<String>,
    gate: Gate,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        if config.kind != BackendKind::Http {
            return Err(BackendError::Config("HttpBackend needs kind = http".into()));
        }
        let endpoint = config.endpoint.clone().unwrap_or_default();
        let url = format!("{}/chat/completions", endpoint.trim_end_matches('/'));
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.request_timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        let gate = Gate::new(config.max_parallel);
        Ok(Self { config, url, agent, api_key, gate })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn request_body(&self, input: &str) -> Value {
        json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": input}],
            "temperature": self.config.temperature,
        })
    }

    fn attempt(&self, body: &str) -> Result<String, Failure> {
        let _permit = self.gate.acquire();
        let mut request = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = request.send(body).map_err(classify_transport)?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Transient(format!("reading response body: {e}")))?;
        match status {
            200..=299 => parse_completion(&text).map_err(Failure::Fatal),
            408 | 429 | 500..=599 => Err(Failure::Transient(format!("HTTP {status}"))),
            _ => Err(Failure::Fatal(BackendError::Config(format!("HTTP {status}: {}", snippet(&text))))),
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = Duration::from_millis(self.config.retry_base_delay_ms);
        let exp = base.saturating_mul(1u32 << attempt.min(16)).min(MAX_BACKOFF);
        exp.mul_f64(rand::thread_rng().gen_range(0.5..=1.0))
    }
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, input: &str) -> Result<String, BackendError> {
        let body = self.request_body(input).to_string();
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(msg)) => {
                    warn!("{} attempt {}/{attempts} failed: {msg}", self.url, attempt + 1);
                    last = msg;
                    if attempt + 1 < attempts {
                        thread::sleep(self.backoff(attempt));
                    }
                }
            }
        }
        Err(BackendError::Unavailable { attempts, message: last })
    }
}

fn classify_transport(e: ureq::Error) -> Failure {
    match e {
        ureq::Error::BadUri(_) | ureq::Error::Http(_) | ureq::Error::InvalidProxyUrl => {
            Failure::Fatal(BackendError::Config(e.to_string()))
        }
        other => Failure::Transient(other.to_string()),
    }
}

fn parse_completion(text: &str) -> Result<String, BackendError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| BackendError::InvalidResponse(format!("{e}: {}", snippet(text))))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::InvalidResponse(format!("no choices[0].message.content in {}", snippet(text))))
}

fn snippet(text: &str) -> String {
    text.chars().take(200).collect()
}
