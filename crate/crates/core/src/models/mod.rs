//! Completion backends for the base and optimizer models.
//!
//! [`HttpBackend`] talks to an OpenAI-style `chat/completions` endpoint.
//! [`SimulatedBase`] and [`SimulatedOptimizer`] are deterministic stand-ins
//! driven by a [`SimulatedLandscape`], where prompt quality is a known
//! function of keyword coverage.

mod http;
mod simulated;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, API_KEY_ENV};
pub use simulated::{
    mentioned_keywords, prompt_mentions, LandscapeExample, LandscapeParams, SimulatedBase, SimulatedLandscape,
    SimulatedOptimizer,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend unavailable after {attempts} attempts: {message}")]
    Unavailable { attempts: u32, message: String },
    #[error("backend configuration error: {0}")]
    Config(String),
    #[error("malformed backend response: {0}")]
    InvalidResponse(String),
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, input: &str) -> Result<String, BackendError>;
}

impl<F> CompletionBackend for F
where
    F: Fn(&str) -> Result<String, BackendError> + Send + Sync,
{
    fn complete(&self, input: &str) -> Result<String, BackendError> {
        self(input)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Base,
    Optimizer,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    #[default]
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub role: Role,
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub request_timeout_ms: u64,
    pub max_parallel: usize,
    /// First backoff delay; doubles on every retry.
    #[serde(default = "default_retry_base_delay_ms")]
    pub retry_base_delay_ms: u64,
}

fn default_retry_base_delay_ms() -> u64 {
    500
}

impl BackendConfig {
    /// Defaults for a role: the base model predicts greedily (temperature 0),
    /// the optimizer samples at temperature 1.
    pub fn for_role(role: Role) -> Self {
        Self {
            role,
            kind: BackendKind::Simulated,
            endpoint: None,
            model_name: String::new(),
            temperature: match role {
                Role::Base => 0.0,
                Role::Optimizer => 1.0,
            },
            max_retries: 5,
            request_timeout_ms: 60_000,
            max_parallel: 8,
            retry_base_delay_ms: default_retry_base_delay_ms(),
        }
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_millis(self.request_timeout_ms)
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.kind == BackendKind::Http && self.endpoint.as_deref().map_or(true, |e| e.trim().is_empty()) {
            return Err(BackendError::Config("http backends need an endpoint".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(BackendError::Config("temperature must be >= 0".into()));
        }
        if self.max_parallel == 0 {
            return Err(BackendError::Config("max_parallel must be at least 1".into()));
        }
        Ok(())
    }

    /// Instantiates the backend. Simulated backends need a landscape.
    pub fn build(&self, landscape: Option<&Arc<SimulatedLandscape>>) -> Result<Arc<dyn CompletionBackend>, BackendError> {
        self.validate()?;
        match self.kind {
            BackendKind::Http => Ok(Arc::new(HttpBackend::new(self.clone())?)),
            BackendKind::Simulated => {
                let landscape = landscape
                    .ok_or_else(|| BackendError::Config("simulated backends need a landscape".into()))?
                    .clone();
                Ok(match self.role {
                    Role::Base => Arc::new(SimulatedBase::new(landscape)),
                    Role::Optimizer => Arc::new(SimulatedOptimizer::new(landscape.keyword_pool.clone())),
                })
            }
        }
    }
}

/// Call and work counters shared by every code path that touches a model.
#[derive(Debug, Default)]
pub struct Counters {
    base_calls: AtomicU64,
    optimizer_calls: AtomicU64,
    evaluations: AtomicU64,
    expansions: AtomicU64,
    error_batches: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub base_calls: u64,
    pub optimizer_calls: u64,
    pub evaluations: u64,
    pub expansions: u64,
    pub error_batches: u64,
}

impl Counters {
    pub fn model_calls(&self) -> u64 {
        self.base_calls.load(Ordering::SeqCst) + self.optimizer_calls.load(Ordering::SeqCst)
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            base_calls: self.base_calls.load(Ordering::SeqCst),
            optimizer_calls: self.optimizer_calls.load(Ordering::SeqCst),
            evaluations: self.evaluations.load(Ordering::SeqCst),
            expansions: self.expansions.load(Ordering::SeqCst),
            error_batches: self.error_batches.load(Ordering::SeqCst),
        }
    }

    pub(crate) fn record_evaluation(&self) {
        self.evaluations.fetch_add(1, Ordering::SeqCst);
    }

    pub(crate) fn record_expansion(&self) {
        self.expansions.fetch_add(1, Ordering::SeqCst);
    }

    pub(crate) fn record_error_batch(&self) {
        self.error_batches.fetch_add(1, Ordering::SeqCst);
    }
}

/// The base/optimizer pair used by a run.
#[derive(Clone)]
pub struct Backends {
    base: Arc<dyn CompletionBackend>,
    optimizer: Arc<dyn CompletionBackend>,
    max_parallel: usize,
    counters: Arc<Counters>,
}

impl std::fmt::Debug for Backends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backends").field("max_parallel", &self.max_parallel).finish_non_exhaustive()
    }
}

impl Backends {
    pub fn new(base: Arc<dyn CompletionBackend>, optimizer: Arc<dyn CompletionBackend>) -> Self {
        Self { base, optimizer, max_parallel: 1, counters: Arc::new(Counters::default()) }
    }

    pub fn from_configs(
        base: &BackendConfig,
        optimizer: &BackendConfig,
        landscape: Option<&Arc<SimulatedLandscape>>,
    ) -> Result<Self, BackendError> {
        Ok(Self::new(base.build(landscape)?, optimizer.build(landscape)?).with_max_parallel(base.max_parallel))
    }

    /// Simulated base and optimizer over one landscape.
    pub fn simulated(landscape: Arc<SimulatedLandscape>) -> Self {
        let optimizer = SimulatedOptimizer::new(landscape.keyword_pool.clone());
        Self::new(Arc::new(SimulatedBase::new(landscape)), Arc::new(optimizer))
    }

    /// Bound on concurrent base-model calls during evaluation fan-out.
    pub fn with_max_parallel(mut self, max_parallel: usize) -> Self {
        self.max_parallel = max_parallel.max(1);
        self
    }

    pub fn max_parallel(&self) -> usize {
        self.max_parallel
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn base_complete(&self, input: &str) -> Result<String, BackendError> {
        check_input(input)?;
        self.counters.base_calls.fetch_add(1, Ordering::SeqCst);
        self.base.complete(input)
    }

    pub fn optimizer_complete(&self, input: &str) -> Result<String, BackendError> {
        check_input(input)?;
        self.counters.optimizer_calls.fetch_add(1, Ordering::SeqCst);
        self.optimizer.complete(input)
    }

    #[cfg(test)]
    pub(crate) fn fixed(reply: &'static str) -> Self {
        Self::new(Arc::new(move |_: &str| Ok(reply.to_string())), Arc::new(move |_: &str| Ok(reply.to_string())))
    }
}

fn check_input(input: &str) -> Result<(), BackendError> {
    if input.trim().is_empty() {
        return Err(BackendError::Config("completion input must not be empty".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_temperatures() {
        assert_eq!(BackendConfig::for_role(Role::Base).temperature, 0.0);
        assert_eq!(BackendConfig::for_role(Role::Optimizer).temperature, 1.0);
    }

    #[test]
    fn http_requires_endpoint() {
        let mut cfg = BackendConfig::for_role(Role::Base);
        cfg.kind = BackendKind::Http;
        assert!(matches!(cfg.validate(), Err(BackendError::Config(_))));
        cfg.endpoint = Some("http://localhost:1".into());
        cfg.validate().unwrap();
    }

    #[test]
    fn simulated_requires_landscape() {
        let cfg = BackendConfig::for_role(Role::Base);
        assert!(cfg.build(None).is_err());
    }

    #[test]
    fn counts_calls_and_rejects_empty_input() {
        let b = Backends::fixed("ok");
        b.base_complete("x").unwrap();
        b.optimizer_complete("y").unwrap();
        assert!(b.base_complete("  ").is_err());
        assert_eq!(b.counters().model_calls(), 2);
    }
}
