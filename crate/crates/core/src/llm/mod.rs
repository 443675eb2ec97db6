//! Completion backends.
//!
//! Every model call in the pipeline goes through [`LlmClient`]. Three
//! backends exist: an OpenAI-compatible HTTP client, a record/replay store
//! keyed by a request digest, and scripted programs for tests.

mod config;
mod http;
mod replay;
pub mod scripted;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{build_client, BackendConfig, ClientConfig, ReplayMode, API_KEY_ENV};
pub use http::{HttpClient, Transport, UreqTransport};
pub use replay::{parse_fixtures, FixtureEntry, ReplayClient};
pub use scripted::{Program, ScriptedClient};

/// Version tag mixed into every request digest. Bump when the key function
/// changes so old fixtures miss loudly instead of matching wrongly.
pub const DIGEST_VERSION: &str = "m2l-replay/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_id: String,
}

impl CompletionRequest {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        CompletionRequest {
            system: system.into(),
            user: user.into(),
            temperature: 0.7,
            max_tokens: 512,
            model_id: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.user.is_empty() {
            return Err(LlmError::InvalidRequest("user message is empty".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} must be >= 0",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest(
                "max_tokens must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Fixture key: SHA-256 over the version tag and the JSON encoding of
    /// `(system, user, model_id, temperature)`. `max_tokens` is not part of
    /// the key.
    pub fn digest(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            system: &'a str,
            user: &'a str,
            model_id: &'a str,
            temperature: f64,
        }
        let key = serde_json::to_string(&Key {
            system: &self.system,
            user: &self.user,
            model_id: &self.model_id,
            temperature: self.temperature,
        })
        .expect("key serialization is infallible");
        let mut h = Sha256::new();
        h.update(DIGEST_VERSION.as_bytes());
        h.update([0u8]);
        h.update(key.as_bytes());
        hex::encode(h.finalize())
    }
}

/// SHA-256 hex of arbitrary text, used for trace digests.
pub fn text_digest(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("network error for request {digest}: {msg}")]
    Network { digest: String, msg: String },
    #[error("timeout for request {digest}")]
    Timeout { digest: String },
    #[error("HTTP {status} for request {digest}: {body}")]
    Status {
        digest: String,
        status: u16,
        body: String,
    },
    #[error("malformed response for request {digest}: {msg}")]
    Response { digest: String, msg: String },
    #[error("no fixture for request {digest}")]
    ReplayMiss { digest: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("scripted program failed for request {digest}: {msg}")]
    Scripted { digest: String, msg: String },
    #[error("fixture store: {0}")]
    Store(String),
    #[error("client config: {0}")]
    Config(String),
}

impl LlmError {
    /// Errors the retry policy may retry.
    pub fn is_retriable(&self) -> bool {
        match self {
            LlmError::Network { .. } | LlmError::Timeout { .. } => true,
            LlmError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError>;

    /// Model identifier placed into requests built for this client.
    fn model_id(&self) -> &str;
}

impl<T: LlmClient + ?Sized> LlmClient for Box<T> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(req)
    }

    fn model_id(&self) -> &str {
        (**self).model_id()
    }
}

impl<T: LlmClient + ?Sized> LlmClient for std::sync::Arc<T> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(req)
    }

    fn model_id(&self) -> &str {
        (**self).model_id()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff_ms: 500,
            multiplier: 2.0,
            max_backoff_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.max_attempts == 0 {
            return Err(LlmError::Config("retry.max_attempts must be >= 1".into()));
        }
        if !(self.multiplier.is_finite() && self.multiplier >= 1.0) {
            return Err(LlmError::Config("retry.multiplier must be >= 1".into()));
        }
        if self.max_backoff_ms < self.initial_backoff_ms {
            return Err(LlmError::Config(
                "retry.max_backoff_ms must be >= initial_backoff_ms".into(),
            ));
        }
        Ok(())
    }

    /// Sleep before attempt `n + 1` (after the n-th failure, n starting at 1).
    /// Non-decreasing in `n` and capped at `max_backoff_ms`.
    pub fn backoff(&self, n: u32) -> Duration {
        let exp = self.multiplier.powi(n.saturating_sub(1).min(64) as i32);
        let ms = (self.initial_backoff_ms as f64 * exp).min(self.max_backoff_ms as f64);
        Duration::from_millis(ms as u64)
    }

    /// Runs `f` until it succeeds, fails with a non-retriable error, or
    /// `max_attempts` calls have been made.
    pub fn run<T>(
        &self,
        mut f: impl FnMut() -> Result<T, LlmError>,
        mut sleep: impl FnMut(Duration),
    ) -> Result<T, LlmError> {
        let mut attempt = 1;
        loop {
            match f() {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retriable() && attempt < self.max_attempts => {
                    sleep(self.backoff(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn digest_stable_and_keyed() {
        let a = CompletionRequest::new("sys", "user");
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        b.max_tokens = 9;
        assert_eq!(a.digest(), b.digest());
        b.temperature = 0.0;
        assert_ne!(a.digest(), b.digest());
        let mut c = a.clone();
        c.model_id = "m".into();
        assert_ne!(a.digest(), c.digest());
        // field boundaries matter
        let d = CompletionRequest::new("sysu", "ser");
        assert_ne!(a.digest(), d.digest());
    }

    #[test]
    fn request_validation() {
        assert!(CompletionRequest::new("s", "").validate().is_err());
        let mut r = CompletionRequest::new("s", "u");
        r.temperature = -1.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn retry_stops_on_fatal() {
        let p = RetryPolicy::default();
        let mut n = 0;
        let r: Result<(), _> = p.run(
            || {
                n += 1;
                Err(LlmError::Status {
                    digest: "d".into(),
                    status: 400,
                    body: String::new(),
                })
            },
            |_| {},
        );
        assert!(r.is_err());
        assert_eq!(n, 1);
    }

    proptest! {
        #[test]
        fn retry_bounded(max in 1u32..8, fail_for in 0u32..12, init in 0u64..1000, mult in 1.0f64..4.0) {
            let p = RetryPolicy { max_attempts: max, initial_backoff_ms: init, multiplier: mult, max_backoff_ms: 10_000 };
            let mut calls = 0;
            let mut sleeps = Vec::new();
            let r = p.run(
                || {
                    calls += 1;
                    if calls <= fail_for {
                        Err(LlmError::Timeout { digest: "d".into() })
                    } else {
                        Ok(calls)
                    }
                },
                |d| sleeps.push(d),
            );
            prop_assert!(calls <= max);
            prop_assert_eq!(r.is_ok(), fail_for < max);
            prop_assert!(sleeps.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(sleeps.len() as u32, calls - 1);
        }
    }
}
