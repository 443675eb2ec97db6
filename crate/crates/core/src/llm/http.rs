//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use serde_json::{json, Value};

use super::{CompletionRequest, LlmClient, LlmError, RetryPolicy};

/// Raw HTTP POST of a JSON body. Split out so tests can count or forbid
/// network use.
pub trait Transport: Send + Sync {
    /// Returns `(status, body)`.
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<(u16, String), TransportError>;
}

#[derive(Debug)]
pub enum TransportError {
    Timeout,
    Other(String),
}

#[derive(Debug, Default)]
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<(u16, String), TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = bearer {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let map = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Other(other.to_string()),
        };
        let mut resp = req.send_json(body).map_err(map)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(map)?;
        Ok((status, text))
    }
}

pub struct HttpClient {
    endpoint: String,
    model_id: String,
    api_key: Option<String>,
    timeout: Duration,
    retry: RetryPolicy,
    transport: Box<dyn Transport>,
}

impl HttpClient {
    pub fn new(
        endpoint: impl Into<String>,
        model_id: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Self {
        Self::with_transport(
            endpoint,
            model_id,
            api_key,
            timeout,
            retry,
            Box::new(UreqTransport),
        )
    }

    pub fn with_transport(
        endpoint: impl Into<String>,
        model_id: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
        retry: RetryPolicy,
        transport: Box<dyn Transport>,
    ) -> Self {
        HttpClient {
            endpoint: endpoint.into(),
            model_id: model_id.into(),
            api_key,
            timeout,
            retry,
            transport,
        }
    }

    /// The chat-completions request body.
    pub fn wire_body(&self, req: &CompletionRequest) -> Value {
        let model = if req.model_id.is_empty() {
            &self.model_id
        } else {
            &req.model_id
        };
        json!({
            "model": model,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        })
    }

    fn attempt(&self, req: &CompletionRequest, digest: &str) -> Result<String, LlmError> {
        let body = self.wire_body(req);
        let (status, text) = self
            .transport
            .post_json(&self.endpoint, self.api_key.as_deref(), &body, self.timeout)
            .map_err(|e| match e {
                TransportError::Timeout => LlmError::Timeout {
                    digest: digest.to_string(),
                },
                TransportError::Other(msg) => LlmError::Network {
                    digest: digest.to_string(),
                    msg,
                },
            })?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Status {
                digest: digest.to_string(),
                status,
                body: text.chars().take(500).collect(),
            });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| LlmError::Response {
            digest: digest.to_string(),
            msg: e.to_string(),
        })?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| LlmError::Response {
                digest: digest.to_string(),
                msg: "missing choices[0].message.content".into(),
            })
    }
}

impl LlmClient for HttpClient {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        req.validate()?;
        let digest = req.digest();
        self.retry
            .run(|| self.attempt(req, &digest), std::thread::sleep)
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }
}
