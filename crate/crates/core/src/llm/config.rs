use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{HttpClient, LlmClient, LlmError, Program, ReplayClient, RetryPolicy, ScriptedClient};

/// Environment variable holding the API key for HTTP backends. Keys are
/// never read from config files.
pub const API_KEY_ENV: &str = "M2L_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplayMode {
    Strict,
    Record,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    Http {
        endpoint: String,
        model_id: String,
    },
    Replay {
        fixture: PathBuf,
        mode: ReplayMode,
        #[serde(default)]
        model_id: Option<String>,
        /// Backend consulted on a miss in record mode.
        #[serde(default)]
        upstream: Option<Box<BackendConfig>>,
    },
    Scripted {
        program: Program,
        #[serde(default = "scripted_model")]
        model_id: String,
    },
}

fn scripted_model() -> String {
    "scripted".to_string()
}

fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    pub backend: BackendConfig,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

impl ClientConfig {
    pub fn new(backend: BackendConfig) -> Self {
        ClientConfig {
            backend,
            timeout_secs: default_timeout(),
            retry: RetryPolicy::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, LlmError> {
        let cfg: ClientConfig =
            serde_json::from_str(text).map_err(|e| LlmError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        self.retry.validate()?;
        if self.timeout_secs == 0 {
            return Err(LlmError::Config("timeout_secs must be positive".into()));
        }
        validate_backend(&self.backend)
    }
}

fn validate_backend(b: &BackendConfig) -> Result<(), LlmError> {
    match b {
        BackendConfig::Http { endpoint, .. } => {
            if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
                return Err(LlmError::Config(format!(
                    "endpoint {endpoint:?} is not an http(s) URL"
                )));
            }
            Ok(())
        }
        BackendConfig::Replay {
            mode: ReplayMode::Strict,
            upstream: Some(_),
            ..
        } => Err(LlmError::Config(
            "strict replay cannot have an upstream backend".into(),
        )),
        BackendConfig::Replay {
            mode: ReplayMode::Record,
            upstream: None,
            ..
        } => Err(LlmError::Config(
            "record mode needs an upstream backend".into(),
        )),
        BackendConfig::Replay {
            upstream: Some(u), ..
        } => validate_backend(u),
        _ => Ok(()),
    }
}

/// Builds a client. Relative fixture paths resolve against `base_dir`.
pub fn build_client(cfg: &ClientConfig, base_dir: &Path) -> Result<Box<dyn LlmClient>, LlmError> {
    cfg.validate()?;
    build_backend(&cfg.backend, cfg, base_dir)
}

fn build_backend(
    b: &BackendConfig,
    cfg: &ClientConfig,
    base_dir: &Path,
) -> Result<Box<dyn LlmClient>, LlmError> {
    Ok(match b {
        BackendConfig::Http { endpoint, model_id } => Box::new(HttpClient::new(
            endpoint.clone(),
            model_id.clone(),
            std::env::var(API_KEY_ENV).ok(),
            Duration::from_secs(cfg.timeout_secs),
            cfg.retry.clone(),
        )),
        BackendConfig::Replay {
            fixture,
            mode,
            model_id,
            upstream,
        } => {
            let path = base_dir.join(fixture);
            match (mode, upstream) {
                (ReplayMode::Strict, _) => Box::new(ReplayClient::strict(
                    &path,
                    model_id.clone().unwrap_or_default(),
                )?),
                (ReplayMode::Record, Some(u)) => Box::new(ReplayClient::record(
                    &path,
                    build_backend(u, cfg, base_dir)?,
                )?),
                (ReplayMode::Record, None) => unreachable!("validated"),
            }
        }
        BackendConfig::Scripted { program, model_id } => {
            Box::new(ScriptedClient::program(program.clone(), model_id.clone()))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_backends() {
        let c = ClientConfig::parse(
            r#"{"backend":{"type":"http","endpoint":"https://api.example.com/v1/chat/completions","model_id":"gpt-4-0125-preview"}}"#,
        )
        .unwrap();
        assert_eq!(c.timeout_secs, 60);
        let c = ClientConfig::parse(
            r#"{"backend":{"type":"scripted","program":{"kind":"lyricist","seed":3}}}"#,
        )
        .unwrap();
        let client = build_client(&c, Path::new(".")).unwrap();
        assert_eq!(client.model_id(), "scripted");
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            r#"{"backend":{"type":"http","endpoint":"https://x","model_id":"m","api_key":"sk"}}"#,
            r#"{"backend":{"type":"http","endpoint":"ftp://x","model_id":"m"}}"#,
            r#"{"backend":{"type":"replay","fixture":"f","mode":"strict","upstream":{"type":"scripted","program":{"kind":"echo"}}}}"#,
            r#"{"backend":{"type":"replay","fixture":"f","mode":"record"}}"#,
            r#"{"backend":{"type":"scripted","program":{"kind":"echo"}},"retry":{"max_attempts":0}}"#,
        ] {
            assert!(
                matches!(ClientConfig::parse(bad), Err(LlmError::Config(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn record_over_scripted() {
        let dir = tempfile::tempdir().unwrap();
        let c = ClientConfig::parse(
            r#"{"backend":{"type":"replay","fixture":"fx.jsonl","mode":"record","upstream":{"type":"scripted","program":{"kind":"echo"},"model_id":"e"}}}"#,
        )
        .unwrap();
        let client = build_client(&c, dir.path()).unwrap();
        let mut req = super::super::CompletionRequest::new("s", "u");
        req.model_id = client.model_id().to_string();
        assert_eq!(client.complete(&req).unwrap(), "u");
        assert!(dir.path().join("fx.jsonl").exists());
    }
}
