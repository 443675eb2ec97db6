//! Record/replay fixture store.
//!
//! Fixture files are line-delimited JSON, one [`FixtureEntry`] per line,
//! keyed by [`CompletionRequest::digest`].

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{CompletionRequest, LlmClient, LlmError, ReplayMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub key: String,
    pub request: RequestSummary,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestSummary {
    pub model_id: String,
    pub temperature: f64,
    pub system_head: String,
    pub user_head: String,
}

fn head(s: &str) -> String {
    s.chars().take(80).collect()
}

impl FixtureEntry {
    pub fn new(req: &CompletionRequest, response: impl Into<String>) -> Self {
        FixtureEntry {
            key: req.digest(),
            request: RequestSummary {
                model_id: req.model_id.clone(),
                temperature: req.temperature,
                system_head: head(&req.system),
                user_head: head(&req.user),
            },
            response: response.into(),
        }
    }
}

/// Parses fixture text. Later lines win on duplicate keys.
pub fn parse_fixtures(text: &str) -> Result<HashMap<String, FixtureEntry>, LlmError> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: FixtureEntry = serde_json::from_str(line)
            .map_err(|err| LlmError::Store(format!("line {}: {err}", i + 1)))?;
        map.insert(e.key.clone(), e);
    }
    Ok(map)
}

pub struct ReplayClient {
    path: Option<PathBuf>,
    model_id: String,
    store: Mutex<HashMap<String, FixtureEntry>>,
    upstream: Option<Box<dyn LlmClient>>,
}

impl ReplayClient {
    /// Strict replay: lookups only. There is no upstream client, so a miss
    /// can never reach the network.
    pub fn strict(path: &Path, model_id: impl Into<String>) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Store(format!("{}: {e}", path.display())))?;
        Ok(ReplayClient {
            path: None,
            model_id: model_id.into(),
            store: Mutex::new(parse_fixtures(&text)?),
            upstream: None,
        })
    }

    /// Strict replay over in-memory fixture text.
    pub fn from_fixtures(text: &str, model_id: impl Into<String>) -> Result<Self, LlmError> {
        Ok(ReplayClient {
            path: None,
            model_id: model_id.into(),
            store: Mutex::new(parse_fixtures(text)?),
            upstream: None,
        })
    }

    /// Record mode: hits are served from the file, misses go to `upstream`
    /// and are appended. The file is created if absent.
    pub fn record(path: &Path, upstream: Box<dyn LlmClient>) -> Result<Self, LlmError> {
        let store = match std::fs::read_to_string(path) {
            Ok(t) => parse_fixtures(&t)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => HashMap::new(),
            Err(e) => return Err(LlmError::Store(format!("{}: {e}", path.display()))),
        };
        Ok(ReplayClient {
            path: Some(path.to_path_buf()),
            model_id: upstream.model_id().to_string(),
            store: Mutex::new(store),
            upstream: Some(upstream),
        })
    }

    pub fn mode(&self) -> ReplayMode {
        if self.upstream.is_some() {
            ReplayMode::Record
        } else {
            ReplayMode::Strict
        }
    }

    pub fn len(&self) -> usize {
        self.store.lock().expect("fixture lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl LlmClient for ReplayClient {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        req.validate()?;
        let key = req.digest();
        if let Some(e) = self.store.lock().expect("fixture lock").get(&key) {
            return Ok(e.response.clone());
        }
        let Some(upstream) = &self.upstream else {
            return Err(LlmError::ReplayMiss { digest: key });
        };
        let response = upstream.complete(req)?;
        let entry = FixtureEntry::new(req, response.clone());
        let line = serde_json::to_string(&entry).expect("fixture serialization") + "\n";
        // one lock covers the map insert and the append so lines never interleave
        let mut store = self.store.lock().expect("fixture lock");
        if let Entry::Vacant(slot) = store.entry(key) {
            if let Some(path) = &self.path {
                let mut f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| LlmError::Store(format!("{}: {e}", path.display())))?;
                f.write_all(line.as_bytes())
                    .map_err(|e| LlmError::Store(e.to_string()))?;
            }
            slot.insert(entry);
        }
        Ok(response)
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }
}
