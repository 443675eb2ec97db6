use serde::{Deserialize, Serialize};

use super::Role;
use crate::llm::text_digest;

/// What an agent invocation produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Suggestion {
        class: Option<String>,
        candidates: String,
    },
    Candidate {
        text: String,
    },
    Rejected {
        reason: String,
    },
    Feedback {
        mismatch_count: usize,
        consistency_score: Option<u8>,
        note: String,
    },
    Verdict {
        decision: String,
        coerced: bool,
    },
    Unparsed {
        reason: String,
    },
    ModelError {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub segment: usize,
    pub round: usize,
    pub agent: Role,
    /// Candidate index for per-candidate invocations.
    pub candidate: Option<usize>,
    /// 0 for the first call, incremented per retry.
    pub attempt: usize,
    /// Request digest; `None` for invocations that make no model call.
    pub prompt_digest: Option<String>,
    pub response_digest: Option<String>,
    pub outcome: Outcome,
}

/// Append-only log of agent invocations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentTrace {
    entries: Vec<TraceEntry>,
}

impl AgentTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, e: TraceEntry) {
        self.entries.push(e);
    }

    pub fn extend(&mut self, es: impl IntoIterator<Item = TraceEntry>) {
        self.entries.extend(es);
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries that made a model call.
    pub fn model_calls(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.prompt_digest.is_some())
            .count()
    }

    /// Line-delimited JSON, one entry per line.
    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("trace serialization") + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AgentTrace { entries })
    }

    /// SHA-256 of [`AgentTrace::to_jsonl`].
    pub fn digest(&self) -> String {
        text_digest(&self.to_jsonl())
    }
}
