//! Deterministic scripted backends for tests, benchmarks and fixture
//! recording.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CompletionRequest, LlmClient, LlmError};
use crate::agents::prompts::{
    CANDIDATE_LABEL, CHECKER_PERSONA, CREATOR_PERSONA, JUDGER_PERSONA, RHYME_CANDIDATES_PREFIX,
};
use crate::control::{FENCE, GRID_CLOSE, GRID_OPEN};

type Responder = dyn Fn(&CompletionRequest) -> Result<String, LlmError> + Send + Sync;

/// A client whose answers come from a Rust closure.
pub struct ScriptedClient {
    model_id: String,
    respond: Box<Responder>,
    calls: AtomicUsize,
}

impl ScriptedClient {
    pub fn new<F>(model_id: impl Into<String>, f: F) -> Self
    where
        F: Fn(&CompletionRequest) -> Result<String, LlmError> + Send + Sync + 'static,
    {
        ScriptedClient {
            model_id: model_id.into(),
            respond: Box::new(f),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn program(program: Program, model_id: impl Into<String>) -> Self {
        let model_id = model_id.into();
        match program {
            Program::Echo => Self::new(model_id, |r: &CompletionRequest| Ok(r.user.clone())),
            Program::Lyricist { seed } => {
                Self::new(model_id, move |r: &CompletionRequest| Ok(lyricist(r, seed)))
            }
            Program::FixedLength { chars } => Self::new(model_id, move |r: &CompletionRequest| {
                let line = line_of(chars, 0);
                if grid_slots(&r.user) > 0 {
                    Ok(fill_grid(&line.chars().collect::<Vec<_>>()))
                } else {
                    Ok(format!("{FENCE}{line}{FENCE}"))
                }
            }),
            Program::Adversarial { valid_lines } => {
                Self::new(model_id, move |r: &CompletionRequest| {
                    Ok(adversary(r, valid_lines))
                })
            }
            Program::Sequence { responses } => {
                let next = AtomicUsize::new(0);
                Self::new(model_id, move |r: &CompletionRequest| {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    responses.get(i).cloned().ok_or_else(|| LlmError::Scripted {
                        digest: r.digest(),
                        msg: format!("sequence exhausted after {} responses", responses.len()),
                    })
                })
            }
        }
    }

    /// Number of `complete` calls so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        req.validate()?;
        (self.respond)(req)
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }
}

/// Built-in scripted programs selectable from a client config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Program {
    /// Returns the user message unchanged.
    Echo,
    /// Cooperative role-aware responder: fills every grid slot, scores
    /// consistency 3 to 5, selects a candidate. Choices derive from the
    /// request digest and `seed`.
    Lyricist {
        #[serde(default)]
        seed: u64,
    },
    /// Always answers with exactly `chars` characters whatever was asked:
    /// one per slot when the prompt has a fill-in grid, else a fenced line.
    FixedLength { chars: usize },
    /// Misbehaves in every role: wrong line lengths (unless `valid_lines`),
    /// endless regeneration requests, unparseable verdicts and scores.
    Adversarial {
        #[serde(default)]
        valid_lines: bool,
    },
    /// Replies with the given responses in call order, then fails.
    Sequence { responses: Vec<String> },
}

const POOL: &[char] = &[
    '春', '风', '花', '月', '夜', '星', '河', '山', '水', '云', '天', '心', '梦', '光', '影', '雨',
    '雪', '歌', '海', '城', '路', '远', '长', '明', '清', '静', '飞', '落', '红', '青', '白', '深',
    '望', '等', '走', '来', '去', '看', '听', '想', '念', '笑', '泪', '情', '人', '家', '灯', '窗',
];

fn hash(r: &CompletionRequest, seed: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(r.digest().as_bytes());
    h.finalize().into()
}

fn line_of(n: usize, offset: usize) -> String {
    (0..n)
        .map(|i| POOL[(i * 7 + offset) % POOL.len()])
        .collect()
}

fn grid_slots(user: &str) -> usize {
    user.matches(&format!("{GRID_OPEN}{GRID_CLOSE}")).count()
}

fn fill_grid(chars: &[char]) -> String {
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}.{GRID_OPEN}{c}{GRID_CLOSE}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

fn rhyme_hint(user: &str) -> Option<char> {
    user.lines()
        .find_map(|l| l.strip_prefix(RHYME_CANDIDATES_PREFIX))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|w| w.chars().next())
}

fn lyricist(r: &CompletionRequest, seed: u64) -> String {
    let h = hash(r, seed);
    if r.user.starts_with(JUDGER_PERSONA) {
        let n = r.user.matches(CANDIDATE_LABEL).count().max(1);
        return format!("{FENCE}SELECT {}{FENCE}", h[0] as usize % n);
    }
    if r.user.starts_with(CHECKER_PERSONA) {
        return format!(
            "{FENCE}{}{FENCE}\nThe new line keeps the imagery of the earlier ones.",
            3 + h[0] % 3
        );
    }
    let n = grid_slots(&r.user);
    if n > 0 {
        let mut chars: Vec<char> = (0..n)
            .map(|i| POOL[h[i % 32] as usize % POOL.len()])
            .collect();
        if let Some(c) = rhyme_hint(&r.user) {
            chars[n - 1] = c;
        }
        return fill_grid(&chars);
    }
    let len = 4 + h[1] as usize % 9;
    format!("{FENCE}{}{FENCE}", line_of(len, h[2] as usize))
}

fn adversary(r: &CompletionRequest, valid_lines: bool) -> String {
    let h = hash(r, 0);
    if r.user.starts_with(JUDGER_PERSONA) {
        return match h[0] % 3 {
            0 => format!("{FENCE}REGENERATE{FENCE}"),
            1 => "I cannot decide between these.".to_string(),
            _ => format!("{FENCE}SELECT 99{FENCE}"),
        };
    }
    if r.user.starts_with(CHECKER_PERSONA) {
        return "Score: very good!!".to_string();
    }
    let n = grid_slots(&r.user);
    if r.user.starts_with(CREATOR_PERSONA) || n > 0 {
        if valid_lines && n > 0 {
            return fill_grid(&line_of(n, h[1] as usize).chars().collect::<Vec<_>>());
        }
        return match h[0] % 3 {
            0 => fill_grid(&line_of(n + 1, 0).chars().collect::<Vec<_>>()),
            1 => format!("{GRID_OPEN}unterminated"),
            _ => "Here is a lovely lyric about the moon.".to_string(),
        };
    }
    "??".to_string()
}
