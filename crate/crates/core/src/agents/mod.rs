//! Multi-agent lyric generation.
//!
//! A song is written one melody phrase at a time. For each phrase an agent
//! group runs: the Suggester proposes rhyme characters, the Creator writes
//! `k` candidate lines through a fill-in grid, the Checker scores each
//! candidate against the tone rules and for consistency with earlier lines,
//! and the Judger selects one or asks for another round. The chosen line
//! becomes context for the next phrase.

mod checker;
mod creator;
mod judger;
mod pipeline;
pub mod prompts;
mod suggester;
mod trace;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::MelodicDirection;
use crate::control::DEFAULT_MAX_RETRIES;
use crate::llm::{CompletionRequest, LlmClient};
use crate::melody::{Melody, Phrase};
use crate::phonology::PhonologyError;
use crate::text::is_cjk_ideograph;

pub use checker::{check_candidate, parse_consistency};
pub use creator::create_candidates;
pub use judger::{coerce_best, judge, parse_verdict};
pub use pipeline::{generate_song, segment_call_budget, Generated, GenerationFailure};
pub use suggester::{suggest_rhyme, RhymeSuggestion};
pub use trace::{AgentTrace, Outcome, TraceEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Suggester,
    Creator,
    Checker,
    Judger,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("agent group must be one of C, C+J, C+Ch+J, S+C+Ch+J; got {0}")]
    InvalidGroup(String),
    #[error("group number must be 1..=4, got {0}")]
    GroupNumber(u8),
    #[error("invalid generation context: {0}")]
    Context(String),
    #[error(transparent)]
    Phonology(#[from] PhonologyError),
    #[error("segment {segment}: no valid candidate after all retries ({reasons})")]
    CreationFailed { segment: usize, reasons: String },
    #[error("line does not fit phrase: {0}")]
    Line(String),
    #[error("invalid config: {0}")]
    Config(String),
}

/// One of the four supported agent configurations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Role>", into = "Vec<Role>")]
pub struct AgentGroup {
    members: BTreeSet<Role>,
}

impl AgentGroup {
    pub fn new(members: impl IntoIterator<Item = Role>) -> Result<Self, AgentError> {
        use Role::*;
        let members: BTreeSet<Role> = members.into_iter().collect();
        let allowed: [&[Role]; 4] = [
            &[Creator],
            &[Creator, Judger],
            &[Creator, Checker, Judger],
            &[Suggester, Creator, Checker, Judger],
        ];
        if allowed
            .iter()
            .any(|a| a.iter().copied().collect::<BTreeSet<_>>() == members)
        {
            Ok(AgentGroup { members })
        } else {
            Err(AgentError::InvalidGroup(format!("{members:?}")))
        }
    }

    /// Groups 1 to 4: C; C+J; C+Ch+J; S+C+Ch+J.
    pub fn numbered(n: u8) -> Result<Self, AgentError> {
        use Role::*;
        match n {
            1 => Self::new([Creator]),
            2 => Self::new([Creator, Judger]),
            3 => Self::new([Creator, Checker, Judger]),
            4 => Self::new([Suggester, Creator, Checker, Judger]),
            _ => Err(AgentError::GroupNumber(n)),
        }
    }

    pub fn number(&self) -> u8 {
        match self.members.len() {
            1 => 1,
            2 => 2,
            3 => 3,
            _ => 4,
        }
    }

    pub fn has(&self, r: Role) -> bool {
        self.members.contains(&r)
    }

    pub fn members(&self) -> impl Iterator<Item = Role> + '_ {
        self.members.iter().copied()
    }
}

impl TryFrom<Vec<Role>> for AgentGroup {
    type Error = AgentError;

    fn try_from(v: Vec<Role>) -> Result<Self, Self::Error> {
        AgentGroup::new(v)
    }
}

impl From<AgentGroup> for Vec<Role> {
    fn from(g: AgentGroup) -> Self {
        g.members.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhymeMode {
    /// Rhyme on the class of the first line's final character.
    #[default]
    Auto,
    Class(String),
    Off,
}

impl FromStr for RhymeMode {
    type Err = std::convert::Infallible;

    /// `auto`, `off`, or a rhyme class name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "auto" => RhymeMode::Auto,
            "off" => RhymeMode::Off,
            other => RhymeMode::Class(other.to_string()),
        })
    }
}

/// A note position in a lyric line: a sung character or a rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Char(char),
    Rest,
}

/// Lyric aligned one-to-one with a phrase's notes; rests hold [`Slot::Rest`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyricLine {
    slots: Vec<Slot>,
}

impl LyricLine {
    /// Places the characters of `sung` on the phrase's non-rest notes.
    pub fn fit(phrase: &Phrase, sung: &str) -> Result<Self, AgentError> {
        let chars: Vec<char> = sung.chars().collect();
        if let Some(c) = chars.iter().find(|c| !is_cjk_ideograph(**c)) {
            return Err(AgentError::Line(format!("{c:?} is not a CJK ideograph")));
        }
        if chars.len() != phrase.syllable_count() {
            return Err(AgentError::Line(format!(
                "{} characters for {} sung notes",
                chars.len(),
                phrase.syllable_count()
            )));
        }
        let mut it = chars.into_iter();
        let slots = phrase
            .notes()
            .iter()
            .map(|n| {
                if n.is_rest() {
                    Slot::Rest
                } else {
                    Slot::Char(it.next().expect("length checked"))
                }
            })
            .collect();
        Ok(LyricLine { slots })
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Sung characters only.
    pub fn sung(&self) -> String {
        self.slots
            .iter()
            .filter_map(|s| match s {
                Slot::Char(c) => Some(*c),
                Slot::Rest => None,
            })
            .collect()
    }

    /// Full line with a space for each rest.
    pub fn text(&self) -> String {
        self.slots
            .iter()
            .map(|s| match s {
                Slot::Char(c) => *c,
                Slot::Rest => ' ',
            })
            .collect()
    }

    /// True when slot kinds line up with the phrase's notes.
    pub fn fits(&self, phrase: &Phrase) -> bool {
        self.slots.len() == phrase.len()
            && self
                .slots
                .iter()
                .zip(phrase.notes())
                .all(|(s, n)| matches!(s, Slot::Rest) == n.is_rest())
    }
}

/// Inputs available to the agents while writing one segment.
#[derive(Debug, Clone, Copy)]
pub struct GenerationContext<'a> {
    pub melody: &'a Melody,
    pub segment_index: usize,
    pub lyrics_so_far: &'a [LyricLine],
    pub requirements: Option<&'a str>,
    pub rhyme_mode: &'a RhymeMode,
}

impl<'a> GenerationContext<'a> {
    pub fn new(
        melody: &'a Melody,
        segment_index: usize,
        lyrics_so_far: &'a [LyricLine],
        requirements: Option<&'a str>,
        rhyme_mode: &'a RhymeMode,
    ) -> Result<Self, AgentError> {
        if segment_index >= melody.phrases().len() {
            return Err(AgentError::Context(format!(
                "segment {segment_index} out of range for {} phrases",
                melody.phrases().len()
            )));
        }
        if lyrics_so_far.len() != segment_index {
            return Err(AgentError::Context(format!(
                "{} preceding lines for segment {segment_index}",
                lyrics_so_far.len()
            )));
        }
        Ok(GenerationContext {
            melody,
            segment_index,
            lyrics_so_far,
            requirements,
            rhyme_mode,
        })
    }

    pub fn phrase(&self) -> &'a Phrase {
        &self.melody.phrases()[self.segment_index]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateLyric {
    pub line: LyricLine,
    pub creator_round: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchPosition {
    pub index: usize,
    pub expected: MelodicDirection,
    pub actual: MelodicDirection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerFeedback {
    pub mismatch_count: usize,
    pub mismatch_positions: Vec<MismatchPosition>,
    pub consistency_note: String,
    /// 1 to 5, or `None` when the model's answer was unavailable.
    pub consistency_score: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Select(usize),
    Regenerate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgerVerdict {
    pub decision: Decision,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Candidates per round.
    pub k: usize,
    /// Judger rounds per segment; the last round cannot regenerate.
    pub max_rounds: usize,
    /// Creator retries per candidate after a length violation.
    pub max_retries: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub rhyme_mode: RhymeMode,
    pub suggestion_limit: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 3,
            max_rounds: 2,
            max_retries: DEFAULT_MAX_RETRIES,
            temperature: 0.7,
            max_tokens: 512,
            rhyme_mode: RhymeMode::Auto,
            suggestion_limit: 20,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.k == 0 {
            return Err(AgentError::Config("k must be >= 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(AgentError::Config("max_rounds must be >= 1".into()));
        }
        if self.suggestion_limit == 0 {
            return Err(AgentError::Config("suggestion_limit must be >= 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(AgentError::Config("temperature must be >= 0".into()));
        }
        if self.max_tokens == 0 {
            return Err(AgentError::Config("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn request(
    cfg: &PipelineConfig,
    llm: &dyn LlmClient,
    user: String,
) -> CompletionRequest {
    CompletionRequest {
        system: prompts::SYSTEM_PROMPT.to_string(),
        user,
        temperature: cfg.temperature,
        max_tokens: cfg.max_tokens,
        model_id: llm.model_id().to_string(),
    }
}

/// Preceding lines, numbered, with rests shown as spaces.
pub(crate) fn render_lyrics(lines: &[LyricLine]) -> String {
    if lines.is_empty() {
        return "(none yet)".to_string();
    }
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| format!("{}. {}", i + 1, l.text()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Per-note pitch list plus the direction between consecutive sung notes.
pub(crate) fn describe_phrase(p: &Phrase) -> String {
    let notes: Vec<String> = p.notes().iter().map(|n| n.pitch().to_string()).collect();
    let sung = p.sung_pitches();
    let dirs: Vec<&str> = sung
        .windows(2)
        .map(|w| match w[1].cmp(&w[0]) {
            std::cmp::Ordering::Greater => "up",
            std::cmp::Ordering::Less => "down",
            std::cmp::Ordering::Equal => "same",
        })
        .collect();
    let rests: Vec<String> = p
        .rest_positions()
        .iter()
        .map(|i| (i + 1).to_string())
        .collect();
    format!(
        "MIDI pitches (0 = rest): {}\nSung notes: {}\nRests at note positions: {}\nDirection between sung notes: {}",
        notes.join(" "),
        sung.len(),
        if rests.is_empty() { "none".to_string() } else { rests.join(" ") },
        if dirs.is_empty() { "n/a".to_string() } else { dirs.join(" ") },
    )
}
