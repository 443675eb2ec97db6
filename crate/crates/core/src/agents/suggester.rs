use serde::{Deserialize, Serialize};

use super::prompts::RHYME_CANDIDATES_PREFIX;
use super::{AgentError, GenerationContext, RhymeMode, Slot};
use crate::phonology::Phonology;

/// A rhyme class and characters in it, for the Creator prompt.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RhymeSuggestion {
    pub class: Option<String>,
    pub candidates: Vec<char>,
}

impl RhymeSuggestion {
    pub fn is_empty(&self) -> bool {
        self.class.is_none() && self.candidates.is_empty()
    }

    /// Prompt section body, or `None` when there is nothing to suggest.
    pub fn render(&self) -> Option<String> {
        let class = self.class.as_ref()?;
        let list: Vec<String> = self.candidates.iter().map(char::to_string).collect();
        Some(format!(
            "rhyme class: {class}\n{RHYME_CANDIDATES_PREFIX}{}",
            list.join(" ")
        ))
    }

    pub fn candidates_text(&self) -> String {
        self.candidates.iter().collect()
    }
}

/// Auto mode locks to the class of the first line's last sung character, so
/// the first segment gets an empty suggestion. A first line ending on a
/// character outside the lexicon also leaves the suggestion empty.
pub fn suggest_rhyme(
    ctx: &GenerationContext<'_>,
    ph: &Phonology,
    limit: usize,
) -> Result<RhymeSuggestion, AgentError> {
    let cls = match ctx.rhyme_mode {
        RhymeMode::Off => {
            return Err(AgentError::Context(
                "rhyme suggestion requested with rhyme off".into(),
            ))
        }
        RhymeMode::Class(name) => ph.rhymes.by_name(name)?,
        RhymeMode::Auto => {
            let last = ctx.lyrics_so_far.first().and_then(|l| {
                l.slots().iter().rev().find_map(|s| match s {
                    Slot::Char(c) => Some(*c),
                    Slot::Rest => None,
                })
            });
            match last.map(|c| ph.rhyme_class_of(c)) {
                Some(Ok(cls)) => cls,
                _ => return Ok(RhymeSuggestion::default()),
            }
        }
    };
    Ok(RhymeSuggestion {
        class: Some(cls.name().to_string()),
        candidates: ph.suggestions(cls, limit),
    })
}
