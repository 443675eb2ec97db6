//! Agent personas and prompt builders. Scripted test programs recognize a
//! role by the persona its prompt starts with.

use crate::control::{render_prompt, Method, PromptSpec};

pub const SYSTEM_PROMPT: &str =
    "You are one member of a team writing Mandarin song lyrics to an existing melody. Follow the \
output format you are given exactly.";

pub const CREATOR_PERSONA: &str =
    "You are an experienced Mandarin lyricist who writes singable lines that fit a melody.";
pub const CHECKER_PERSONA: &str =
    "You are a careful lyric editor who reviews whether a new line fits the song so far.";
pub const JUDGER_PERSONA: &str =
    "You are the lead songwriter who picks the best candidate line for the song.";

/// Line prefix for the rhyme candidate list inside the creator prompt.
pub const RHYME_CANDIDATES_PREFIX: &str = "candidates: ";
/// Section label prefix for each candidate in the judger prompt.
pub const CANDIDATE_LABEL: &str = "### Candidate ";

const CREATOR_OBJECTIVE: &str = "Write one lyric line for the melody segment described below, \
one Chinese character per sung note. Where the melody rises between two notes, the second \
character's tone should sit higher than the first (tone heights, high to low: tone 1, tone 4, \
tone 2, tone 3); where it falls, lower. Keep the line consistent with the preceding lyrics and \
the requirements. If a rhyme suggestion is given, end the line on one of the suggested \
characters or another character of the same rhyme class.";

const CHECKER_OBJECTIVE: &str = "Rate how consistent the new line is with the preceding lyrics \
in theme, imagery and voice, from 1 (unrelated) to 5 (seamless). Put the single digit score \
alone inside a ``` fenced block, then give one sentence of feedback after the block.";

const JUDGER_OBJECTIVE: &str = "Choose the candidate line that best fits the melody and the \
song so far, using the checker feedback where given (fewer tone mismatches is better, higher \
consistency is better). Reply with a ``` fenced block containing either `SELECT <index>` using \
the candidate index shown, or `REGENERATE` if no candidate is acceptable.";

pub fn creator_spec(blanks: usize) -> PromptSpec {
    PromptSpec::new(CREATOR_PERSONA, CREATOR_OBJECTIVE, Method::FillInBlank)
        .blanks(blanks)
        .example(
            "Characters needed: 3\nNotes: 60 64 62",
            "1.【春】\n2.【风】\n3.【起】",
        )
}

pub fn checker_spec() -> PromptSpec {
    PromptSpec::new(CHECKER_PERSONA, CHECKER_OBJECTIVE, Method::Formatting)
}

pub fn judger_spec() -> PromptSpec {
    PromptSpec::new(JUDGER_PERSONA, JUDGER_OBJECTIVE, Method::Formatting)
}

/// Every agent prompt rendered with placeholder payloads, for audit dumps.
pub fn prompt_templates() -> Vec<(&'static str, String)> {
    let placeholder = "{payload}";
    vec![
        (
            "creator",
            render_prompt(&creator_spec(5), placeholder).expect("valid spec"),
        ),
        (
            "checker",
            render_prompt(&checker_spec(), placeholder).expect("valid spec"),
        ),
        (
            "judger",
            render_prompt(&judger_spec(), placeholder).expect("valid spec"),
        ),
    ]
}
