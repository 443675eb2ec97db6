//! Tone-melody alignment rules.
//!
//! For two consecutive sung characters the tone pair fixes a preferred
//! melodic direction. The rule table below is stored literally and is also
//! derivable from the tone ranking T1 > T4 > T2 > T3: the melody should rise
//! exactly when the next tone ranks strictly higher than the previous one.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::melody::Phrase;
use crate::phonology::Tone;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MelodicDirection {
    Ascending,
    Descending,
    Flat,
}

impl MelodicDirection {
    pub fn short(self) -> &'static str {
        match self {
            MelodicDirection::Ascending => "Asc",
            MelodicDirection::Descending => "Desc",
            MelodicDirection::Flat => "Flat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Match,
    Mismatch,
    /// Pair-free position (phrase-initial or word-initial); always counts as
    /// matched.
    Forced,
    /// Neutral tone or flat interval under the skip policy.
    Skipped,
}

/// How equal-pitch pairs are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlatPolicy {
    #[default]
    Skip,
    CountAsMatch,
    CountAsMismatch,
}

impl std::str::FromStr for FlatPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skip" => Ok(FlatPolicy::Skip),
            "count-as-match" | "match" => Ok(FlatPolicy::CountAsMatch),
            "count-as-mismatch" | "mismatch" => Ok(FlatPolicy::CountAsMismatch),
            _ => Err(format!(
                "unknown flat policy {s:?} (skip | count-as-match | count-as-mismatch)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentVerdict {
    /// Sung-character index of the later character in the pair.
    pub index: usize,
    pub expected: Option<MelodicDirection>,
    pub actual: Option<MelodicDirection>,
    pub status: Status,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlignError {
    #[error("neutral tone has no rule entry")]
    NeutralTone,
    #[error("pitch 0 is a rest and has no melodic direction")]
    RestPitch,
    #[error("tone count mismatch: phrase has {expected} sung notes, got {got} tones")]
    LengthMismatch { expected: usize, got: usize },
    #[error("word boundary {index} out of range for {len} characters")]
    Boundary { index: usize, len: usize },
}

use MelodicDirection::{Ascending as A, Descending as D};

/// Rows: previous tone T1..T4; columns: next tone T1..T4.
pub const TONE_TABLE: [[MelodicDirection; 4]; 4] =
    [[D, D, D, D], [A, D, D, A], [A, A, D, A], [A, D, D, D]];

fn lexical_index(t: Tone) -> Result<usize, AlignError> {
    match t {
        Tone::T1 => Ok(0),
        Tone::T2 => Ok(1),
        Tone::T3 => Ok(2),
        Tone::T4 => Ok(3),
        Tone::Neutral => Err(AlignError::NeutralTone),
    }
}

/// Preferred melodic direction from `prev` to `next`. Never `Flat`.
pub fn expected_direction(prev: Tone, next: Tone) -> Result<MelodicDirection, AlignError> {
    Ok(TONE_TABLE[lexical_index(prev)?][lexical_index(next)?])
}

/// Pitch-height rank: T1 → 4, T4 → 3, T2 → 2, T3 → 1.
pub fn tone_rank(t: Tone) -> Result<u8, AlignError> {
    match t {
        Tone::T1 => Ok(4),
        Tone::T4 => Ok(3),
        Tone::T2 => Ok(2),
        Tone::T3 => Ok(1),
        Tone::Neutral => Err(AlignError::NeutralTone),
    }
}

/// The same rule as [`TONE_TABLE`] expressed through [`tone_rank`].
pub fn rank_rule_direction(prev: Tone, next: Tone) -> Result<MelodicDirection, AlignError> {
    Ok(if tone_rank(prev)? < tone_rank(next)? {
        A
    } else {
        D
    })
}

pub fn melodic_direction(f_prev: u8, f_next: u8) -> Result<MelodicDirection, AlignError> {
    if f_prev == 0 || f_next == 0 {
        return Err(AlignError::RestPitch);
    }
    Ok(match f_next.cmp(&f_prev) {
        std::cmp::Ordering::Greater => A,
        std::cmp::Ordering::Less => D,
        std::cmp::Ordering::Equal => MelodicDirection::Flat,
    })
}

fn judge(
    prev_tone: Tone,
    next_tone: Tone,
    f_prev: u8,
    f_next: u8,
    flat: FlatPolicy,
) -> Result<(Option<MelodicDirection>, MelodicDirection, Status), AlignError> {
    let actual = melodic_direction(f_prev, f_next)?;
    if prev_tone.is_neutral() || next_tone.is_neutral() {
        return Ok((None, actual, Status::Skipped));
    }
    let expected = expected_direction(prev_tone, next_tone)?;
    let status = match (actual, flat) {
        (MelodicDirection::Flat, FlatPolicy::Skip) => Status::Skipped,
        (MelodicDirection::Flat, FlatPolicy::CountAsMatch) => Status::Match,
        (MelodicDirection::Flat, FlatPolicy::CountAsMismatch) => Status::Mismatch,
        _ if actual == expected => Status::Match,
        _ => Status::Mismatch,
    };
    Ok((Some(expected), actual, status))
}

/// Scores one adjacent pair with flat intervals skipped.
pub fn check_pair(
    prev_tone: Tone,
    next_tone: Tone,
    f_prev: u8,
    f_next: u8,
) -> Result<Status, AlignError> {
    check_pair_with(prev_tone, next_tone, f_prev, f_next, FlatPolicy::Skip)
}

pub fn check_pair_with(
    prev_tone: Tone,
    next_tone: Tone,
    f_prev: u8,
    f_next: u8,
    flat: FlatPolicy,
) -> Result<Status, AlignError> {
    judge(prev_tone, next_tone, f_prev, f_next, flat).map(|(_, _, s)| s)
}

/// One verdict per sung character of `p`.
///
/// Position 0 is always `Forced`. Without `word_starts` every later
/// character is checked against the previous sung character, stepping over
/// rests. With `word_starts` (sung-character indices), word-initial
/// characters are `Forced` and only intra-word pairs are checked.
pub fn check_phrase(
    p: &Phrase,
    tones: &[Tone],
    word_starts: Option<&[usize]>,
    flat: FlatPolicy,
) -> Result<Vec<AlignmentVerdict>, AlignError> {
    let pitches = p.sung_pitches();
    check_sung(&pitches, tones, word_starts, flat)
}

/// [`check_phrase`] over pitches with rests already removed.
pub fn check_sung(
    pitches: &[u8],
    tones: &[Tone],
    word_starts: Option<&[usize]>,
    flat: FlatPolicy,
) -> Result<Vec<AlignmentVerdict>, AlignError> {
    let n = pitches.len();
    if tones.len() != n {
        return Err(AlignError::LengthMismatch {
            expected: n,
            got: tones.len(),
        });
    }
    let mut starts = BTreeSet::from([0usize]);
    if let Some(ws) = word_starts {
        for &i in ws {
            if i >= n {
                return Err(AlignError::Boundary { index: i, len: n });
            }
            starts.insert(i);
        }
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i == 0 || (word_starts.is_some() && starts.contains(&i)) {
            out.push(AlignmentVerdict {
                index: i,
                expected: None,
                actual: None,
                status: Status::Forced,
            });
            continue;
        }
        let (expected, actual, status) =
            judge(tones[i - 1], tones[i], pitches[i - 1], pitches[i], flat)?;
        out.push(AlignmentVerdict {
            index: i,
            expected,
            actual: Some(actual),
            status,
        });
    }
    Ok(out)
}
