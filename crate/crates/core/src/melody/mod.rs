//! Melody data model: notes, phrases and whole melodies.
//!
//! A melody is an ordered list of phrases; each phrase is an ordered list of
//! notes. A note with pitch `0` is a rest. Every non-rest note carries exactly
//! one sung character, so the number of characters a phrase needs is the
//! number of its non-rest notes.

mod midi;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use midi::{import_midi, MidiError, DEFAULT_GAP_THRESHOLD};

/// Schema tag every melody document must carry.
pub const MELODY_SCHEMA: &str = "m2l-melody/1";

/// Highest valid MIDI-style pitch.
pub const MAX_PITCH: u8 = 127;

/// Pitch value that denotes a rest.
pub const REST: u8 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MelodyError {
    #[error("malformed melody document: {0}")]
    Schema(String),
    #[error("unsupported schema {found:?}, expected {MELODY_SCHEMA:?}")]
    SchemaVersion { found: String },
    #[error("phrase {phrase}, note {note}: pitch {pitch} outside 0..=127")]
    PitchRange {
        phrase: usize,
        note: usize,
        pitch: i64,
    },
    #[error("phrase {phrase}, note {note}: duration {duration} must be positive")]
    Duration {
        phrase: usize,
        note: usize,
        duration: f64,
    },
    #[error("phrase {phrase} has no notes")]
    EmptyPhrase { phrase: usize },
    #[error("phrase {phrase} contains only rests")]
    AllRestPhrase { phrase: usize },
    #[error("melody has no phrases")]
    EmptyMelody,
}

/// A single note. Pitch is a semitone index, duration is in beats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Note {
    pitch: u8,
    duration: f64,
}

impl Note {
    /// Builds a note, rejecting pitches above 127 and non-positive or
    /// non-finite durations. Errors carry index 0; callers that know the
    /// position use [`Note::at`].
    pub fn new(pitch: u8, duration: f64) -> Result<Self, MelodyError> {
        Self::at(pitch as i64, duration, 0, 0)
    }

    pub fn rest(duration: f64) -> Result<Self, MelodyError> {
        Self::new(REST, duration)
    }

    fn at(pitch: i64, duration: f64, phrase: usize, note: usize) -> Result<Self, MelodyError> {
        if !(0..=MAX_PITCH as i64).contains(&pitch) {
            return Err(MelodyError::PitchRange {
                phrase,
                note,
                pitch,
            });
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(MelodyError::Duration {
                phrase,
                note,
                duration,
            });
        }
        Ok(Note {
            pitch: pitch as u8,
            duration,
        })
    }

    pub fn pitch(&self) -> u8 {
        self.pitch
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn is_rest(&self) -> bool {
        self.pitch == REST
    }
}

/// A non-empty run of notes with at least one sung (non-rest) note.
#[derive(Debug, Clone, PartialEq)]
pub struct Phrase {
    notes: Vec<Note>,
}

impl Phrase {
    pub fn new(notes: Vec<Note>) -> Result<Self, MelodyError> {
        Self::validated(notes, 0)
    }

    fn validated(notes: Vec<Note>, phrase: usize) -> Result<Self, MelodyError> {
        if notes.is_empty() {
            return Err(MelodyError::EmptyPhrase { phrase });
        }
        if notes.iter().all(Note::is_rest) {
            return Err(MelodyError::AllRestPhrase { phrase });
        }
        Ok(Phrase { notes })
    }

    /// Convenience constructor from `(pitch, duration)` pairs.
    pub fn from_pairs(pairs: &[(u8, f64)]) -> Result<Self, MelodyError> {
        let notes = pairs
            .iter()
            .enumerate()
            .map(|(i, &(p, d))| Note::at(p as i64, d, 0, i))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(notes)
    }

    pub fn notes(&self) -> &[Note] {
        &self.notes
    }

    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    /// Number of sung characters this phrase takes.
    pub fn syllable_count(&self) -> usize {
        self.notes.iter().filter(|n| !n.is_rest()).count()
    }

    pub fn rest_count(&self) -> usize {
        self.notes.len() - self.syllable_count()
    }

    /// Pitches of the sung notes, rests removed.
    pub fn sung_pitches(&self) -> Vec<u8> {
        self.notes
            .iter()
            .filter(|n| !n.is_rest())
            .map(Note::pitch)
            .collect()
    }

    /// Note indices of the rests.
    pub fn rest_positions(&self) -> Vec<usize> {
        self.notes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_rest())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Free-function form of [`Phrase::syllable_count`].
pub fn phrase_syllable_count(p: &Phrase) -> usize {
    p.syllable_count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Melody {
    title: String,
    tempo_bpm: Option<f64>,
    phrases: Vec<Phrase>,
}

impl Melody {
    pub fn new(
        title: impl Into<String>,
        tempo_bpm: Option<f64>,
        phrases: Vec<Phrase>,
    ) -> Result<Self, MelodyError> {
        if phrases.is_empty() {
            return Err(MelodyError::EmptyMelody);
        }
        Ok(Melody {
            title: title.into(),
            tempo_bpm,
            phrases,
        })
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    /// Tempo is metadata only; nothing in the toolkit depends on it.
    pub fn tempo_bpm(&self) -> Option<f64> {
        self.tempo_bpm
    }

    pub fn phrases(&self) -> &[Phrase] {
        &self.phrases
    }

    pub fn total_syllables(&self) -> usize {
        self.phrases.iter().map(Phrase::syllable_count).sum()
    }
}

// Wire representation. Pitches are read as i64 so out-of-range values reach
// validation instead of failing inside serde with no index.
#[derive(Serialize, Deserialize)]
pub(crate) struct NoteDoc {
    pub pitch: i64,
    pub duration: f64,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct PhraseDoc {
    pub notes: Vec<NoteDoc>,
}

#[derive(Serialize, Deserialize)]
struct MelodyDoc {
    schema: String,
    title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tempo_bpm: Option<f64>,
    phrases: Vec<PhraseDoc>,
}

impl PhraseDoc {
    pub(crate) fn into_phrase(self, index: usize) -> Result<Phrase, MelodyError> {
        let notes = self
            .notes
            .into_iter()
            .enumerate()
            .map(|(j, n)| Note::at(n.pitch, n.duration, index, j))
            .collect::<Result<Vec<_>, _>>()?;
        Phrase::validated(notes, index)
    }

    pub(crate) fn from_phrase(p: &Phrase) -> Self {
        PhraseDoc {
            notes: p
                .notes
                .iter()
                .map(|n| NoteDoc {
                    pitch: n.pitch as i64,
                    duration: n.duration,
                })
                .collect(),
        }
    }
}

/// Parses and validates a melody document (JSON, schema `m2l-melody/1`).
pub fn parse_melody(document: &str) -> Result<Melody, MelodyError> {
    let doc: MelodyDoc =
        serde_json::from_str(document).map_err(|e| MelodyError::Schema(e.to_string()))?;
    if doc.schema != MELODY_SCHEMA {
        return Err(MelodyError::SchemaVersion { found: doc.schema });
    }
    if let Some(t) = doc.tempo_bpm {
        if !(t.is_finite() && t > 0.0) {
            return Err(MelodyError::Schema(format!(
                "tempo_bpm {t} must be positive"
            )));
        }
    }
    let phrases = doc
        .phrases
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.into_phrase(i))
        .collect::<Result<Vec<_>, _>>()?;
    Melody::new(doc.title, doc.tempo_bpm, phrases)
}

/// Serializes a melody to its JSON document form.
pub fn serialize_melody(m: &Melody) -> String {
    let doc = MelodyDoc {
        schema: MELODY_SCHEMA.to_string(),
        title: m.title.clone(),
        tempo_bpm: m.tempo_bpm,
        phrases: m.phrases.iter().map(PhraseDoc::from_phrase).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("melody serialization is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(phrases: &str) -> String {
        format!(r#"{{"schema":"m2l-melody/1","title":"t","phrases":{phrases}}}"#)
    }

    #[test]
    fn parses_single_phrase() {
        let m = parse_melody(&doc(
            r#"[{"notes":[{"pitch":60,"duration":1.0},{"pitch":64,"duration":0.5}]}]"#,
        ))
        .unwrap();
        assert_eq!(m.phrases().len(), 1);
        let notes = m.phrases()[0].notes();
        assert_eq!(notes.len(), 2);
        assert_eq!((notes[0].pitch(), notes[0].duration()), (60, 1.0));
        assert_eq!((notes[1].pitch(), notes[1].duration()), (64, 0.5));
    }

    #[test]
    fn pitch_out_of_range_names_index() {
        let err = parse_melody(&doc(
            r#"[{"notes":[{"pitch":60,"duration":1}]},{"notes":[{"pitch":62,"duration":1},{"pitch":128,"duration":1}]}]"#,
        ))
        .unwrap_err();
        assert_eq!(
            err,
            MelodyError::PitchRange {
                phrase: 1,
                note: 1,
                pitch: 128
            }
        );
        assert!(err.to_string().contains("note 1"));
    }

    #[test]
    fn all_rest_phrase_rejected() {
        let err = parse_melody(&doc(r#"[{"notes":[{"pitch":0,"duration":1.0}]}]"#)).unwrap_err();
        assert_eq!(err, MelodyError::AllRestPhrase { phrase: 0 });
    }

    #[test]
    fn other_invariant_errors() {
        assert_eq!(
            parse_melody(&doc(r#"[{"notes":[{"pitch":60,"duration":0}]}]"#)).unwrap_err(),
            MelodyError::Duration {
                phrase: 0,
                note: 0,
                duration: 0.0
            }
        );
        assert_eq!(
            parse_melody(&doc(r#"[{"notes":[]}]"#)).unwrap_err(),
            MelodyError::EmptyPhrase { phrase: 0 }
        );
        assert_eq!(
            parse_melody(&doc("[]")).unwrap_err(),
            MelodyError::EmptyMelody
        );
        assert!(matches!(
            parse_melody(r#"{"schema":"m2l-melody/2","title":"t","phrases":[]}"#),
            Err(MelodyError::SchemaVersion { .. })
        ));
        assert!(matches!(
            parse_melody(r#"{"schema":"m2l-melody/1","phrases":[]}"#),
            Err(MelodyError::Schema(_))
        ));
        assert!(matches!(
            parse_melody(&doc(r#"[{"notes":[{"pitch":"C4","duration":1}]}]"#)),
            Err(MelodyError::Schema(_))
        ));
    }

    #[test]
    fn syllable_counts() {
        let p = Phrase::from_pairs(&[(60, 1.0), (0, 1.0), (62, 1.0)]).unwrap();
        assert_eq!(phrase_syllable_count(&p), 2);
        assert_eq!(p.rest_positions(), vec![1]);
        assert_eq!(p.sung_pitches(), vec![60, 62]);
        let p = Phrase::from_pairs(&[(60, 1.0)]).unwrap();
        assert_eq!(phrase_syllable_count(&p), 1);
        let p = Phrase::from_pairs(&[(60, 1.0); 7]).unwrap();
        assert_eq!(phrase_syllable_count(&p), 7);
    }

    fn arb_phrase() -> impl Strategy<Value = Phrase> {
        (
            1u8..=127,
            prop::collection::vec((0u8..=127, 1u32..64), 0..12),
        )
            .prop_map(|(first, rest)| {
                let mut notes = vec![Note::new(first, 0.25).unwrap()];
                notes.extend(
                    rest.into_iter()
                        .map(|(p, d)| Note::new(p, d as f64 / 16.0).unwrap()),
                );
                Phrase::new(notes).unwrap()
            })
    }

    fn arb_melody() -> impl Strategy<Value = Melody> {
        (
            "[a-z 一-龥]{0,12}",
            prop::option::of(20.0f64..300.0),
            prop::collection::vec(arb_phrase(), 1..6),
        )
            .prop_map(|(t, bpm, ps)| Melody::new(t, bpm, ps).unwrap())
    }

    proptest! {
        #[test]
        fn round_trip(m in arb_melody()) {
            prop_assert_eq!(parse_melody(&serialize_melody(&m)).unwrap(), m);
        }

        #[test]
        fn sung_plus_rest_is_length(p in arb_phrase()) {
            prop_assert_eq!(p.syllable_count() + p.rest_count(), p.len());
        }
    }
}
