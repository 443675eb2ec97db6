//! Standard MIDI File import with gap-based phrase segmentation.

use midly::{MidiMessage, Smf, Timing, TrackEventKind};
use thiserror::Error;

use super::{Melody, MelodyError, Note, Phrase};

/// Default silence (in beats) above which a new phrase starts.
pub const DEFAULT_GAP_THRESHOLD: f64 = 2.0;

/// Silences at or below this length (in beats) are dropped instead of
/// becoming rest notes.
const MIN_REST: f64 = 1.0 / 16.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MidiError {
    #[error("invalid MIDI data: {0}")]
    Parse(String),
    #[error("SMPTE timecode timing is not supported; need ticks-per-beat timing")]
    TimecodeTiming,
    #[error("gap threshold must be positive, got {0}")]
    Threshold(f64),
    #[error("no note events found")]
    NoNotes,
    #[error("polyphony in track {track}: note at tick {second_tick} starts while note from tick {first_tick} is still sounding")]
    Polyphony {
        track: usize,
        first_tick: u64,
        second_tick: u64,
    },
    #[error("MIDI key 0 at tick {tick} collides with the rest pitch")]
    KeyZero { tick: u64 },
    #[error(transparent)]
    Melody(#[from] MelodyError),
}

#[derive(Debug, Clone, Copy)]
struct RawNote {
    key: u8,
    start: u64,
    end: u64,
}

fn track_notes(track: &[midly::TrackEvent<'_>], index: usize) -> Result<Vec<RawNote>, MidiError> {
    let mut now = 0u64;
    let mut sounding: Option<(u8, u64)> = None;
    let mut notes = Vec::new();
    for ev in track {
        now += u64::from(ev.delta.as_int());
        let TrackEventKind::Midi { message, .. } = ev.kind else {
            continue;
        };
        let (key, on) = match message {
            MidiMessage::NoteOn { key, vel } => (key.as_int(), vel.as_int() > 0),
            MidiMessage::NoteOff { key, .. } => (key.as_int(), false),
            _ => continue,
        };
        match (on, sounding) {
            (true, Some((_, start))) => {
                return Err(MidiError::Polyphony {
                    track: index,
                    first_tick: start,
                    second_tick: now,
                })
            }
            (true, None) => sounding = Some((key, now)),
            (false, Some((k, start))) if k == key => {
                if now > start {
                    notes.push(RawNote {
                        key,
                        start,
                        end: now,
                    });
                }
                sounding = None;
            }
            (false, _) => {}
        }
    }
    if let Some((key, start)) = sounding {
        if now > start {
            notes.push(RawNote {
                key,
                start,
                end: now,
            });
        }
    }
    Ok(notes)
}

/// Imports the first monophonic note track of a Standard MIDI File.
///
/// A new phrase starts whenever the silence between one note's release and
/// the next note's onset exceeds `gap_threshold` beats. Shorter silences
/// longer than a sixteenth of a beat become rest notes.
pub fn import_midi(bytes: &[u8], gap_threshold: f64) -> Result<Melody, MidiError> {
    if !(gap_threshold.is_finite() && gap_threshold > 0.0) {
        return Err(MidiError::Threshold(gap_threshold));
    }
    let smf = Smf::parse(bytes).map_err(|e| MidiError::Parse(e.to_string()))?;
    let tpb = match smf.header.timing {
        Timing::Metrical(t) if t.as_int() > 0 => f64::from(t.as_int()),
        Timing::Metrical(_) => return Err(MidiError::Parse("zero ticks per beat".into())),
        Timing::Timecode(..) => return Err(MidiError::TimecodeTiming),
    };

    let mut first_poly = None;
    let mut chosen = None;
    for (i, track) in smf.tracks.iter().enumerate() {
        match track_notes(track, i) {
            Ok(notes) if notes.is_empty() => {}
            Ok(notes) => {
                chosen = Some(notes);
                break;
            }
            Err(e) => {
                first_poly.get_or_insert(e);
            }
        }
    }
    let notes = match (chosen, first_poly) {
        (Some(n), _) => n,
        (None, Some(e)) => return Err(e),
        (None, None) => return Err(MidiError::NoNotes),
    };

    let mut phrases = Vec::new();
    let mut current: Vec<Note> = Vec::new();
    let mut prev_end: Option<u64> = None;
    for n in &notes {
        if n.key == 0 {
            return Err(MidiError::KeyZero { tick: n.start });
        }
        if let Some(end) = prev_end {
            let gap = n.start.saturating_sub(end) as f64 / tpb;
            if gap > gap_threshold {
                phrases.push(Phrase::new(std::mem::take(&mut current))?);
            } else if gap > MIN_REST {
                current.push(Note::rest(gap)?);
            }
        }
        current.push(Note::new(n.key, (n.end - n.start) as f64 / tpb)?);
        prev_end = Some(n.end);
    }
    phrases.push(Phrase::new(current)?);
    Ok(Melody::new("imported", None, phrases)?)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Builds a format-0 SMF from `(key, start_tick, end_tick)` triples.
    pub(crate) fn smf_bytes(tpb: u16, notes: &[(u8, u32, u32)]) -> Vec<u8> {
        let mut events: Vec<(u32, u8, u8, u8)> = Vec::new();
        for &(k, s, e) in notes {
            events.push((s, 0x90, k, 100));
            events.push((e, 0x80, k, 0));
        }
        // offs before ons at equal ticks
        events.sort_by_key(|&(t, st, _, _)| (t, st == 0x90));
        let mut body = Vec::new();
        let mut last = 0u32;
        for (t, st, k, v) in events {
            write_vlq(&mut body, t - last);
            body.extend_from_slice(&[st, k, v]);
            last = t;
        }
        body.extend_from_slice(&[0x00, 0xFF, 0x2F, 0x00]);
        let mut out = b"MThd".to_vec();
        out.extend_from_slice(&6u32.to_be_bytes());
        out.extend_from_slice(&0u16.to_be_bytes());
        out.extend_from_slice(&1u16.to_be_bytes());
        out.extend_from_slice(&tpb.to_be_bytes());
        out.extend_from_slice(b"MTrk");
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(&body);
        out
    }

    fn write_vlq(out: &mut Vec<u8>, mut v: u32) {
        let mut buf = [0u8; 4];
        let mut i = 3;
        buf[i] = (v & 0x7F) as u8;
        v >>= 7;
        while v > 0 {
            i -= 1;
            buf[i] = ((v & 0x7F) as u8) | 0x80;
            v >>= 7;
        }
        out.extend_from_slice(&buf[i..]);
    }

    #[test]
    fn long_gap_splits_phrases() {
        // 480 ticks per beat; gap of 4 beats
        let bytes = smf_bytes(480, &[(60, 0, 480), (62, 480 * 5, 480 * 6)]);
        let m = import_midi(&bytes, 2.0).unwrap();
        assert_eq!(m.phrases().len(), 2);
    }

    #[test]
    fn short_gap_becomes_rest() {
        let bytes = smf_bytes(480, &[(60, 0, 480), (62, 720, 1200)]);
        let m = import_midi(&bytes, 2.0).unwrap();
        assert_eq!(m.phrases().len(), 1);
        let got: Vec<(u8, f64)> = m.phrases()[0]
            .notes()
            .iter()
            .map(|n| (n.pitch(), n.duration()))
            .collect();
        assert_eq!(got, vec![(60, 1.0), (0, 0.5), (62, 1.0)]);
    }

    #[test]
    fn tiny_gap_dropped() {
        let bytes = smf_bytes(480, &[(60, 0, 480), (62, 500, 960)]);
        let m = import_midi(&bytes, 2.0).unwrap();
        assert_eq!(m.phrases()[0].len(), 2);
    }

    #[test]
    fn empty_track_is_error() {
        let bytes = smf_bytes(480, &[]);
        assert_eq!(import_midi(&bytes, 2.0).unwrap_err(), MidiError::NoNotes);
    }

    #[test]
    fn polyphony_reports_ticks() {
        let bytes = smf_bytes(480, &[(60, 0, 960), (64, 480, 1200)]);
        assert_eq!(
            import_midi(&bytes, 2.0).unwrap_err(),
            MidiError::Polyphony {
                track: 0,
                first_tick: 0,
                second_tick: 480
            }
        );
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(
            import_midi(b"nope", 2.0),
            Err(MidiError::Parse(_))
        ));
        let bytes = smf_bytes(480, &[(60, 0, 480)]);
        assert_eq!(
            import_midi(&bytes, 0.0).unwrap_err(),
            MidiError::Threshold(0.0)
        );
        let bytes = smf_bytes(480, &[(0, 0, 480)]);
        assert_eq!(
            import_midi(&bytes, 2.0).unwrap_err(),
            MidiError::KeyZero { tick: 0 }
        );
    }

    fn arb_notes() -> impl Strategy<Value = Vec<(u8, u32, u32)>> {
        prop::collection::vec((1u8..=127, 0u32..2000, 1u32..1000), 1..16).prop_map(|v| {
            let mut t = 0;
            v.into_iter()
                .map(|(k, gap, len)| {
                    let s = t + gap;
                    t = s + len;
                    (k, s, t)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn threshold_monotone(notes in arb_notes(), a in 0.05f64..5.0, b in 0.05f64..5.0) {
            let bytes = smf_bytes(240, &notes);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let n_lo = import_midi(&bytes, lo).unwrap().phrases().len();
            let n_hi = import_midi(&bytes, hi).unwrap().phrases().len();
            prop_assert!(n_hi <= n_lo);
        }

        #[test]
        fn keeps_every_note(notes in arb_notes()) {
            let bytes = smf_bytes(240, &notes);
            let m = import_midi(&bytes, 2.0).unwrap();
            prop_assert_eq!(m.total_syllables(), notes.len());
        }
    }
}
