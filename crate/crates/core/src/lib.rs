//! Mandarin melody-to-lyric toolkit.
//!
//! - [`melody`]: note/phrase/melody model, JSON documents, MIDI import
//! - [`phonology`]: tones, pinyin finals, rhyme classes, word segmentation
//! - [`align`]: tone-melody alignment rules
//! - [`metrics`]: corpus match rates (NSMR/SMR) and their baselines
//! - [`control`]: prompt rendering, block extraction and length validation
//! - [`agents`]: the Suggester/Creator/Checker/Judger pipeline
//! - [`llm`]: completion backends (HTTP, record/replay, scripted)

pub mod agents;
pub mod align;
pub mod control;
pub mod llm;
pub mod melody;
pub mod metrics;
pub mod phonology;
pub mod text;
