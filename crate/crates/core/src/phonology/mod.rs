//! Mandarin phonology: tones, pinyin finals, rhyme classes and word
//! segmentation, backed by plain data files.

mod lexicon;
mod pinyin;
mod rhyme;
mod segment;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

pub use lexicon::{tone_of, Lexicon};
pub use pinyin::{parse_syllable, Pronunciation, Tone, FINALS};
pub use rhyme::{rhyme_class_of, rhyming_candidates, RhymeClass, RhymeTable};
pub use segment::{segment_words, word_starts, DictSegmenter, Segmenter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFile {
    Lexicon,
    Words,
    Rhymes,
}

impl fmt::Display for DataFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFile::Lexicon => "lexicon",
            DataFile::Words => "word list",
            DataFile::Rhymes => "rhyme table",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhonologyError {
    #[error("character {0:?} not in lexicon")]
    UnknownChar(char),
    #[error("unknown rhyme class {0:?}")]
    UnknownClass(String),
    #[error("invalid pinyin syllable {0:?}")]
    Syllable(String),
    #[error("invalid tone {0:?}")]
    Tone(String),
    #[error("{file} line {line}: {msg}")]
    Data {
        file: DataFile,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Io(String),
}

const BUNDLED_COMMON: &str = include_str!("../../data/common.txt");

/// Lexicon plus rhyme table: everything the rhyme suggester needs.
#[derive(Debug, Clone)]
pub struct Phonology {
    pub lexicon: Lexicon,
    pub rhymes: RhymeTable,
    /// Characters preferred as rhyme suggestions; empty means no preference.
    pub common: BTreeSet<char>,
}

/// Parses a character list: one character per line, `#` comments allowed.
pub fn parse_char_list(text: &str) -> BTreeSet<char> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.starts_with('#'))
        .flat_map(str::chars)
        .filter(|c| !c.is_whitespace())
        .collect()
}

impl Phonology {
    pub fn bundled() -> Self {
        Phonology {
            lexicon: Lexicon::bundled(),
            rhymes: RhymeTable::bundled(),
            common: parse_char_list(BUNDLED_COMMON),
        }
    }

    pub fn from_files(
        lexicon: &Path,
        words: Option<&Path>,
        rhymes: &Path,
    ) -> Result<Self, PhonologyError> {
        Ok(Phonology {
            lexicon: Lexicon::from_files(lexicon, words)?,
            rhymes: RhymeTable::from_file(rhymes)?,
            common: BTreeSet::new(),
        })
    }

    /// Up to `limit` characters of `cls` in codepoint order, drawn from
    /// [`Phonology::common`] when it is non-empty.
    pub fn suggestions(&self, cls: &RhymeClass, limit: usize) -> Vec<char> {
        if self.common.is_empty() {
            return rhyming_candidates(cls, &self.lexicon, limit);
        }
        self.common
            .iter()
            .filter(|c| {
                self.lexicon
                    .primary(**c)
                    .is_ok_and(|p| cls.contains(p.rime()))
            })
            .copied()
            .take(limit)
            .collect()
    }

    pub fn rhyme_class_of(&self, ch: char) -> Result<&RhymeClass, PhonologyError> {
        self.rhymes.class_of(ch, &self.lexicon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn common_suggestions() {
        let ph = bundled();
        assert_eq!(ph.common.len(), 3755);
        let cls = ph.rhyme_class_of('光').unwrap();
        let s = ph.suggestions(cls, 20);
        assert_eq!(s.len(), 20);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        for c in &s {
            assert!(ph.common.contains(c));
            assert_eq!(ph.rhyme_class_of(*c).unwrap(), cls);
        }
        let plain = Phonology {
            common: BTreeSet::new(),
            ..ph.clone()
        };
        assert_eq!(
            plain.suggestions(cls, 7),
            rhyming_candidates(cls, &ph.lexicon, 7)
        );
    }

    proptest! {
        // Sampled over the bundled lexicon: same class name is an
        // equivalence, and lookups are deterministic.
        #[test]
        fn rhyme_equivalence(a in 0usize..20_000, b in 0usize..20_000, c in 0usize..20_000) {
            let ph = bundled();
            let chars: Vec<char> = ph.lexicon.iter().map(|(c, _)| c).collect();
            let (x, y, z) = (chars[a], chars[b], chars[c]);
            let cx = ph.rhyme_class_of(x).unwrap().name();
            let cy = ph.rhyme_class_of(y).unwrap().name();
            let cz = ph.rhyme_class_of(z).unwrap().name();
            let fx = ph.lexicon.primary(x).unwrap().rime();
            let fy = ph.lexicon.primary(y).unwrap().rime();
            prop_assert_eq!(cx == cy, ph.rhymes.class_of_final(fx).unwrap().contains(fy));
            if cx == cy && cy == cz {
                prop_assert_eq!(cx, cz);
            }
            prop_assert_eq!(ph.lexicon.tone_of(x, None).unwrap(), ph.lexicon.tone_of(x, None).unwrap());
        }
    }

    fn bundled() -> &'static Phonology {
        use std::sync::OnceLock;
        static P: OnceLock<Phonology> = OnceLock::new();
        P.get_or_init(Phonology::bundled)
    }
}
