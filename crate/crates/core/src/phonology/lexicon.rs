use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::pinyin::{parse_syllable, Pronunciation, Tone};
use super::segment::Segmenter;
use super::{DataFile, PhonologyError};
use crate::text::is_cjk_ideograph;

const BUNDLED_CHARS: &str = include_str!("../../data/lexicon.tsv");
const BUNDLED_WORDS: &str = include_str!("../../data/words.tsv");

/// Character and word pronunciations.
///
/// Character readings are ordered most common first. Word entries override
/// the character default for every position of the word.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: BTreeMap<char, Vec<Pronunciation>>,
    words: HashMap<String, Vec<Pronunciation>>,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

impl Lexicon {
    /// Parses the character file (`char<TAB>py[,py…]`) and the word file
    /// (`word<TAB>py py …`).
    pub fn parse(chars: &str, words: &str) -> Result<Self, PhonologyError> {
        let mut lex = Lexicon::default();
        for (line, l) in data_lines(chars) {
            let err = |msg: String| PhonologyError::Data {
                file: DataFile::Lexicon,
                line,
                msg,
            };
            let (key, readings) = l
                .split_once('\t')
                .ok_or_else(|| err("missing tab".into()))?;
            let mut cs = key.chars();
            let ch = match (cs.next(), cs.next()) {
                (Some(c), None) => c,
                _ => return Err(err(format!("key {key:?} is not a single character"))),
            };
            if !is_cjk_ideograph(ch) {
                return Err(err(format!("{ch:?} is not a CJK ideograph")));
            }
            let prons = readings
                .split(',')
                .map(|r| parse_syllable(r).map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            if prons.is_empty() {
                return Err(err("no readings".into()));
            }
            lex.entries.insert(ch, prons);
        }
        for (line, l) in data_lines(words) {
            let err = |msg: String| PhonologyError::Data {
                file: DataFile::Words,
                line,
                msg,
            };
            let (word, readings) = l
                .split_once('\t')
                .ok_or_else(|| err("missing tab".into()))?;
            let prons = readings
                .split_whitespace()
                .map(|r| parse_syllable(r).map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            if prons.len() != word.chars().count() {
                return Err(err(format!(
                    "{} readings for {} characters",
                    prons.len(),
                    word.chars().count()
                )));
            }
            lex.words.insert(word.to_string(), prons);
        }
        Ok(lex)
    }

    pub fn from_files(chars: &Path, words: Option<&Path>) -> Result<Self, PhonologyError> {
        let c = std::fs::read_to_string(chars).map_err(|e| PhonologyError::Io(e.to_string()))?;
        let w = match words {
            Some(p) => std::fs::read_to_string(p).map_err(|e| PhonologyError::Io(e.to_string()))?,
            None => String::new(),
        };
        Self::parse(&c, &w)
    }

    /// The lexicon shipped with the crate (about 21k characters).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CHARS, BUNDLED_WORDS).expect("bundled lexicon is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn readings(&self, ch: char) -> Option<&[Pronunciation]> {
        self.entries.get(&ch).map(Vec::as_slice)
    }

    pub fn primary(&self, ch: char) -> Result<&Pronunciation, PhonologyError> {
        self.entries
            .get(&ch)
            .map(|v| &v[0])
            .ok_or(PhonologyError::UnknownChar(ch))
    }

    pub fn word(&self, word: &str) -> Option<&[Pronunciation]> {
        self.words.get(word).map(Vec::as_slice)
    }

    /// Characters in codepoint order with their readings.
    pub fn iter(&self) -> impl Iterator<Item = (char, &[Pronunciation])> {
        self.entries.iter().map(|(c, v)| (*c, v.as_slice()))
    }

    /// Tone of `ch`, using the reading from `context_word` when that word has
    /// an entry and contains `ch` (first occurrence), else the most common
    /// character reading.
    pub fn tone_of(&self, ch: char, context_word: Option<&str>) -> Result<Tone, PhonologyError> {
        if let Some(w) = context_word {
            if let (Some(prons), Some(pos)) = (self.word(w), w.chars().position(|c| c == ch)) {
                return Ok(prons[pos].tone());
            }
        }
        self.primary(ch).map(Pronunciation::tone)
    }

    /// Tones for every character of `text`, segmenting it first so word
    /// readings can override character defaults.
    pub fn tones_for_text(
        &self,
        text: &str,
        segmenter: &dyn Segmenter,
    ) -> Result<Vec<Tone>, PhonologyError> {
        let mut out = Vec::with_capacity(text.chars().count());
        for w in segmenter.segment(text) {
            match self.word(&w) {
                Some(prons) => out.extend(prons.iter().map(Pronunciation::tone)),
                None => {
                    for c in w.chars() {
                        out.push(self.primary(c)?.tone());
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`Lexicon::tone_of`].
pub fn tone_of(
    ch: char,
    context_word: Option<&str>,
    lex: &Lexicon,
) -> Result<Tone, PhonologyError> {
    lex.tone_of(ch, context_word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonology::segment::DictSegmenter;

    #[test]
    fn bundled_examples() {
        let lex = Lexicon::bundled();
        assert!(lex.len() > 20_000);
        assert_eq!(tone_of('天', None, &lex).unwrap(), Tone::T1);
        assert_eq!(tone_of('了', Some("了解"), &lex).unwrap(), Tone::T3);
        assert_eq!(tone_of('了', None, &lex).unwrap(), Tone::Neutral);
        assert_eq!(
            tone_of('?', None, &lex).unwrap_err(),
            PhonologyError::UnknownChar('?')
        );
    }

    #[test]
    fn word_without_entry_falls_back() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.tone_of('了', Some("好了吗")).unwrap(), Tone::Neutral);
        assert_eq!(lex.tone_of('天', Some("了解")).unwrap(), Tone::T1);
    }

    #[test]
    fn parse_errors_carry_line() {
        let e = Lexicon::parse("# c\n天\ttian1\n地 di4\n", "").unwrap_err();
        assert!(matches!(e, PhonologyError::Data { line: 3, .. }), "{e}");
        let e = Lexicon::parse("a\ta1\n", "").unwrap_err();
        assert!(matches!(e, PhonologyError::Data { line: 1, .. }));
        let e = Lexicon::parse("天\ttian9\n", "").unwrap_err();
        assert!(matches!(e, PhonologyError::Data { .. }));
        let e = Lexicon::parse("", "了解\tliao3\n").unwrap_err();
        assert!(matches!(
            e,
            PhonologyError::Data {
                file: DataFile::Words,
                line: 1,
                ..
            }
        ));
    }

    #[test]
    fn text_tones_use_word_entries() {
        let lex =
            Lexicon::parse("我\two3\n了\tle5,liao3\n解\tjie3\n", "了解\tliao3 jie3\n").unwrap();
        let seg = DictSegmenter::from_words(["了解"]);
        assert_eq!(
            lex.tones_for_text("我了解了", &seg).unwrap(),
            vec![Tone::T3, Tone::T3, Tone::T3, Tone::Neutral]
        );
        assert_eq!(
            lex.tones_for_text("我X", &seg).unwrap_err(),
            PhonologyError::UnknownChar('X')
        );
    }
}
