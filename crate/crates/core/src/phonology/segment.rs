//! Word segmentation. The default strategy is forward maximum matching
//! against a word list.

use std::collections::HashSet;
use std::path::Path;

use super::PhonologyError;

const BUNDLED_WORDS: &str = include_str!("../../data/segmenter.txt");

pub trait Segmenter: Send + Sync {
    /// Short identifier reported in analysis output.
    fn name(&self) -> &str;

    /// Splits `text` into words whose concatenation is `text`.
    fn segment(&self, text: &str) -> Vec<String>;
}

/// Forward maximum matching: at each position take the longest dictionary
/// word, falling back to a single character.
#[derive(Debug, Clone)]
pub struct DictSegmenter {
    name: String,
    words: HashSet<String>,
    max_chars: usize,
}

impl DictSegmenter {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::named("dict", words)
    }

    pub fn named<I, S>(name: impl Into<String>, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: HashSet<String> = words
            .into_iter()
            .map(Into::into)
            .filter(|w| !w.is_empty())
            .collect();
        let max_chars = words.iter().map(|w| w.chars().count()).max().unwrap_or(1);
        DictSegmenter {
            name: name.into(),
            words,
            max_chars,
        }
    }

    /// One word per line; blank lines and `#` comments skipped.
    pub fn parse(name: impl Into<String>, text: &str) -> Self {
        Self::named(
            name,
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self, PhonologyError> {
        let text = std::fs::read_to_string(path).map_err(|e| PhonologyError::Io(e.to_string()))?;
        let name = format!(
            "fmm:{}",
            path.file_name().unwrap_or_default().to_string_lossy()
        );
        Ok(Self::parse(name, &text))
    }

    pub fn bundled() -> Self {
        Self::parse("fmm:bundled", BUNDLED_WORDS)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Segmenter for DictSegmenter {
    fn name(&self) -> &str {
        &self.name
    }

    fn segment(&self, text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        let mut buf = String::new();
        while i < chars.len() {
            let longest = self.max_chars.min(chars.len() - i);
            let mut take = 1;
            for n in (2..=longest).rev() {
                buf.clear();
                buf.extend(&chars[i..i + n]);
                if self.words.contains(&buf) {
                    take = n;
                    break;
                }
            }
            out.push(chars[i..i + take].iter().collect());
            i += take;
        }
        out
    }
}

pub fn segment_words(text: &str, segmenter: &dyn Segmenter) -> Vec<String> {
    segmenter.segment(text)
}

/// Indices of word-initial characters for a segmentation.
pub fn word_starts(words: &[String]) -> Vec<usize> {
    let mut at = 0;
    words
        .iter()
        .map(|w| {
            let start = at;
            at += w.chars().count();
            start
        })
        .collect()
}
