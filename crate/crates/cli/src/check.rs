use std::io::Write;
use std::path::Path;

use serde::Serialize;

use m2l_core::align::{check_phrase, MelodicDirection, Status};
use m2l_core::metrics::Tally;
use m2l_core::phonology::{word_starts, Lexicon, Segmenter, Tone};
use m2l_core::text::is_cjk_ideograph;

use crate::{load_melody, load_segmenter, read, runtime, CheckArgs, CheckFormat, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub phrase: usize,
    /// Sung-character index within the phrase, from 1.
    pub index: usize,
    pub char: char,
    pub tone: Tone,
    pub prev_pitch: Option<u8>,
    pub pitch: u8,
    pub expected: Option<MelodicDirection>,
    pub actual: Option<MelodicDirection>,
    pub status: Status,
}

#[derive(Debug, Serialize)]
pub struct CheckDoc {
    pub rows: Vec<Row>,
    pub summary: Tally,
    pub rate: f64,
}

/// Splits lyrics into phrase lines on newlines or `/`; whitespace inside a
/// line (rest spacing) is dropped.
pub fn split_lines(text: &str) -> Vec<String> {
    text.split(['\n', '/'])
        .map(|l| l.chars().filter(|c| !c.is_whitespace()).collect::<String>())
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn check_lyrics(
    melody: &m2l_core::melody::Melody,
    lines: &[String],
    lex: &Lexicon,
    seg: &dyn Segmenter,
    segment: bool,
    flat: m2l_core::align::FlatPolicy,
) -> CliResult<CheckDoc> {
    let phrases = melody.phrases();
    if lines.len() != phrases.len() {
        return Err(runtime(format!(
            "{} lyric lines for {} phrases",
            lines.len(),
            phrases.len()
        )));
    }
    let mut rows = Vec::new();
    let mut verdicts_all = Vec::new();
    for (pi, (line, phrase)) in lines.iter().zip(phrases).enumerate() {
        let n = line.chars().count();
        if let Some(c) = line.chars().find(|c| !is_cjk_ideograph(*c)) {
            return Err(runtime(format!(
                "phrase {}: {c:?} is not a Chinese character",
                pi + 1
            )));
        }
        if n != phrase.syllable_count() {
            return Err(runtime(format!(
                "phrase {}: lyric has {n} characters but the phrase has {} sung notes",
                pi + 1,
                phrase.syllable_count()
            )));
        }
        let tones = lex
            .tones_for_text(line, seg)
            .map_err(|e| runtime(format!("phrase {}: {e}", pi + 1)))?;
        let starts = segment.then(|| word_starts(&seg.segment(line)));
        let verdicts = check_phrase(phrase, &tones, starts.as_deref(), flat)
            .map_err(|e| runtime(format!("phrase {}: {e}", pi + 1)))?;
        let pitches = phrase.sung_pitches();
        for (v, c) in verdicts.iter().zip(line.chars()) {
            rows.push(Row {
                phrase: pi + 1,
                index: v.index + 1,
                char: c,
                tone: tones[v.index],
                prev_pitch: v.index.checked_sub(1).map(|i| pitches[i]),
                pitch: pitches[v.index],
                expected: v.expected,
                actual: v.actual,
                status: v.status,
            });
        }
        verdicts_all.extend(verdicts);
    }
    let summary = Tally::of(&verdicts_all);
    Ok(CheckDoc {
        rows,
        rate: summary.rate(),
        summary,
    })
}

pub fn render_table(doc: &CheckDoc) -> String {
    let dir = |d: Option<MelodicDirection>| d.map_or("-", MelodicDirection::short);
    let mut s = String::from("phrase  idx  char  tone  pitches   expected  actual  status\n");
    for r in &doc.rows {
        let pitches = match r.prev_pitch {
            Some(p) => format!("{p}->{}", r.pitch),
            None => format!("{}", r.pitch),
        };
        s.push_str(&format!(
            "{:>6}  {:>3}  {}    {:<4}  {:<8}  {:<8}  {:<6}  {:?}\n",
            r.phrase,
            r.index,
            r.char,
            r.tone.to_string(),
            pitches,
            dir(r.expected),
            dir(r.actual),
            r.status
        ));
    }
    let t = &doc.summary;
    s.push_str(&format!(
        "chars {}  forced {}  matched {}  mismatched {}  skipped {}  rate {:.4}\n",
        t.chars,
        t.forced,
        t.matched,
        t.checked - t.matched,
        t.skipped,
        doc.rate
    ));
    s
}

pub fn run(a: &CheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let seg = load_segmenter(a.segmenter.as_deref())?;
    let melody = load_melody(&a.input)?;
    let text = if Path::new(&a.lyrics).is_file() {
        read(Path::new(&a.lyrics))?
    } else {
        a.lyrics.clone()
    };
    let doc = check_lyrics(
        &melody,
        &split_lines(&text),
        &Lexicon::bundled(),
        &seg,
        a.segment,
        a.flat_policy,
    )?;
    let rendered = match a.format {
        CheckFormat::Table => render_table(&doc),
        CheckFormat::Structured => serde_json::to_string_pretty(&doc).expect("serialize") + "\n",
    };
    let _ = out.write_all(rendered.as_bytes());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitting() {
        assert_eq!(split_lines("春 风\n起/落\n\n"), ["春风", "起", "落"]);
    }
}
