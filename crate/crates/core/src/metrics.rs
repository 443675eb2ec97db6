//! Corpus match rates.
//!
//! A character counts as matched when it is a forced (pair-free) position or
//! when the pair it closes agrees with the tone rules. The pooled rate is
//! `(forced + matched) / (chars - skipped)`. If every checked pair failed,
//! the rate would fall to the forced fraction, the theoretical minimum; with
//! each checked pair matching with probability 1/2 it is expected to sit
//! halfway between that minimum and 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{check_phrase, AlignError, AlignmentVerdict, FlatPolicy, Status};
use crate::melody::{MelodyError, Phrase, PhraseDoc};
use crate::phonology::{word_starts, Lexicon, PhonologyError, Segmenter, Tone};
use crate::text::is_cjk_ideograph;

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Every adjacent pair in a phrase is checked.
    #[serde(rename = "NSM")]
    NonSegment,
    /// Only pairs inside a segmented word are checked.
    #[serde(rename = "SM")]
    Segment,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no analyzable records ({excluded} excluded)")]
    NothingAnalyzable { excluded: usize },
    #[error("segment mode requires a word segmenter")]
    MissingSegmenter,
    #[error("malformed corpus records:\n{}", format_malformed(.0))]
    Malformed(Vec<(usize, String)>),
}

fn format_malformed(v: &[(usize, String)]) -> String {
    v.iter()
        .map(|(l, m)| format!("  line {l}: {m}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error(transparent)]
    Phonology(#[from] PhonologyError),
    #[error("no tones given and no lexicon to derive them")]
    NoLexicon,
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error("segment mode requires a word segmenter")]
    MissingSegmenter,
}

/// One analyzed unit: a phrase and its sung characters.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRecord {
    phrase: Phrase,
    lyric: String,
    tones: Option<Vec<Tone>>,
}

impl CorpusRecord {
    pub fn new(
        phrase: Phrase,
        lyric: impl Into<String>,
        tones: Option<Vec<Tone>>,
    ) -> Result<Self, String> {
        let lyric = lyric.into();
        if let Some(c) = lyric.chars().find(|&c| !is_cjk_ideograph(c)) {
            return Err(format!("lyric contains non-ideograph {c:?}"));
        }
        let n = lyric.chars().count();
        if n != phrase.syllable_count() {
            return Err(format!(
                "lyric has {n} characters but phrase has {} sung notes",
                phrase.syllable_count()
            ));
        }
        if let Some(t) = &tones {
            if t.len() != n {
                return Err(format!("{} tones for {n} characters", t.len()));
            }
        }
        Ok(CorpusRecord {
            phrase,
            lyric,
            tones,
        })
    }

    pub fn phrase(&self) -> &Phrase {
        &self.phrase
    }

    pub fn lyric(&self) -> &str {
        &self.lyric
    }

    pub fn tones(&self) -> Option<&[Tone]> {
        self.tones.as_deref()
    }
}

#[derive(Serialize, Deserialize)]
struct RecordDoc {
    phrase: PhraseDoc,
    lyric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tones: Option<Vec<Tone>>,
}

/// Parses one corpus line.
pub fn parse_record(line: &str) -> Result<CorpusRecord, String> {
    let doc: RecordDoc = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let phrase = doc
        .phrase
        .into_phrase(0)
        .map_err(|e: MelodyError| e.to_string())?;
    CorpusRecord::new(phrase, doc.lyric, doc.tones)
}

pub fn serialize_record(r: &CorpusRecord) -> String {
    serde_json::to_string(&RecordDoc {
        phrase: PhraseDoc::from_phrase(&r.phrase),
        lyric: r.lyric.clone(),
        tones: r.tones.clone(),
    })
    .expect("record serialization is infallible")
}

/// Parses a line-delimited corpus, collecting every malformed line.
/// Blank lines are ignored. Returns `(line number, record)` pairs.
pub fn parse_corpus(text: &str) -> Result<Vec<(usize, CorpusRecord)>, MetricsError> {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(line) {
            Ok(r) => ok.push((i + 1, r)),
            Err(e) => bad.push((i + 1, e)),
        }
    }
    if !bad.is_empty() {
        return Err(MetricsError::Malformed(bad));
    }
    if ok.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    Ok(ok)
}

#[derive(Clone, Copy)]
pub struct AnalysisOptions<'a> {
    pub mode: Mode,
    pub flat_policy: FlatPolicy,
    pub segmenter: Option<&'a dyn Segmenter>,
    pub lexicon: Option<&'a Lexicon>,
}

impl<'a> AnalysisOptions<'a> {
    pub fn new(mode: Mode) -> Self {
        AnalysisOptions {
            mode,
            flat_policy: FlatPolicy::Skip,
            segmenter: None,
            lexicon: None,
        }
    }

    pub fn segmenter(mut self, s: &'a dyn Segmenter) -> Self {
        self.segmenter = Some(s);
        self
    }

    pub fn lexicon(mut self, l: &'a Lexicon) -> Self {
        self.lexicon = Some(l);
        self
    }

    pub fn flat_policy(mut self, f: FlatPolicy) -> Self {
        self.flat_policy = f;
        self
    }
}

fn record_tones(r: &CorpusRecord, opts: &AnalysisOptions<'_>) -> Result<Vec<Tone>, RecordError> {
    if let Some(t) = &r.tones {
        return Ok(t.clone());
    }
    let lex = opts.lexicon.ok_or(RecordError::NoLexicon)?;
    match opts.segmenter {
        Some(seg) => Ok(lex.tones_for_text(&r.lyric, seg)?),
        None => r
            .lyric
            .chars()
            .map(|c| Ok(lex.primary(c)?.tone()))
            .collect(),
    }
}

/// Verdicts for one record under the given mode.
pub fn analyze_record(
    r: &CorpusRecord,
    opts: &AnalysisOptions<'_>,
) -> Result<Vec<AlignmentVerdict>, RecordError> {
    let tones = record_tones(r, opts)?;
    let starts = match opts.mode {
        Mode::NonSegment => None,
        Mode::Segment => {
            let seg = opts.segmenter.ok_or(RecordError::MissingSegmenter)?;
            Some(word_starts(&seg.segment(&r.lyric)))
        }
    };
    Ok(check_phrase(
        &r.phrase,
        &tones,
        starts.as_deref(),
        opts.flat_policy,
    )?)
}

/// Integer tallies for a set of verdicts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub chars: u64,
    pub forced: u64,
    pub checked: u64,
    pub matched: u64,
    pub skipped: u64,
}

impl Tally {
    pub fn of(verdicts: &[AlignmentVerdict]) -> Self {
        let mut t = Tally {
            chars: verdicts.len() as u64,
            ..Tally::default()
        };
        for v in verdicts {
            match v.status {
                Status::Forced => t.forced += 1,
                Status::Skipped => t.skipped += 1,
                Status::Match => {
                    t.checked += 1;
                    t.matched += 1;
                }
                Status::Mismatch => t.checked += 1,
            }
        }
        t
    }

    fn add(self, o: Tally) -> Tally {
        Tally {
            chars: self.chars + o.chars,
            forced: self.forced + o.forced,
            checked: self.checked + o.checked,
            matched: self.matched + o.matched,
            skipped: self.skipped + o.skipped,
        }
    }

    /// Denominator of every rate: characters that are not skipped.
    pub fn scored(&self) -> u64 {
        self.chars - self.skipped
    }

    pub fn rate(&self) -> f64 {
        (self.forced + self.matched) as f64 / self.scored() as f64
    }

    pub fn theoretical_min(&self) -> f64 {
        self.forced as f64 / self.scored() as f64
    }

    /// Histogram bin of this tally's rate, computed in integers.
    fn bin(&self) -> usize {
        let num = (self.forced + self.matched) * HISTOGRAM_BINS as u64;
        ((num / self.scored()) as usize).min(HISTOGRAM_BINS - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedRecord {
    /// 1-based position in the input (line number for corpus files).
    pub record: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub mode: Mode,
    pub total_chars: u64,
    pub forced_matches: u64,
    pub checked_pairs: u64,
    pub matched_pairs: u64,
    pub skipped_pairs: u64,
    pub rate: f64,
    pub theoretical_min: f64,
    pub random_expectation: f64,
    pub records_analyzed: u64,
    pub flat_policy: FlatPolicy,
    pub segmenter: Option<String>,
    pub histogram: Vec<HistogramBin>,
    pub excluded: Vec<ExcludedRecord>,
}

impl MatchReport {
    pub fn tally(&self) -> Tally {
        Tally {
            chars: self.total_chars,
            forced: self.forced_matches,
            checked: self.checked_pairs,
            matched: self.matched_pairs,
            skipped: self.skipped_pairs,
        }
    }
}

/// Aggregates a corpus. Records are analyzed in parallel; sums and the
/// histogram are order-independent, so the report does not depend on
/// scheduling. `records` pairs each record with its 1-based position.
pub fn analyze_corpus(
    records: &[(usize, CorpusRecord)],
    opts: &AnalysisOptions<'_>,
) -> Result<MatchReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    if opts.mode == Mode::Segment && opts.segmenter.is_none() {
        return Err(MetricsError::MissingSegmenter);
    }
    let results: Vec<Result<Tally, ExcludedRecord>> = records
        .par_iter()
        .map(|(pos, r)| {
            analyze_record(r, opts)
                .map(|v| Tally::of(&v))
                .map_err(|e| ExcludedRecord {
                    record: *pos,
                    reason: e.to_string(),
                })
        })
        .collect();

    let mut total = Tally::default();
    let mut bins = [0u64; HISTOGRAM_BINS];
    let mut excluded = Vec::new();
    let mut analyzed = 0u64;
    for r in results {
        match r {
            Ok(t) => {
                total = total.add(t);
                bins[t.bin()] += 1;
                analyzed += 1;
            }
            Err(e) => excluded.push(e),
        }
    }
    if analyzed == 0 {
        return Err(MetricsError::NothingAnalyzable {
            excluded: excluded.len(),
        });
    }
    let min = total.theoretical_min();
    Ok(MatchReport {
        mode: opts.mode,
        total_chars: total.chars,
        forced_matches: total.forced,
        checked_pairs: total.checked,
        matched_pairs: total.matched,
        skipped_pairs: total.skipped,
        rate: total.rate(),
        theoretical_min: min,
        random_expectation: (min + 1.0) / 2.0,
        records_analyzed: analyzed,
        flat_policy: opts.flat_policy,
        segmenter: opts.segmenter.map(|s| s.name().to_string()),
        histogram: bins
            .iter()
            .enumerate()
            .map(|(i, &count)| HistogramBin {
                lo: i as f64 / HISTOGRAM_BINS as f64,
                hi: (i + 1) as f64 / HISTOGRAM_BINS as f64,
                count,
            })
            .collect(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonology::DictSegmenter;
    use proptest::prelude::*;
    use Tone::*;

    fn rec(pitches: &[u8], lyric: &str, tones: &[Tone]) -> (usize, CorpusRecord) {
        let pairs: Vec<(u8, f64)> = pitches.iter().map(|&p| (p, 1.0)).collect();
        let r = CorpusRecord::new(
            Phrase::from_pairs(&pairs).unwrap(),
            lyric,
            Some(tones.to_vec()),
        )
        .unwrap();
        (1, r)
    }

    #[test]
    fn record_examples() {
        let (_, r) = rec(&[60, 64, 62], "天地人", &[T2, T1, T4]);
        let nsm = AnalysisOptions::new(Mode::NonSegment);
        let t = Tally::of(&analyze_record(&r, &nsm).unwrap());
        assert_eq!((t.chars, t.forced, t.matched, t.checked), (3, 1, 2, 2));

        let seg = DictSegmenter::from_words(["天地"]);
        let sm = AnalysisOptions::new(Mode::Segment).segmenter(&seg);
        let v = analyze_record(&r, &sm).unwrap();
        assert_eq!(v[0].status, Status::Forced);
        assert_eq!(v[2].status, Status::Forced);
        assert_eq!(Tally::of(&v).checked, 1);

        let (_, one) = rec(&[60], "天", &[T3]);
        for opts in [nsm, sm] {
            let t = Tally::of(&analyze_record(&one, &opts).unwrap());
            assert_eq!(t.rate(), 1.0);
        }
    }

    #[test]
    fn corpus_aggregation() {
        let r = rec(&[60, 64, 62], "天地人", &[T2, T1, T4]);
        let corpus = vec![r.clone(), (2, r.1)];
        let rep = analyze_corpus(&corpus, &AnalysisOptions::new(Mode::NonSegment)).unwrap();
        assert_eq!(rep.rate, 1.0);
        assert_eq!((rep.forced_matches, rep.total_chars), (2, 6));
        assert_eq!(rep.theoretical_min, 1.0 / 3.0);
        assert_eq!(rep.histogram[19].count, 2);
        assert_eq!(rep.histogram.len(), 20);
    }

    #[test]
    fn all_mismatch_hits_minimum() {
        // T1->T1 wants Desc; ascending melody
        let corpus = vec![rec(&[60, 62, 64, 65], "天天天天", &[T1, T1, T1, T1])];
        let rep = analyze_corpus(&corpus, &AnalysisOptions::new(Mode::NonSegment)).unwrap();
        assert_eq!(rep.rate, rep.theoretical_min);
        assert_eq!(rep.rate, 0.25);
    }

    #[test]
    fn skipped_leave_denominator() {
        let corpus = vec![rec(&[60, 60, 64], "天天人", &[T2, T1, Neutral])];
        let rep = analyze_corpus(&corpus, &AnalysisOptions::new(Mode::NonSegment)).unwrap();
        assert_eq!(rep.skipped_pairs, 2);
        assert_eq!(rep.rate, 1.0);
        let opts = AnalysisOptions::new(Mode::NonSegment).flat_policy(FlatPolicy::CountAsMismatch);
        let rep = analyze_corpus(&corpus, &opts).unwrap();
        assert_eq!(
            (rep.skipped_pairs, rep.checked_pairs, rep.matched_pairs),
            (1, 1, 0)
        );
    }

    #[test]
    fn exclusion_and_errors() {
        let lex = Lexicon::parse("天\ttian1\n", "").unwrap();
        let good = rec(&[60, 64], "天天", &[T1, T1]);
        let unknown = (
            2,
            CorpusRecord::new(
                Phrase::from_pairs(&[(60, 1.0), (62, 1.0)]).unwrap(),
                "天地",
                None,
            )
            .unwrap(),
        );
        let opts = AnalysisOptions::new(Mode::NonSegment).lexicon(&lex);
        let rep = analyze_corpus(&[good, unknown.clone()], &opts).unwrap();
        assert_eq!(rep.records_analyzed, 1);
        assert_eq!(rep.excluded.len(), 1);
        assert_eq!(rep.excluded[0].record, 2);
        assert!(rep.excluded[0].reason.contains('地'));

        assert_eq!(
            analyze_corpus(std::slice::from_ref(&unknown), &opts).unwrap_err(),
            MetricsError::NothingAnalyzable { excluded: 1 }
        );
        assert_eq!(
            analyze_corpus(&[], &opts).unwrap_err(),
            MetricsError::EmptyCorpus
        );
        assert_eq!(
            analyze_corpus(&[unknown], &AnalysisOptions::new(Mode::Segment)).unwrap_err(),
            MetricsError::MissingSegmenter
        );
    }

    #[test]
    fn corpus_lines() {
        let text = concat!(
            r#"{"phrase":{"notes":[{"pitch":60,"duration":1},{"pitch":0,"duration":1},{"pitch":62,"duration":1}]},"lyric":"天地","tones":["T1","N"]}"#,
            "\n\n",
            r#"{"phrase":{"notes":[{"pitch":60,"duration":1}]},"lyric":"天，"}"#,
            "\n",
            r#"{"phrase":{"notes":[{"pitch":60,"duration":1}]},"lyric":"天地"}"#,
            "\n",
        );
        match parse_corpus(text).unwrap_err() {
            MetricsError::Malformed(v) => {
                assert_eq!(v.iter().map(|x| x.0).collect::<Vec<_>>(), vec![3, 4]);
            }
            e => panic!("{e}"),
        }
        let first = text.lines().next().unwrap();
        let parsed = parse_corpus(first).unwrap();
        assert_eq!(parsed[0].1.tones().unwrap(), &[T1, Neutral]);
        assert_eq!(
            parse_record(&serialize_record(&parsed[0].1)).unwrap(),
            parsed[0].1
        );
        assert_eq!(
            parse_corpus("\n \n").unwrap_err(),
            MetricsError::EmptyCorpus
        );
    }

    fn arb_record() -> impl Strategy<Value = CorpusRecord> {
        let tone = prop_oneof![Just(T1), Just(T2), Just(T3), Just(T4), Just(Neutral)];
        prop::collection::vec((40u8..80, tone, prop::bool::ANY), 1..10).prop_map(|v| {
            let pairs: Vec<(u8, f64)> = v.iter().map(|x| (x.0, 1.0)).collect();
            let lyric: String = v.iter().map(|x| if x.2 { '天' } else { '地' }).collect();
            let tones = v.iter().map(|x| x.1).collect();
            CorpusRecord::new(Phrase::from_pairs(&pairs).unwrap(), lyric, Some(tones)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn report_invariants(rs in prop::collection::vec(arb_record(), 1..12)) {
            let corpus: Vec<(usize, CorpusRecord)> = rs.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
            let seg = DictSegmenter::from_words(["天地", "地天天"]);
            let nsm = analyze_corpus(&corpus, &AnalysisOptions::new(Mode::NonSegment)).unwrap();
            let sm = analyze_corpus(&corpus, &AnalysisOptions::new(Mode::Segment).segmenter(&seg)).unwrap();
            for r in [&nsm, &sm] {
                let t = r.tally();
                prop_assert_eq!(t.chars, t.forced + t.checked + t.skipped);
                prop_assert!(r.rate >= r.theoretical_min && r.rate <= 1.0);
                prop_assert_eq!(r.histogram.iter().map(|b| b.count).sum::<u64>(), r.records_analyzed);
            }
            prop_assert_eq!(nsm.forced_matches, corpus.len() as u64);
            prop_assert!(sm.forced_matches >= nsm.forced_matches);

            // reversing the record order leaves the report byte-identical
            let mut rev = corpus.clone();
            rev.reverse();
            let again = analyze_corpus(&rev, &AnalysisOptions::new(Mode::NonSegment)).unwrap();
            prop_assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(&nsm).unwrap());
        }
    }
}
