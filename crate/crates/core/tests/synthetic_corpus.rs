//! The bundled synthetic corpus against its answer sheet, with a from-scratch
//! recount that shares no code with the library's alignment rules.

use std::path::PathBuf;

use m2l_core::metrics::{analyze_corpus, analyze_record, parse_corpus, AnalysisOptions, Mode};
use m2l_core::phonology::{DictSegmenter, Segmenter, Tone};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data/synthetic")
        .join(name)
}

// Rows: previous tone, columns: next tone, T1..T4. 'A' ascending, 'D' descending.
const TABLE: [&str; 4] = ["DDDD", "ADDA", "AADA", "ADDD"];

fn digit(t: Tone) -> usize {
    match t {
        Tone::T1 => 1,
        Tone::T2 => 2,
        Tone::T3 => 3,
        Tone::T4 => 4,
        Tone::Neutral => 0,
    }
}

fn recount(tones: &[Tone], pitches: &[u8], starts: Option<&[usize]>) -> String {
    (0..tones.len())
        .map(|i| {
            if i == 0 || starts.is_some_and(|s| s.contains(&i)) {
                return 'F';
            }
            let (a, b) = (digit(tones[i - 1]), digit(tones[i]));
            if a == 0 || b == 0 || pitches[i] == pitches[i - 1] {
                return 'S';
            }
            let want = TABLE[a - 1].as_bytes()[b - 1];
            let got = if pitches[i] > pitches[i - 1] {
                b'A'
            } else {
                b'D'
            };
            if want == got {
                'M'
            } else {
                'X'
            }
        })
        .collect()
}

fn totals(s: &str) -> [u64; 5] {
    let c = |ch| s.chars().filter(|&x| x == ch).count() as u64;
    // chars, forced, checked, matched, skipped
    [
        s.chars().count() as u64,
        c('F'),
        c('M') + c('X'),
        c('M'),
        c('S'),
    ]
}

#[test]
fn answer_sheet_matches_recount_and_analyzer() {
    let corpus = parse_corpus(&std::fs::read_to_string(data("corpus.jsonl")).unwrap()).unwrap();
    let sheet: Value =
        serde_json::from_str(&std::fs::read_to_string(data("answers.json")).unwrap()).unwrap();
    let seg = DictSegmenter::from_file(&data("words.txt")).unwrap();
    let per = sheet["per_record"].as_array().unwrap();
    assert!(corpus.len() >= 50);
    assert_eq!(corpus.len(), per.len());

    let nsm_opts = AnalysisOptions::new(Mode::NonSegment);
    let sm_opts = AnalysisOptions::new(Mode::Segment).segmenter(&seg);
    let mut sums = [[0u64; 5]; 2];
    for ((_, r), expect) in corpus.iter().zip(per) {
        let tones = r.tones().unwrap();
        let pitches = r.phrase().sung_pitches();
        let words: Vec<String> = expect["words"]
            .as_array()
            .unwrap()
            .iter()
            .map(|w| w.as_str().unwrap().to_string())
            .collect();
        assert_eq!(seg.segment(r.lyric()), words, "{}", r.lyric());
        let mut starts = Vec::new();
        let mut at = 0;
        for w in &words {
            starts.push(at);
            at += w.chars().count();
        }
        for (k, (starts, key, opts)) in [
            (None, "nsm", &nsm_opts),
            (Some(starts.as_slice()), "sm", &sm_opts),
        ]
        .into_iter()
        .enumerate()
        {
            let mine = recount(tones, &pitches, starts);
            assert_eq!(mine, expect[key].as_str().unwrap(), "{} {key}", r.lyric());
            let lib: String = analyze_record(r, opts)
                .unwrap()
                .iter()
                .map(|v| match v.status {
                    m2l_core::align::Status::Forced => 'F',
                    m2l_core::align::Status::Match => 'M',
                    m2l_core::align::Status::Mismatch => 'X',
                    m2l_core::align::Status::Skipped => 'S',
                })
                .collect();
            assert_eq!(lib, mine, "{} {key}", r.lyric());
            for (s, t) in sums[k].iter_mut().zip(totals(&mine)) {
                *s += t;
            }
        }
    }

    for (k, (mode, opts)) in [("NSM", &nsm_opts), ("SM", &sm_opts)]
        .into_iter()
        .enumerate()
    {
        let t = &sheet["totals"][mode];
        let want: Vec<u64> = ["chars", "forced", "checked", "matched", "skipped"]
            .iter()
            .map(|f| t[f].as_u64().unwrap())
            .collect();
        assert_eq!(sums[k].to_vec(), want, "{mode}");
        let report = analyze_corpus(&corpus, opts).unwrap();
        let tl = report.tally();
        assert_eq!(
            vec![tl.chars, tl.forced, tl.checked, tl.matched, tl.skipped],
            want,
            "{mode}"
        );
        let (num, den) = (want[1] + want[3], want[0] - want[4]);
        assert_eq!(report.rate, num as f64 / den as f64);
        assert_eq!(report.theoretical_min, want[1] as f64 / den as f64);
    }
}

#[test]
fn documented_totals() {
    // Pinned so an accidental fixture edit is noticed.
    let sheet: Value =
        serde_json::from_str(&std::fs::read_to_string(data("answers.json")).unwrap()).unwrap();
    let t = &sheet["totals"];
    let rate = |m: &str| {
        let x = &t[m];
        (
            x["forced"].as_u64().unwrap() + x["matched"].as_u64().unwrap(),
            x["chars"].as_u64().unwrap() - x["skipped"].as_u64().unwrap(),
        )
    };
    assert_eq!(rate("NSM"), (186, 298));
    assert_eq!(rate("SM"), (308, 354));
}
