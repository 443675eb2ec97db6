use std::io::Write;
use std::path::Path;

use serde::Serialize;

use m2l_core::metrics::{
    analyze_corpus, parse_corpus, AnalysisOptions, MatchReport, MetricsError, Mode,
};

use crate::{
    load_lexicon, load_segmenter, read, runtime, usage, write, AnalyzeArgs, CliResult, ModeArg,
};

#[derive(Debug, Serialize)]
pub struct AnalysisDoc {
    pub corpus: String,
    pub reports: Vec<MatchReport>,
}

pub fn summary(r: &MatchReport) -> String {
    let t = r.tally();
    format!(
        "{:<3} rate {:.4} ({}/{})  min {:.4}  random {:.4}  records {}  excluded {}",
        match r.mode {
            Mode::NonSegment => "NSM",
            Mode::Segment => "SM",
        },
        r.rate,
        t.forced + t.matched,
        t.scored(),
        r.theoretical_min,
        r.random_expectation,
        r.records_analyzed,
        r.excluded.len()
    )
}

pub fn run(a: &AnalyzeArgs, out: &mut dyn Write) -> CliResult<()> {
    let modes: &[Mode] = match a.mode {
        ModeArg::Nsm => &[Mode::NonSegment],
        ModeArg::Sm => &[Mode::Segment],
        ModeArg::Both => &[Mode::NonSegment, Mode::Segment],
    };
    let segmenter = match (&a.segmenter, a.mode) {
        (None, ModeArg::Sm | ModeArg::Both) => return Err(usage(
            "SM mode needs a segmenter dictionary: pass --segmenter <file> or --segmenter bundled",
        )),
        (None, ModeArg::Nsm) => None,
        (Some(s), _) => Some(load_segmenter(Some(Path::new(s)))?),
    };
    let lexicon = load_lexicon(a.lexicon.as_deref(), a.words.as_deref())?;

    let records = match parse_corpus(&read(&a.corpus)?) {
        Ok(r) => r,
        Err(MetricsError::Malformed(lines)) => {
            for (line, msg) in &lines {
                eprintln!("{}:{line}: {msg}", a.corpus.display());
            }
            return Err(runtime(format!("{} malformed records", lines.len())));
        }
        Err(e) => return Err(runtime(e)),
    };

    let mut reports = Vec::new();
    for &mode in modes {
        let mut opts = AnalysisOptions::new(mode)
            .flat_policy(a.flat_policy)
            .lexicon(&lexicon);
        if let Some(s) = &segmenter {
            // Segmented readings also help tone lookup in NSM mode.
            opts = opts.segmenter(s);
        }
        let report = analyze_corpus(&records, &opts).map_err(runtime)?;
        for e in &report.excluded {
            eprintln!(
                "{}:{}: excluded: {}",
                a.corpus.display(),
                e.record,
                e.reason
            );
        }
        let _ = writeln!(out, "{}", summary(&report));
        reports.push(report);
    }
    if let Some(p) = &a.report {
        let doc = AnalysisDoc {
            corpus: a.corpus.display().to_string(),
            reports,
        };
        write(
            p,
            &(serde_json::to_string_pretty(&doc).expect("report serialize") + "\n"),
        )?;
    }
    Ok(())
}
