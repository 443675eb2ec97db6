use super::prompts::checker_spec;
use super::trace::{Outcome, TraceEntry};
use super::{
    render_lyrics, request, CandidateLyric, CheckerFeedback, GenerationContext, MismatchPosition,
    PipelineConfig, Role,
};
use crate::align::{check_phrase, FlatPolicy, Status};
use crate::control::{extract_blocks, render_prompt, ExtractionRule};
use crate::llm::{text_digest, LlmClient};
use crate::phonology::{Lexicon, Segmenter, Tone};

pub const NO_CONTEXT: &str = "no context";
pub const DEFAULT_SCORE: u8 = 3;

/// Tones for a sung line: word readings where the segmenter finds a listed
/// word, primary character readings otherwise. Characters missing from the
/// lexicon get `Neutral` so their pairs are skipped.
pub(crate) fn line_tones(text: &str, lex: &Lexicon, seg: &dyn Segmenter) -> Vec<Tone> {
    let mut out = Vec::with_capacity(text.chars().count());
    for w in seg.segment(text) {
        match lex.word(&w) {
            Some(prons) if prons.len() == w.chars().count() => {
                out.extend(prons.iter().map(|p| p.tone()))
            }
            _ => out.extend(
                w.chars()
                    .map(|c| lex.primary(c).map(|p| p.tone()).unwrap_or(Tone::Neutral)),
            ),
        }
    }
    out
}

/// Reads a 1 to 5 score from a single fenced block; the text after the
/// block is the note.
pub fn parse_consistency(response: &str) -> Result<(u8, String), String> {
    let blocks =
        extract_blocks(response, &ExtractionRule::fenced(1..=1)).map_err(|e| e.to_string())?;
    let score = match blocks[0].trim() {
        s if s.len() == 1 => s.parse::<u8>().ok().filter(|d| (1..=5).contains(d)),
        _ => None,
    }
    .ok_or_else(|| format!("score {:?} is not a digit from 1 to 5", blocks[0].trim()))?;
    let note = response
        .rsplit(crate::control::FENCE)
        .next()
        .unwrap_or("")
        .trim()
        .to_string();
    Ok((score, note))
}

/// Tone mismatches come from the alignment rules, with no model involved.
/// Consistency takes one model call; with no preceding lyrics the call is
/// skipped and the score defaults to 3. Model or parse failure leaves the
/// score unavailable.
#[allow(clippy::too_many_arguments)]
pub fn check_candidate(
    ctx: &GenerationContext<'_>,
    cand: &CandidateLyric,
    index: usize,
    round: usize,
    lex: &Lexicon,
    seg: &dyn Segmenter,
    cfg: &PipelineConfig,
    llm: &dyn LlmClient,
) -> (CheckerFeedback, TraceEntry) {
    let sung = cand.line.sung();
    let tones = line_tones(&sung, lex, seg);
    let verdicts = check_phrase(ctx.phrase(), &tones, None, FlatPolicy::Skip)
        .expect("candidate fits the phrase");
    let mismatch_positions: Vec<MismatchPosition> = verdicts
        .iter()
        .filter(|v| v.status == Status::Mismatch)
        .map(|v| MismatchPosition {
            index: v.index,
            expected: v.expected.expect("mismatch has a direction"),
            actual: v.actual.expect("mismatch has a direction"),
        })
        .collect();

    let mut entry = TraceEntry {
        segment: ctx.segment_index,
        round,
        agent: Role::Checker,
        candidate: Some(index),
        attempt: 0,
        prompt_digest: None,
        response_digest: None,
        outcome: Outcome::Feedback {
            mismatch_count: mismatch_positions.len(),
            consistency_score: None,
            note: String::new(),
        },
    };

    let (score, note) = if ctx.lyrics_so_far.is_empty() {
        (Some(DEFAULT_SCORE), NO_CONTEXT.to_string())
    } else {
        let spec = checker_spec().section("Preceding lyrics", render_lyrics(ctx.lyrics_so_far));
        let user = render_prompt(&spec, &format!("New line: {}", cand.line.text()))
            .expect("checker spec is valid");
        let req = request(cfg, llm, user);
        entry.prompt_digest = Some(req.digest());
        match llm.complete(&req) {
            Err(e) => (None, format!("unavailable: {e}")),
            Ok(resp) => {
                entry.response_digest = Some(text_digest(&resp));
                match parse_consistency(&resp) {
                    Ok((s, n)) => (Some(s), n),
                    Err(why) => (None, format!("unavailable: {why}")),
                }
            }
        }
    };
    entry.outcome = Outcome::Feedback {
        mismatch_count: mismatch_positions.len(),
        consistency_score: score,
        note: note.clone(),
    };
    (
        CheckerFeedback {
            mismatch_count: mismatch_positions.len(),
            mismatch_positions,
            consistency_note: note,
            consistency_score: score,
        },
        entry,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{LyricLine, RhymeMode};
    use crate::align::{expected_direction, MelodicDirection};
    use crate::llm::{CompletionRequest, LlmError, ScriptedClient};
    use crate::melody::{Melody, Phrase};
    use crate::phonology::DictSegmenter;

    fn setup(pitches: &[u8]) -> Melody {
        let pairs: Vec<(u8, f64)> = pitches.iter().map(|&p| (p, 1.0)).collect();
        let p = Phrase::from_pairs(&pairs).unwrap();
        Melody::new("t", None, vec![p.clone(), p]).unwrap()
    }

    fn cand(m: &Melody, i: usize, s: &str) -> CandidateLyric {
        CandidateLyric {
            line: LyricLine::fit(&m.phrases()[i], s).unwrap(),
            creator_round: 1,
        }
    }

    fn never() -> ScriptedClient {
        ScriptedClient::new("m", |_: &CompletionRequest| panic!("no call expected"))
    }

    #[test]
    fn all_matching_line() {
        // 天 T1, 明 T2, 地 T4, 久 T3.
        // T1→T2 Desc, T2→T4 Asc, T4→T3 Desc.
        let m = setup(&[67, 64, 65, 60]);
        let lex = Lexicon::bundled();
        let seg = DictSegmenter::from_words(Vec::<String>::new());
        assert_eq!(
            line_tones("天明地久", &lex, &seg),
            [Tone::T1, Tone::T2, Tone::T4, Tone::T3]
        );
        let ctx = GenerationContext::new(&m, 0, &[], None, &RhymeMode::Off).unwrap();
        let (fb, entry) = check_candidate(
            &ctx,
            &cand(&m, 0, "天明地久"),
            0,
            1,
            &lex,
            &seg,
            &PipelineConfig::default(),
            &never(),
        );
        assert_eq!(fb.mismatch_count, 0);
        assert_eq!(fb.consistency_score, Some(3));
        assert_eq!(fb.consistency_note, NO_CONTEXT);
        assert_eq!(entry.prompt_digest, None);
    }

    #[test]
    fn inverted_line_mismatches_everywhere() {
        // Same tones, every melodic step reversed.
        let m = setup(&[60, 64, 62, 67]);
        let lex = Lexicon::bundled();
        let seg = DictSegmenter::from_words(Vec::<String>::new());
        let ctx = GenerationContext::new(&m, 0, &[], None, &RhymeMode::Off).unwrap();
        let (fb, _) = check_candidate(
            &ctx,
            &cand(&m, 0, "天明地久"),
            0,
            1,
            &lex,
            &seg,
            &PipelineConfig::default(),
            &never(),
        );
        assert_eq!(fb.mismatch_count, 3);
        assert_eq!(fb.mismatch_positions[0].index, 1);
        assert_eq!(
            fb.mismatch_positions[0].expected,
            expected_direction(Tone::T1, Tone::T2).unwrap()
        );
        assert_eq!(fb.mismatch_positions[0].actual, MelodicDirection::Ascending);
    }

    #[test]
    fn consistency_from_model_and_degraded() {
        let m = setup(&[60, 62, 64, 65]);
        let lex = Lexicon::bundled();
        let seg = DictSegmenter::bundled();
        let prev = [LyricLine::fit(&m.phrases()[0], "天明地久").unwrap()];
        let ctx = GenerationContext::new(&m, 1, &prev, None, &RhymeMode::Off).unwrap();
        let c = cand(&m, 1, "海阔天空");
        let cfg = PipelineConfig::default();

        let good =
            ScriptedClient::new(
                "m",
                |_: &CompletionRequest| Ok("```4```\nFits well.".into()),
            );
        let (fb, e) = check_candidate(&ctx, &c, 0, 1, &lex, &seg, &cfg, &good);
        assert_eq!(
            (fb.consistency_score, fb.consistency_note.as_str()),
            (Some(4), "Fits well.")
        );
        assert!(e.prompt_digest.is_some());

        let down = ScriptedClient::new("m", |r: &CompletionRequest| {
            Err(LlmError::Timeout { digest: r.digest() })
        });
        let (fb2, _) = check_candidate(&ctx, &c, 0, 1, &lex, &seg, &cfg, &down);
        assert_eq!(fb2.consistency_score, None);
        assert_eq!(fb2.mismatch_positions, fb.mismatch_positions);

        let junk = ScriptedClient::new("m", |_: &CompletionRequest| Ok("```9```".into()));
        assert_eq!(
            check_candidate(&ctx, &c, 0, 1, &lex, &seg, &cfg, &junk)
                .0
                .consistency_score,
            None
        );
    }

    #[test]
    fn consistency_parse() {
        assert_eq!(parse_consistency("```5```").unwrap(), (5, String::new()));
        assert!(parse_consistency("```0```").is_err());
        assert!(parse_consistency("```45```").is_err());
        assert!(parse_consistency("5").is_err());
    }

    #[test]
    fn unknown_chars_are_neutral() {
        let lex = Lexicon::parse("天\ttian1\n", "").unwrap();
        let seg = DictSegmenter::from_words(Vec::<String>::new());
        assert_eq!(line_tones("天地", &lex, &seg), [Tone::T1, Tone::Neutral]);
    }
}
