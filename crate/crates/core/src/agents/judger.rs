use super::prompts::judger_spec;
use super::trace::{Outcome, TraceEntry};
use super::{
    render_lyrics, request, CandidateLyric, CheckerFeedback, Decision, GenerationContext,
    JudgerVerdict, PipelineConfig, Role,
};
use crate::control::{extract_blocks, render_prompt, ExtractionRule, FENCE};
use crate::llm::{text_digest, LlmClient};

/// Parses `SELECT <i>` (0-based, `i < n`) or `REGENERATE` from a single
/// fenced block. Case and surrounding whitespace are ignored.
pub fn parse_verdict(response: &str, n: usize) -> Result<Decision, String> {
    let blocks =
        extract_blocks(response, &ExtractionRule::fenced(1..=1)).map_err(|e| e.to_string())?;
    let body = blocks[0].trim().to_ascii_uppercase();
    let mut words = body.split_whitespace();
    match (words.next(), words.next(), words.next()) {
        (Some("REGENERATE"), None, None) => Ok(Decision::Regenerate),
        (Some("SELECT"), Some(i), None) => match i.parse::<usize>() {
            Ok(i) if i < n => Ok(Decision::Select(i)),
            Ok(i) => Err(format!(
                "candidate {i} does not exist; valid indices are 0 to {}",
                n - 1
            )),
            Err(_) => Err(format!("{i:?} is not a candidate index")),
        },
        _ => Err(format!(
            "expected SELECT <index> or REGENERATE, got {:?}",
            blocks[0].trim()
        )),
    }
}

/// Index minimizing (mismatch count, -consistency score, index). Missing
/// scores count as 0; without feedback the first candidate wins.
pub fn coerce_best(feedbacks: Option<&[CheckerFeedback]>, n: usize) -> usize {
    match feedbacks {
        None => 0,
        Some(fb) => (0..n)
            .min_by_key(|&i| {
                (
                    fb[i].mismatch_count,
                    std::cmp::Reverse(fb[i].consistency_score.unwrap_or(0)),
                    i,
                )
            })
            .unwrap_or(0),
    }
}

fn prompt(
    ctx: &GenerationContext<'_>,
    candidates: &[CandidateLyric],
    feedbacks: Option<&[CheckerFeedback]>,
    round: usize,
    max_rounds: usize,
    retry_note: Option<&str>,
) -> String {
    let mut spec = judger_spec().section("Preceding lyrics", render_lyrics(ctx.lyrics_so_far));
    if let Some(r) = ctx.requirements {
        spec = spec.section("Requirements", r);
    }
    for (i, c) in candidates.iter().enumerate() {
        let mut body = c.line.text();
        if let Some(fb) = feedbacks {
            let f = &fb[i];
            body.push_str(&format!("\ntone mismatches: {}", f.mismatch_count));
            for p in &f.mismatch_positions {
                body.push_str(&format!(
                    "\n  character {}: melody {} but tones want {}",
                    p.index + 1,
                    p.actual.short(),
                    p.expected.short()
                ));
            }
            match f.consistency_score {
                Some(s) => body.push_str(&format!("\nconsistency: {s}/5 ({})", f.consistency_note)),
                None => body.push_str("\nconsistency: unavailable"),
            }
        }
        spec = spec.section(format!("Candidate {i}"), body);
    }
    let mut payload = format!(
        "Segment {} of {}, round {round} of {max_rounds}.",
        ctx.segment_index + 1,
        ctx.melody.phrases().len()
    );
    if round >= max_rounds {
        payload.push_str(" This is the last round: REGENERATE is not available.");
    }
    if let Some(note) = retry_note {
        payload.push_str(&format!(
            "\nYour previous reply could not be used: {note}. Reply with {FENCE}SELECT <index>{FENCE} or {FENCE}REGENERATE{FENCE}."
        ));
    }
    render_prompt(&spec, &payload).expect("judger spec is valid")
}

/// One model call, plus one parse-retry. `Regenerate` in the last round and
/// answers still unusable after the retry are coerced to the best candidate
/// by [`coerce_best`].
#[allow(clippy::too_many_arguments)]
pub fn judge(
    ctx: &GenerationContext<'_>,
    candidates: &[CandidateLyric],
    feedbacks: Option<&[CheckerFeedback]>,
    round: usize,
    max_rounds: usize,
    cfg: &PipelineConfig,
    llm: &dyn LlmClient,
) -> (JudgerVerdict, Vec<TraceEntry>) {
    assert!(!candidates.is_empty(), "judge needs at least one candidate");
    if let Some(fb) = feedbacks {
        assert_eq!(fb.len(), candidates.len(), "one feedback per candidate");
    }
    let n = candidates.len();
    let mut trace = Vec::new();
    let mut last_error = None;
    for attempt in 0..2 {
        let req = request(
            cfg,
            llm,
            prompt(
                ctx,
                candidates,
                feedbacks,
                round,
                max_rounds,
                last_error.as_deref(),
            ),
        );
        let mut entry = TraceEntry {
            segment: ctx.segment_index,
            round,
            agent: Role::Judger,
            candidate: None,
            attempt,
            prompt_digest: Some(req.digest()),
            response_digest: None,
            outcome: Outcome::Unparsed {
                reason: String::new(),
            },
        };
        let parsed = match llm.complete(&req) {
            Err(e) => {
                entry.outcome = Outcome::ModelError {
                    message: e.to_string(),
                };
                Err("the request failed".to_string())
            }
            Ok(resp) => {
                entry.response_digest = Some(text_digest(&resp));
                parse_verdict(&resp, n).map(|d| (d, rationale(&resp)))
            }
        };
        match parsed {
            Ok((decision, rationale)) => {
                let coerced = decision == Decision::Regenerate && round >= max_rounds;
                let decision = if coerced {
                    Decision::Select(coerce_best(feedbacks, n))
                } else {
                    decision
                };
                entry.outcome = Outcome::Verdict {
                    decision: decision_str(decision),
                    coerced,
                };
                trace.push(entry);
                return (
                    JudgerVerdict {
                        decision,
                        rationale,
                    },
                    trace,
                );
            }
            Err(why) => {
                if !matches!(entry.outcome, Outcome::ModelError { .. }) {
                    entry.outcome = Outcome::Unparsed {
                        reason: why.clone(),
                    };
                }
                trace.push(entry);
                last_error = Some(why);
            }
        }
    }
    let decision = Decision::Select(coerce_best(feedbacks, n));
    trace.push(TraceEntry {
        segment: ctx.segment_index,
        round,
        agent: Role::Judger,
        candidate: None,
        attempt: 2,
        prompt_digest: None,
        response_digest: None,
        outcome: Outcome::Verdict {
            decision: decision_str(decision),
            coerced: true,
        },
    });
    (
        JudgerVerdict {
            decision,
            rationale: format!(
                "coerced after unusable verdict: {}",
                last_error.unwrap_or_default()
            ),
        },
        trace,
    )
}

fn decision_str(d: Decision) -> String {
    match d {
        Decision::Select(i) => format!("SELECT {i}"),
        Decision::Regenerate => "REGENERATE".to_string(),
    }
}

fn rationale(resp: &str) -> String {
    resp.split(FENCE)
        .enumerate()
        .filter(|(i, _)| i % 2 == 0)
        .map(|(_, s)| s.trim())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{LyricLine, RhymeMode};
    use crate::llm::{CompletionRequest, Program, ScriptedClient};
    use crate::melody::{Melody, Phrase};

    fn melody() -> Melody {
        let p = Phrase::from_pairs(&[(60, 1.0), (62, 1.0)]).unwrap();
        Melody::new("t", None, vec![p]).unwrap()
    }

    fn cands(m: &Melody) -> Vec<CandidateLyric> {
        ["春风", "秋月", "夏雨"]
            .iter()
            .map(|s| CandidateLyric {
                line: LyricLine::fit(&m.phrases()[0], s).unwrap(),
                creator_round: 1,
            })
            .collect()
    }

    fn fb(mismatches: usize, score: Option<u8>) -> CheckerFeedback {
        use crate::agents::MismatchPosition;
        use crate::align::MelodicDirection::*;
        CheckerFeedback {
            mismatch_count: mismatches,
            mismatch_positions: (0..mismatches)
                .map(|i| MismatchPosition {
                    index: i + 1,
                    expected: Descending,
                    actual: Ascending,
                })
                .collect(),
            consistency_note: String::new(),
            consistency_score: score,
        }
    }

    fn fixed(s: &'static str) -> ScriptedClient {
        ScriptedClient::new("m", move |_: &CompletionRequest| Ok(s.to_string()))
    }

    #[test]
    fn parses() {
        assert_eq!(parse_verdict("```SELECT 2```", 3), Ok(Decision::Select(2)));
        assert_eq!(
            parse_verdict("I pick\n```\nselect 0\n```", 3),
            Ok(Decision::Select(0))
        );
        assert_eq!(
            parse_verdict("```REGENERATE```", 3),
            Ok(Decision::Regenerate)
        );
        assert!(parse_verdict("```SELECT 3```", 3).is_err());
        assert!(parse_verdict("```SELECT -1```", 3).is_err());
        assert!(parse_verdict("SELECT 1", 3).is_err());
        assert!(parse_verdict("```SELECT 1``` ```SELECT 2```", 3).is_err());
    }

    #[test]
    fn select_and_regenerate() {
        let m = melody();
        let ctx = GenerationContext::new(&m, 0, &[], None, &RhymeMode::Off).unwrap();
        let cfg = PipelineConfig::default();
        let (v, t) = judge(
            &ctx,
            &cands(&m),
            None,
            1,
            2,
            &cfg,
            &fixed("```SELECT 2``` best imagery"),
        );
        assert_eq!(v.decision, Decision::Select(2));
        assert_eq!(v.rationale, "best imagery");
        assert_eq!(t.len(), 1);
        let (v, _) = judge(
            &ctx,
            &cands(&m),
            None,
            1,
            2,
            &cfg,
            &fixed("```REGENERATE```"),
        );
        assert_eq!(v.decision, Decision::Regenerate);
    }

    #[test]
    fn last_round_coerces_by_tie_break() {
        let m = melody();
        let ctx = GenerationContext::new(&m, 0, &[], None, &RhymeMode::Off).unwrap();
        let fbs = [fb(3, Some(5)), fb(0, Some(1)), fb(1, Some(5))];
        let (v, t) = judge(
            &ctx,
            &cands(&m),
            Some(&fbs),
            2,
            2,
            &PipelineConfig::default(),
            &fixed("```REGENERATE```"),
        );
        assert_eq!(v.decision, Decision::Select(1));
        assert!(matches!(
            t[0].outcome,
            Outcome::Verdict { coerced: true, .. }
        ));
    }

    #[test]
    fn tie_break_order() {
        assert_eq!(
            coerce_best(Some(&[fb(1, Some(3)), fb(1, Some(4)), fb(2, Some(5))]), 3),
            1
        );
        assert_eq!(coerce_best(Some(&[fb(1, None), fb(1, Some(1))]), 2), 1);
        assert_eq!(coerce_best(Some(&[fb(0, Some(2)), fb(0, Some(2))]), 2), 0);
        assert_eq!(coerce_best(None, 3), 0);
    }

    #[test]
    fn unparseable_after_retry_is_coerced() {
        let m = melody();
        let ctx = GenerationContext::new(&m, 0, &[], None, &RhymeMode::Off).unwrap();
        let fbs = [fb(2, Some(5)), fb(1, None), fb(1, Some(2))];
        let llm = fixed("they are all lovely");
        let (v, t) = judge(
            &ctx,
            &cands(&m),
            Some(&fbs),
            1,
            2,
            &PipelineConfig::default(),
            &llm,
        );
        assert_eq!(v.decision, Decision::Select(2));
        assert_eq!(llm.calls(), 2);
        assert_eq!(t.len(), 3);
        assert!(matches!(
            t[2].outcome,
            Outcome::Verdict { coerced: true, .. }
        ));
        assert_ne!(t[0].prompt_digest, t[1].prompt_digest);
    }

    #[test]
    fn parse_retry_recovers() {
        let m = melody();
        let ctx = GenerationContext::new(&m, 0, &[], None, &RhymeMode::Off).unwrap();
        let llm = ScriptedClient::program(
            Program::Sequence {
                responses: vec!["hmm".into(), "```SELECT 1```".into()],
            },
            "m",
        );
        let (v, t) = judge(
            &ctx,
            &cands(&m),
            None,
            1,
            2,
            &PipelineConfig::default(),
            &llm,
        );
        assert_eq!(v.decision, Decision::Select(1));
        assert_eq!(t.len(), 2);
    }
}
