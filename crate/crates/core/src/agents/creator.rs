use rayon::prelude::*;

use super::prompts::creator_spec;
use super::suggester::RhymeSuggestion;
use super::trace::{Outcome, TraceEntry};
use super::{
    describe_phrase, render_lyrics, request, AgentError, CandidateLyric, GenerationContext,
    LyricLine, PipelineConfig, Role,
};
use crate::control::{
    extract_blocks, fill_blanks, render_prompt, retry_validated, Attempt, ExtractionRule,
};
use crate::llm::{text_digest, LlmClient};

fn prompt(
    ctx: &GenerationContext<'_>,
    suggestion: Option<&RhymeSuggestion>,
    round: usize,
    variation: usize,
    k: usize,
    feedback: Option<&str>,
) -> String {
    let n = ctx.phrase().syllable_count();
    let mut spec = creator_spec(n)
        .section("Melody", describe_phrase(ctx.phrase()))
        .section("Preceding lyrics", render_lyrics(ctx.lyrics_so_far));
    if let Some(r) = ctx.requirements {
        spec = spec.section("Requirements", r);
    }
    if let Some(body) = suggestion.and_then(RhymeSuggestion::render) {
        spec = spec.section("Rhyme suggestion", body);
    }
    let mut payload = format!(
        "Characters needed: {n}\nSegment {} of {}, round {round}, variation {} of {k}",
        ctx.segment_index + 1,
        ctx.melody.phrases().len(),
        variation + 1
    );
    if let Some(f) = feedback {
        payload.push_str("\nYour previous answer was rejected: ");
        payload.push_str(f);
    }
    render_prompt(&spec, &payload).expect("creator spec has blanks")
}

/// Reads a filled grid and fits it to the phrase, or explains the rejection.
fn parse_line(ctx: &GenerationContext<'_>, response: &str) -> Result<LyricLine, String> {
    let n = ctx.phrase().syllable_count();
    let blocks = extract_blocks(response, &ExtractionRule::grid(n)).map_err(|e| {
        format!("{e}. Fill every one of the {n} numbered slots with exactly one character.")
    })?;
    let text = fill_blanks(&blocks, n).map_err(|v| v.feedback())?;
    LyricLine::fit(ctx.phrase(), &text).map_err(|e| e.to_string())
}

/// One model call per candidate, each with up to `cfg.max_retries` retries
/// after an invalid answer. Candidates come back in index order; those that
/// never produced a valid line are dropped. Fails only when none succeed.
pub fn create_candidates(
    ctx: &GenerationContext<'_>,
    suggestion: Option<&RhymeSuggestion>,
    round: usize,
    cfg: &PipelineConfig,
    llm: &dyn LlmClient,
) -> (Result<Vec<CandidateLyric>, AgentError>, Vec<TraceEntry>) {
    let per_candidate: Vec<(Option<LyricLine>, Vec<TraceEntry>, Vec<String>)> = (0..cfg.k)
        .into_par_iter()
        .map(|j| {
            let mut entries = Vec::new();
            let result = retry_validated::<_, std::convert::Infallible, _>(
                cfg.max_retries,
                |attempt, feedback| {
                    let req = request(cfg, llm, prompt(ctx, suggestion, round, j, cfg.k, feedback));
                    let mut entry = TraceEntry {
                        segment: ctx.segment_index,
                        round,
                        agent: Role::Creator,
                        candidate: Some(j),
                        attempt,
                        prompt_digest: Some(req.digest()),
                        response_digest: None,
                        outcome: Outcome::Rejected {
                            reason: String::new(),
                        },
                    };
                    let verdict = match llm.complete(&req) {
                        Err(e) => {
                            entry.outcome = Outcome::ModelError {
                                message: e.to_string(),
                            };
                            Attempt::Invalid("the previous request failed; try again".into())
                        }
                        Ok(resp) => {
                            entry.response_digest = Some(text_digest(&resp));
                            match parse_line(ctx, &resp) {
                                Ok(line) => {
                                    entry.outcome = Outcome::Candidate { text: line.text() };
                                    Attempt::Valid(line)
                                }
                                Err(reason) => {
                                    entry.outcome = Outcome::Rejected {
                                        reason: reason.clone(),
                                    };
                                    Attempt::Invalid(reason)
                                }
                            }
                        }
                    };
                    entries.push(entry);
                    Ok(verdict)
                },
            );
            match result {
                Ok(Ok((line, _))) => (Some(line), entries, Vec::new()),
                Ok(Err(reasons)) => (None, entries, reasons),
                Err(never) => match never {},
            }
        })
        .collect();

    let mut trace = Vec::new();
    let mut out = Vec::new();
    let mut reasons = Vec::new();
    for (line, entries, why) in per_candidate {
        trace.extend(entries);
        reasons.extend(why);
        if let Some(line) = line {
            out.push(CandidateLyric {
                line,
                creator_round: round,
            });
        }
    }
    if out.is_empty() {
        reasons.dedup();
        return (
            Err(AgentError::CreationFailed {
                segment: ctx.segment_index,
                reasons: reasons.join("; "),
            }),
            trace,
        );
    }
    (Ok(out), trace)
}
