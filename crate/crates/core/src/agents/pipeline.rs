use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checker::check_candidate;
use super::creator::create_candidates;
use super::judger::judge;
use super::suggester::suggest_rhyme;
use super::trace::{AgentTrace, Outcome, TraceEntry};
use super::{
    AgentError, AgentGroup, Decision, GenerationContext, LyricLine, PipelineConfig, RhymeMode, Role,
};
use crate::llm::LlmClient;
use crate::melody::Melody;
use crate::phonology::{Phonology, Segmenter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    pub lines: Vec<LyricLine>,
    pub trace: AgentTrace,
}

/// The error plus everything produced before it.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationFailure {
    pub error: AgentError,
    pub partial: Generated,
}

impl std::fmt::Display for GenerationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} ({} of the lines written)",
            self.error,
            self.partial.lines.len()
        )
    }
}

impl std::error::Error for GenerationFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn rounds(group: &AgentGroup, cfg: &PipelineConfig) -> usize {
    if group.has(Role::Judger) {
        cfg.max_rounds
    } else {
        1
    }
}

/// Upper bound on model calls for one segment: per round, every candidate
/// may use all its Creator attempts, the Checker makes one call per
/// candidate, and the Judger one call plus one parse-retry.
pub fn segment_call_budget(group: &AgentGroup, cfg: &PipelineConfig) -> usize {
    let mut per_round = cfg.k * (1 + cfg.max_retries);
    if group.has(Role::Checker) {
        per_round += cfg.k;
    }
    if group.has(Role::Judger) {
        per_round += 2;
    }
    rounds(group, cfg) * per_round
}

/// Writes one line per phrase, in order; each chosen line becomes context
/// for the next segment.
pub fn generate_song(
    melody: &Melody,
    requirements: Option<&str>,
    group: &AgentGroup,
    cfg: &PipelineConfig,
    llm: &dyn LlmClient,
    phonology: &Phonology,
    segmenter: &dyn Segmenter,
) -> Result<Generated, GenerationFailure> {
    let mut out = Generated {
        lines: Vec::new(),
        trace: AgentTrace::new(),
    };
    let fail = |error: AgentError, partial: Generated| GenerationFailure { error, partial };
    if let Err(e) = cfg.validate() {
        return Err(fail(e, out));
    }
    if let RhymeMode::Class(name) = &cfg.rhyme_mode {
        if let Err(e) = phonology.rhymes.by_name(name) {
            return Err(fail(e.into(), out));
        }
    }
    let rhyme_on = group.has(Role::Suggester) && cfg.rhyme_mode != RhymeMode::Off;
    let max_rounds = rounds(group, cfg);

    for seg in 0..melody.phrases().len() {
        let ctx =
            match GenerationContext::new(melody, seg, &out.lines, requirements, &cfg.rhyme_mode) {
                Ok(c) => c,
                Err(e) => return Err(fail(e, out)),
            };

        let suggestion = if rhyme_on {
            match suggest_rhyme(&ctx, phonology, cfg.suggestion_limit) {
                Ok(s) => {
                    out.trace.push(TraceEntry {
                        segment: seg,
                        round: 1,
                        agent: Role::Suggester,
                        candidate: None,
                        attempt: 0,
                        prompt_digest: None,
                        response_digest: None,
                        outcome: Outcome::Suggestion {
                            class: s.class.clone(),
                            candidates: s.candidates_text(),
                        },
                    });
                    Some(s)
                }
                Err(e) => return Err(fail(e, out)),
            }
        } else {
            None
        };

        let mut chosen = None;
        for round in 1..=max_rounds {
            let (created, entries) = create_candidates(&ctx, suggestion.as_ref(), round, cfg, llm);
            out.trace.extend(entries);
            let candidates = match created {
                Ok(c) => c,
                Err(e) => return Err(fail(e, out)),
            };
            if !group.has(Role::Judger) {
                chosen = Some(candidates[0].line.clone());
                break;
            }
            let feedbacks = if group.has(Role::Checker) {
                let checked: Vec<_> = candidates
                    .par_iter()
                    .enumerate()
                    .map(|(i, c)| {
                        check_candidate(&ctx, c, i, round, &phonology.lexicon, segmenter, cfg, llm)
                    })
                    .collect();
                let (fbs, entries): (Vec<_>, Vec<_>) = checked.into_iter().unzip();
                out.trace.extend(entries);
                Some(fbs)
            } else {
                None
            };
            let (verdict, entries) = judge(
                &ctx,
                &candidates,
                feedbacks.as_deref(),
                round,
                max_rounds,
                cfg,
                llm,
            );
            out.trace.extend(entries);
            if let Decision::Select(i) = verdict.decision {
                chosen = Some(candidates[i].line.clone());
                break;
            }
        }
        let line = chosen.expect("the last round always selects");
        debug_assert!(line.fits(ctx.phrase()));
        out.lines.push(line);
    }
    Ok(out)
}
