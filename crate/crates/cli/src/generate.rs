use std::io::Write;

use serde::Serialize;

use m2l_core::agents::{
    generate_song, prompts::prompt_templates, AgentGroup, Generated, PipelineConfig, RhymeMode,
    Role,
};
use m2l_core::phonology::Phonology;

use crate::{
    load_client, load_melody, load_segmenter, runtime, usage, write, CliResult, GenerateArgs,
};

/// The lyrics file.
#[derive(Debug, Serialize)]
pub struct LyricsDoc<'a> {
    pub melody: String,
    pub title: &'a str,
    pub group: u8,
    pub members: Vec<Role>,
    pub model_id: &'a str,
    pub config: &'a PipelineConfig,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// One entry per generated phrase; rests appear as spaces.
    pub lines: Vec<String>,
    pub trace_digest: String,
}

pub fn config_from_args(a: &crate::GenerateArgs) -> PipelineConfig {
    PipelineConfig {
        k: a.k,
        max_rounds: a.max_rounds,
        max_retries: a.max_retries,
        temperature: a.temperature,
        rhyme_mode: a.rhyme.parse().expect("infallible"),
        ..PipelineConfig::default()
    }
}

pub fn run(a: &GenerateArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = config_from_args(a);
    cfg.validate().map_err(usage)?;
    let phonology = Phonology::bundled();
    if let RhymeMode::Class(name) = &cfg.rhyme_mode {
        phonology.rhymes.by_name(name).map_err(usage)?;
    }
    let group = AgentGroup::numbered(a.group).map_err(usage)?;
    let segmenter = load_segmenter(a.segmenter.as_deref())?;
    let llm = load_client(&a.llm_config)?;
    let melody = load_melody(&a.input)?;

    if let Some(p) = &a.dump_prompts {
        let text: String = prompt_templates()
            .into_iter()
            .map(|(name, t)| format!("===== {name} =====\n{t}\n"))
            .collect();
        write(p, &text)?;
    }

    let result = generate_song(
        &melody,
        a.theme.as_deref(),
        &group,
        &cfg,
        &llm,
        &phonology,
        &segmenter,
    );
    let (generated, error): (Generated, Option<String>) = match result {
        Ok(g) => (g, None),
        Err(f) => {
            let msg = f.to_string();
            (f.partial, Some(msg))
        }
    };

    let doc = LyricsDoc {
        melody: a.input.melody.display().to_string(),
        title: melody.title(),
        group: a.group,
        members: group.members().collect(),
        model_id: llm.model_id(),
        config: &cfg,
        complete: error.is_none(),
        error: error.clone(),
        lines: generated.lines.iter().map(|l| l.text()).collect(),
        trace_digest: generated.trace.digest(),
    };
    let json = serde_json::to_string_pretty(&doc).expect("lyrics serialize") + "\n";
    write(&a.out, &json)?;
    if let Some(t) = &a.trace {
        write(t, &generated.trace.to_jsonl())?;
    }
    for l in &doc.lines {
        let _ = writeln!(out, "{l}");
    }
    let _ = writeln!(
        out,
        "{} of {} lines, {} model calls, trace {}",
        doc.lines.len(),
        melody.phrases().len(),
        generated.trace.model_calls(),
        &doc.trace_digest[..12]
    );
    match error {
        None => Ok(()),
        Some(e) => Err(runtime(format!("partial generation: {e}"))),
    }
}
