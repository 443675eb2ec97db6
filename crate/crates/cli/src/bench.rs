//! Character-count benchmark: how often each output-control method yields
//! exactly the requested number of characters.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use m2l_core::control::{
    extract_blocks, fill_blanks, render_prompt, validate_lyric, ExtractionRule, Method, PromptSpec,
    FENCE, GRID_CLOSE, GRID_OPEN,
};
use m2l_core::llm::{CompletionRequest, LlmClient};

use crate::{load_client, usage, write, BenchArgs, CliResult};

const PERSONA: &str = "You are an experienced Mandarin lyricist.";
const THEMES: &[&str] = &[
    "春天", "月光", "故乡", "大海", "离别", "青春", "雨夜", "远方", "星空", "思念",
];
const EXAMPLE_TEXT: &str = "春风吹绿柳岸边花开满山坡明月照我还家路";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchCell {
    pub model: String,
    pub method: Method,
    pub count: usize,
    pub trials: usize,
    pub accurate: usize,
    /// Trials whose backend call failed; counted as inaccurate.
    pub errors: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub models: Vec<String>,
    pub methods: Vec<Method>,
    pub counts: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub cells: Vec<BenchCell>,
}

impl BenchReport {
    pub fn cell(&self, model: &str, method: Method, count: usize) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.method == method && c.count == count)
    }
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub methods: Vec<Method>,
    pub counts: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub temperature: f64,
    pub parallel: usize,
}

impl BenchPlan {
    pub fn validate(&self) -> CliResult<()> {
        if self.methods.is_empty() {
            return Err(usage("at least one method is required"));
        }
        if self.counts.is_empty() || self.counts.contains(&0) {
            return Err(usage("counts must be >= 1"));
        }
        if self.trials == 0 {
            return Err(usage("trials must be >= 1"));
        }
        if self.parallel == 0 {
            return Err(usage("parallel must be >= 1"));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(usage("temperature must be >= 0"));
        }
        Ok(())
    }
}

fn example_line(n: usize) -> String {
    EXAMPLE_TEXT.chars().cycle().take(n).collect()
}

/// The prompt for one trial.
pub fn bench_prompt(
    method: Method,
    count: usize,
    theme: &str,
    trial: usize,
    trials: usize,
) -> String {
    let objective =
        format!("Write one song lyric about {theme} using exactly {count} Chinese characters.");
    let mut spec = PromptSpec::new(PERSONA, objective, method);
    match method {
        Method::FormattingAndExample => {
            let ex = example_line(count);
            spec = spec.example(
                format!("A lyric about 春天 with exactly {count} characters"),
                format!("{FENCE}{ex}{FENCE}"),
            );
        }
        Method::FillInBlank => {
            let grid: Vec<String> = example_line(3)
                .chars()
                .enumerate()
                .map(|(i, c)| format!("{}.{GRID_OPEN}{c}{GRID_CLOSE}", i + 1))
                .collect();
            spec = spec.blanks(count).example(
                "A lyric about 春天 with exactly 3 characters",
                grid.join("\n"),
            );
        }
        _ => {}
    }
    let payload = format!(
        "Theme: {theme}\nCharacters: {count}\nRequest {} of {trials}",
        trial + 1
    );
    render_prompt(&spec, &payload).expect("bench spec is valid")
}

/// Whether `response` carries exactly `count` characters under `method`'s
/// extraction rule.
pub fn score_response(method: Method, count: usize, response: &str) -> bool {
    match method {
        Method::Unrestricted | Method::Prompting => validate_lyric(response, count).is_ok(),
        Method::Formatting | Method::FormattingAndExample => {
            extract_blocks(response, &ExtractionRule::fenced(1..=1))
                .is_ok_and(|b| validate_lyric(&b[0], count).is_ok())
        }
        Method::FillInBlank => extract_blocks(response, &ExtractionRule::grid(count))
            .is_ok_and(|b| fill_blanks(&b, count).is_ok()),
    }
}

/// Runs every (model, method, count, trial). Trials may run concurrently;
/// the report does not depend on scheduling.
pub fn run_bench(models: &[(String, &dyn LlmClient)], plan: &BenchPlan) -> CliResult<BenchReport> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let themes: Vec<Vec<&str>> = plan
        .counts
        .iter()
        .map(|_| {
            (0..plan.trials)
                .map(|_| *THEMES.choose(&mut rng).expect("themes"))
                .collect()
        })
        .collect();

    let mut jobs = Vec::new();
    for m in 0..models.len() {
        for &method in &plan.methods {
            for ci in 0..plan.counts.len() {
                for t in 0..plan.trials {
                    jobs.push((m, method, ci, t));
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.parallel)
        .build()
        .map_err(|e| crate::runtime(e.to_string()))?;
    let outcomes: Vec<((usize, Method, usize), bool, bool)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, method, ci, t)| {
                let (name, client) = &models[m];
                let count = plan.counts[ci];
                let user = bench_prompt(method, count, themes[ci][t], t, plan.trials);
                let req = CompletionRequest {
                    temperature: plan.temperature,
                    model_id: client.model_id().to_string(),
                    ..CompletionRequest::new(PERSONA, user)
                };
                match client.complete(&req) {
                    Ok(resp) => ((m, method, ci), score_response(method, count, &resp), false),
                    Err(e) => {
                        log::warn!("{name} {method} {count} trial {}: {e}", t + 1);
                        ((m, method, ci), false, true)
                    }
                }
            })
            .collect()
    });

    let mut tally: BTreeMap<(usize, Method, usize), (usize, usize)> = BTreeMap::new();
    for (key, ok, err) in outcomes {
        let e = tally.entry(key).or_default();
        e.0 += usize::from(ok);
        e.1 += usize::from(err);
    }
    let cells = tally
        .into_iter()
        .map(|((m, method, ci), (accurate, errors))| BenchCell {
            model: models[m].0.clone(),
            method,
            count: plan.counts[ci],
            trials: plan.trials,
            accurate,
            errors,
            accuracy: accurate as f64 / plan.trials as f64,
        })
        .collect();
    Ok(BenchReport {
        models: models.iter().map(|(n, _)| n.clone()).collect(),
        methods: plan.methods.clone(),
        counts: plan.counts.clone(),
        trials: plan.trials,
        seed: plan.seed,
        cells,
    })
}

/// Methods as rows, one column per (model, count).
pub fn render_matrix(r: &BenchReport) -> String {
    let mut header = vec![format!("{:<24}", "method")];
    for m in &r.models {
        for c in &r.counts {
            header.push(format!("{:>10}", format!("{m}@{c}")));
        }
    }
    let mut s = header.join(" ") + "\n";
    for &method in &r.methods {
        let mut row = vec![format!("{:<24}", method.as_str())];
        for m in &r.models {
            for &c in &r.counts {
                let v = r
                    .cell(m, method, c)
                    .map_or("-".to_string(), |x| format!("{:.0}%", x.accuracy * 100.0));
                row.push(format!("{v:>10}"));
            }
        }
        s.push_str(&(row.join(" ") + "\n"));
    }
    s
}

fn unique_names(names: Vec<String>) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    names
        .into_iter()
        .map(|n| {
            let k = seen.entry(n.clone()).or_default();
            *k += 1;
            if *k == 1 {
                n
            } else {
                format!("{n}#{k}")
            }
        })
        .collect()
}

pub fn run(a: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    let plan = BenchPlan {
        methods: a.methods.clone(),
        counts: a.counts.clone(),
        trials: a.trials,
        seed: a.seed,
        temperature: a.temperature,
        parallel: a.parallel,
    };
    plan.validate()?;
    let clients = a
        .llm_configs
        .iter()
        .map(|p| load_client(p))
        .collect::<CliResult<Vec<_>>>()?;
    let names = unique_names(clients.iter().map(|c| c.model_id().to_string()).collect());
    let models: Vec<(String, &dyn LlmClient)> = names
        .into_iter()
        .zip(clients.iter().map(|c| c.as_ref() as &dyn LlmClient))
        .collect();
    let report = run_bench(&models, &plan)?;
    let _ = out.write_all(render_matrix(&report).as_bytes());
    if let Some(p) = &a.report {
        write(
            p,
            &(serde_json::to_string_pretty(&report).expect("serialize") + "\n"),
        )?;
    }
    Ok(())
}
