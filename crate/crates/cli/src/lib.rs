//! `m2l` command-line front end: `generate`, `analyze`, `check` and
//! `count-bench`.
//!
//! Exit codes: 0 success, 1 runtime failure (including partial generation),
//! 2 usage or configuration error.

pub mod analyze;
pub mod bench;
pub mod check;
pub mod generate;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use m2l_core::align::FlatPolicy;
use m2l_core::control::Method;
use m2l_core::llm::{build_client, ClientConfig, LlmClient};
use m2l_core::melody::{import_midi, parse_melody, Melody, DEFAULT_GAP_THRESHOLD};
use m2l_core::phonology::{DictSegmenter, Lexicon};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_FAILURE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

pub(crate) fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "m2l", version, about = "Mandarin melody-to-lyric toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write lyrics for a melody, one line per phrase, with an agent group.
    Generate(GenerateArgs),
    /// Tone-melody match rates (NSMR/SMR) over an aligned corpus.
    Analyze(AnalyzeArgs),
    /// Per-character tone/melody verdicts for lyrics set to a melody.
    Check(CheckArgs),
    /// Exact character-count accuracy of the output-control methods.
    CountBench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct MelodyInput {
    /// Melody file: JSON document, or a .mid/.midi file.
    pub melody: PathBuf,
    /// MIDI only: silence (in beats) that starts a new phrase.
    #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD)]
    pub gap_threshold: f64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub input: MelodyInput,
    /// Agent group: 1 = C, 2 = C+J, 3 = C+Ch+J, 4 = S+C+Ch+J.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub group: u8,
    /// Theme or other requirements passed to every agent.
    #[arg(long)]
    pub theme: Option<String>,
    /// Rhyme: `auto`, `off`, or a rhyme class name.
    #[arg(long, default_value = "auto")]
    pub rhyme: String,
    /// Candidates per round.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub max_rounds: usize,
    /// Creator retries per candidate after a wrong-length answer.
    #[arg(long, default_value_t = m2l_core::control::DEFAULT_MAX_RETRIES)]
    pub max_retries: usize,
    #[arg(long, default_value_t = 0.7)]
    pub temperature: f64,
    /// Completion backend config (JSON).
    #[arg(long)]
    pub llm_config: PathBuf,
    /// Segmenter dictionary for word readings (one word per line).
    #[arg(long)]
    pub segmenter: Option<PathBuf>,
    /// Lyrics output file (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Agent trace output file (JSON lines).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also write the rendered agent prompt templates to this file.
    #[arg(long)]
    pub dump_prompts: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Nsm,
    Sm,
    Both,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Corpus file: one JSON record per line.
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// skip | count-as-match | count-as-mismatch
    #[arg(long, default_value = "skip")]
    pub flat_policy: FlatPolicy,
    /// Segmenter dictionary (one word per line), or `bundled`. Required for SM.
    #[arg(long)]
    pub segmenter: Option<String>,
    /// Tone lexicon (TSV) for records without tones; bundled by default.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Word-reading overrides (TSV) used with --lexicon.
    #[arg(long, requires = "lexicon")]
    pub words: Option<PathBuf>,
    /// Structured report output file (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckFormat {
    Table,
    Structured,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: MelodyInput,
    /// Lyrics, one line per phrase (newline or `/` separated), or a file path.
    #[arg(long)]
    pub lyrics: String,
    #[arg(long, value_enum, default_value_t = CheckFormat::Table)]
    pub format: CheckFormat,
    /// Check only intra-word pairs (word-initial characters are forced).
    #[arg(long)]
    pub segment: bool,
    #[arg(long, default_value = "skip")]
    pub flat_policy: FlatPolicy,
    /// Segmenter dictionary; bundled by default.
    #[arg(long)]
    pub segmenter: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated methods; all five by default.
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL.to_vec())]
    pub methods: Vec<Method>,
    /// Comma-separated character counts.
    #[arg(long, value_delimiter = ',', default_values_t = vec![5usize, 10, 20])]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Backend config; repeat for one column per model.
    #[arg(long = "llm-config", required = true)]
    pub llm_configs: Vec<PathBuf>,
    /// Structured report output file (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Concurrent trials.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Seed for theme selection.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.7)]
    pub temperature: f64,
}

/// Parses `args` (including the program name) and runs the command,
/// writing human output to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate::run(&a, out),
        Command::Analyze(a) => analyze::run(&a, out),
        Command::Check(a) => check::run(&a, out),
        Command::CountBench(a) => bench::run(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

pub(crate) fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

pub(crate) fn load_melody(input: &MelodyInput) -> CliResult<Melody> {
    let path = &input.melody;
    let is_midi = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"));
    if is_midi {
        let bytes = std::fs::read(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        import_midi(&bytes, input.gap_threshold)
            .map_err(|e| runtime(format!("{}: {e}", path.display())))
    } else {
        parse_melody(&read(path)?).map_err(|e| runtime(format!("{}: {e}", path.display())))
    }
}

/// Loads a client config; relative fixture paths resolve against the
/// config file's directory.
pub(crate) fn load_client(path: &Path) -> CliResult<Box<dyn LlmClient>> {
    let cfg = ClientConfig::from_file(path).map_err(usage)?;
    let base = path.parent().unwrap_or(Path::new("."));
    build_client(&cfg, base).map_err(usage)
}

pub(crate) fn load_segmenter(path: Option<&Path>) -> CliResult<DictSegmenter> {
    match path {
        None => Ok(DictSegmenter::bundled()),
        Some(p) if p == Path::new("bundled") => Ok(DictSegmenter::bundled()),
        Some(p) => DictSegmenter::from_file(p).map_err(|e| usage(format!("{}: {e}", p.display()))),
    }
}

pub(crate) fn load_lexicon(path: Option<&Path>, words: Option<&Path>) -> CliResult<Lexicon> {
    match path {
        None => Ok(Lexicon::bundled()),
        Some(p) => {
            Lexicon::from_files(p, words).map_err(|e| usage(format!("{}: {e}", p.display())))
        }
    }
}
