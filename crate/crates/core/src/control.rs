//! Forward control (prompt construction) and backward control (block
//! extraction, recombination and length validation of model output).

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::text::count_cjk;

/// Instruction placed above the fill-in grid. Kept in one place so prompt
/// wording experiments only touch this constant and [`GRID_OPEN`] /
/// [`GRID_CLOSE`].
pub const FILL_GRID_INSTRUCTION: &str = "Fill exactly one Chinese character into each numbered \
slot below. Reply with the completed slots only, one per line, keeping the numbers and the \
brackets:";
pub const GRID_OPEN: &str = "【";
pub const GRID_CLOSE: &str = "】";

/// Default block fence for formatted answers.
pub const FENCE: &str = "```";

pub const DEFAULT_MAX_RETRIES: usize = 3;

/// The five output-control methods compared by the count benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Unrestricted,
    Prompting,
    Formatting,
    FormattingAndExample,
    FillInBlank,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Unrestricted,
        Method::Prompting,
        Method::Formatting,
        Method::FormattingAndExample,
        Method::FillInBlank,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Unrestricted => "unrestricted",
            Method::Prompting => "prompting",
            Method::Formatting => "formatting",
            Method::FormattingAndExample => "formatting-and-example",
            Method::FillInBlank => "fill-in-blank",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unrestricted" => Ok(Method::Unrestricted),
            "prompting" => Ok(Method::Prompting),
            "formatting" => Ok(Method::Formatting),
            "formatting-and-example" | "example" => Ok(Method::FormattingAndExample),
            "fill-in-blank" | "fill" => Ok(Method::FillInBlank),
            _ => Err(format!(
                "unknown method {s:?} (unrestricted | prompting | formatting | formatting-and-example | fill-in-blank)"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ControlError {
    #[error("fill-in-blank prompt needs at least one blank")]
    NoBlanks,
    #[error("formatting-and-example prompt needs at least one example")]
    NoExamples,
    #[error("invalid extraction rule: {0}")]
    Rule(String),
    #[error("no delimited blocks found")]
    NoBlocks,
    #[error("unbalanced delimiter at byte {offset}")]
    Unbalanced { offset: usize },
    #[error("expected {min}..={max} blocks, found {got}")]
    BlockCount { min: usize, max: usize, got: usize },
}

/// Structured prompt: persona, objective, delimited reference sections and
/// optional worked examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    persona: String,
    objective: String,
    sections: Vec<(String, String)>,
    examples: Vec<(String, String)>,
    method: Method,
    blanks: usize,
}

impl PromptSpec {
    pub fn new(persona: impl Into<String>, objective: impl Into<String>, method: Method) -> Self {
        PromptSpec {
            persona: persona.into(),
            objective: objective.into(),
            sections: Vec::new(),
            examples: Vec::new(),
            method,
            blanks: 0,
        }
    }

    pub fn section(mut self, label: impl Into<String>, body: impl Into<String>) -> Self {
        self.sections.push((label.into(), body.into()));
        self
    }

    pub fn example(mut self, input: impl Into<String>, output: impl Into<String>) -> Self {
        self.examples.push((input.into(), output.into()));
        self
    }

    /// Number of grid slots for [`Method::FillInBlank`].
    pub fn blanks(mut self, n: usize) -> Self {
        self.blanks = n;
        self
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn blank_count(&self) -> usize {
        self.blanks
    }

    pub fn persona(&self) -> &str {
        &self.persona
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        match self.method {
            Method::FillInBlank if self.blanks == 0 => Err(ControlError::NoBlanks),
            Method::FormattingAndExample if self.examples.is_empty() => {
                Err(ControlError::NoExamples)
            }
            _ => Ok(()),
        }
    }

    fn shows_examples(&self) -> bool {
        matches!(
            self.method,
            Method::FormattingAndExample | Method::FillInBlank
        ) && !self.examples.is_empty()
    }
}

fn method_instruction(m: Method) -> Option<&'static str> {
    match m {
        Method::Unrestricted => None,
        Method::Prompting => Some(
            "Count the Chinese characters in your answer before replying; the count must be \
exact. Punctuation does not count.",
        ),
        Method::Formatting | Method::FormattingAndExample => Some(
            "Put the answer inside a single ``` fenced block. Write nothing but Chinese \
characters inside the block.",
        ),
        Method::FillInBlank => Some("Answer by filling in the grid at the end of this message."),
    }
}

/// The numbered blank grid for `n` slots.
pub fn blank_grid(n: usize) -> String {
    let mut s = String::from(FILL_GRID_INSTRUCTION);
    for i in 1..=n {
        s.push_str(&format!("\n{i}.{GRID_OPEN}{GRID_CLOSE}"));
    }
    s
}

fn delimited(out: &mut String, label: &str, body: &str) {
    out.push_str(&format!("### {label}\n\"\"\"\n{body}\n\"\"\"\n\n"));
}

/// Renders a prompt. Output is a pure function of the inputs.
pub fn render_prompt(spec: &PromptSpec, payload: &str) -> Result<String, ControlError> {
    spec.validate()?;
    let mut out = String::new();
    out.push_str(spec.persona.trim());
    out.push_str("\n\n## Task\n");
    out.push_str(spec.objective.trim());
    out.push('\n');
    if let Some(ins) = method_instruction(spec.method) {
        out.push_str(ins);
        out.push('\n');
    }
    out.push('\n');
    for (label, body) in &spec.sections {
        delimited(&mut out, label, body);
    }
    if spec.shows_examples() {
        out.push_str("## Examples\n\n");
        for (i, (input, output)) in spec.examples.iter().enumerate() {
            delimited(&mut out, &format!("Example {} input", i + 1), input);
            delimited(&mut out, &format!("Example {} output", i + 1), output);
        }
    }
    delimited(&mut out, "Input", payload);
    if spec.method == Method::FillInBlank {
        out.push_str(&blank_grid(spec.blanks));
        out.push('\n');
    }
    Ok(out)
}

/// Delimiters and the allowed number of blocks. `open == close` means
/// fence semantics: occurrences pair up in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionRule {
    open: String,
    close: String,
    expected: RangeInclusive<usize>,
}

impl ExtractionRule {
    pub fn new(
        open: impl Into<String>,
        close: impl Into<String>,
        expected: RangeInclusive<usize>,
    ) -> Result<Self, ControlError> {
        let (open, close) = (open.into(), close.into());
        if open.is_empty() || close.is_empty() {
            return Err(ControlError::Rule("empty delimiter".into()));
        }
        if open != close && (open.contains(&close) || close.contains(&open)) {
            return Err(ControlError::Rule(format!(
                "delimiters {open:?} and {close:?} overlap"
            )));
        }
        if expected.is_empty() || *expected.start() == 0 {
            return Err(ControlError::Rule(
                "expected block range must start at 1 or more".into(),
            ));
        }
        Ok(ExtractionRule {
            open,
            close,
            expected,
        })
    }

    /// Triple-backtick fenced blocks.
    pub fn fenced(expected: RangeInclusive<usize>) -> Self {
        Self::new(FENCE, FENCE, expected).expect("fence rule is valid")
    }

    /// Exactly `n` filled grid slots.
    pub fn grid(n: usize) -> Self {
        Self::new(GRID_OPEN, GRID_CLOSE, n.max(1)..=n.max(1)).expect("grid rule is valid")
    }

    pub fn open(&self) -> &str {
        &self.open
    }

    pub fn close(&self) -> &str {
        &self.close
    }

    /// Wraps `body` in this rule's delimiters.
    pub fn wrap(&self, body: &str) -> String {
        format!("{}{}{}", self.open, body, self.close)
    }
}

/// Every non-overlapping delimited span of `response`, in order.
pub fn extract_blocks(response: &str, rule: &ExtractionRule) -> Result<Vec<String>, ControlError> {
    let blocks = if rule.open == rule.close {
        extract_fenced(response, &rule.open)?
    } else {
        extract_paired(response, &rule.open, &rule.close)?
    };
    if blocks.is_empty() {
        return Err(ControlError::NoBlocks);
    }
    if !rule.expected.contains(&blocks.len()) {
        return Err(ControlError::BlockCount {
            min: *rule.expected.start(),
            max: *rule.expected.end(),
            got: blocks.len(),
        });
    }
    Ok(blocks)
}

fn extract_fenced(s: &str, fence: &str) -> Result<Vec<String>, ControlError> {
    let marks: Vec<usize> = s.match_indices(fence).map(|(i, _)| i).collect();
    if marks.len() % 2 == 1 {
        return Err(ControlError::Unbalanced {
            offset: *marks.last().unwrap(),
        });
    }
    Ok(marks
        .chunks(2)
        .map(|p| s[p[0] + fence.len()..p[1]].to_string())
        .collect())
}

fn extract_paired(s: &str, open: &str, close: &str) -> Result<Vec<String>, ControlError> {
    let mut out = Vec::new();
    let mut pos = 0;
    loop {
        let next_open = s[pos..].find(open).map(|i| i + pos);
        let next_close = s[pos..].find(close).map(|i| i + pos);
        let start = match (next_open, next_close) {
            (None, None) => return Ok(out),
            (None, Some(c)) => return Err(ControlError::Unbalanced { offset: c }),
            (Some(o), Some(c)) if c < o => return Err(ControlError::Unbalanced { offset: c }),
            (Some(o), _) => o,
        };
        let body_start = start + open.len();
        let end = s[body_start..]
            .find(close)
            .map(|i| i + body_start)
            .ok_or(ControlError::Unbalanced { offset: start })?;
        if let Some(inner) = s[body_start..end].find(open) {
            return Err(ControlError::Unbalanced {
                offset: body_start + inner,
            });
        }
        out.push(s[body_start..end].to_string());
        pos = end + close.len();
    }
}

/// Wrong character count: what was required and what arrived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountViolation {
    pub required: usize,
    pub got: usize,
}

impl fmt::Display for CountViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "expected exactly {} Chinese characters, got {}",
            self.required, self.got
        )
    }
}

impl CountViolation {
    /// Corrective note appended to a retry prompt.
    pub fn feedback(&self) -> String {
        format!(
            "Your previous answer had {} Chinese characters but exactly {} are required. \
Answer again with exactly {} characters.",
            self.got, self.required, self.required
        )
    }
}

pub fn validate_lyric(text: &str, required_count: usize) -> Result<(), CountViolation> {
    let got = count_cjk(text);
    if got == required_count {
        Ok(())
    } else {
        Err(CountViolation {
            required: required_count,
            got,
        })
    }
}

/// Joins extracted blocks and checks the total character count.
pub fn fill_blanks<S: AsRef<str>>(blocks: &[S], n: usize) -> Result<String, CountViolation> {
    let joined: String = blocks.iter().map(|b| b.as_ref().trim()).collect();
    validate_lyric(&joined, n).map(|()| joined)
}

/// Outcome of one validated attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attempt<T> {
    Valid(T),
    /// Rejected; the string is fed back to the next attempt.
    Invalid(String),
}

/// Runs `attempt` up to `1 + max_retries` times, passing the previous
/// rejection as feedback. Returns the value and the number of attempts, or
/// every rejection on exhaustion.
pub fn retry_validated<T, E, F>(
    max_retries: usize,
    mut attempt: F,
) -> Result<Result<(T, usize), Vec<String>>, E>
where
    F: FnMut(usize, Option<&str>) -> Result<Attempt<T>, E>,
{
    let mut rejections: Vec<String> = Vec::new();
    for i in 0..=max_retries {
        match attempt(i, rejections.last().map(String::as_str))? {
            Attempt::Valid(v) => return Ok(Ok((v, i + 1))),
            Attempt::Invalid(why) => rejections.push(why),
        }
    }
    Ok(Err(rejections))
}
