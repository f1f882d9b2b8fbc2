//! Scoring model answers against the developer resolution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict::parse_conflict;
use crate::extract::{extract_resolution, MergeSample};
use crate::merge::Region;
use crate::normalize::code_equivalent;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOutput {
    pub sample_id: String,
    pub model_id: String,
    pub raw_text: String,
}

/// Mutually exclusive verdicts, one per output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    TextEquivalent,
    NormalizedEquivalentOnly,
    DifferentCode,
    ConflictPreserved,
    InvalidMarkdown,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::TextEquivalent,
        Category::NormalizedEquivalentOnly,
        Category::DifferentCode,
        Category::ConflictPreserved,
        Category::InvalidMarkdown,
    ];

    pub fn resolution_reward(self) -> f64 {
        match self {
            Category::TextEquivalent => 1.0,
            Category::NormalizedEquivalentOnly => 0.5,
            Category::ConflictPreserved => 0.1,
            Category::DifferentCode | Category::InvalidMarkdown => 0.0,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown category {0:?}")]
pub struct ParseCategoryError(pub String);

impl FromStr for Category {
    type Err = ParseCategoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| ParseCategoryError(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no well-formed fenced code block")]
pub struct InvalidMarkdown;

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";

/// Byte range of the first complete `<think>...</think>` span.
fn think_span(text: &str) -> Option<(usize, usize)> {
    let open = text.find(THINK_OPEN)?;
    let close = text[open + THINK_OPEN.len()..].find(THINK_CLOSE)? + open + THINK_OPEN.len();
    Some((open, close + THINK_CLOSE.len()))
}

fn fence_len(line: &str) -> usize {
    line.trim_start().bytes().take_while(|&b| b == b'`').count()
}

/// First fenced block in `text`, ignoring anything inside a reasoning span.
fn find_block(text: &str) -> Option<(usize, String)> {
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let mut offset = 0;
    while let Some(line) = lines.next() {
        let start = offset;
        offset += line.len() + 1;
        let ticks = fence_len(line);
        if ticks < 3 || line.trim_start()[ticks..].contains('`') {
            continue;
        }
        let mut body = Vec::new();
        for inner in lines.by_ref() {
            if fence_len(inner) >= ticks {
                return Some((start, body.join("\n")));
            }
            body.push(inner);
        }
        return None;
    }
    None
}

fn answer_part(text: &str) -> &str {
    match think_span(text) {
        Some((_, end)) => &text[end..],
        None => text,
    }
}

/// Content of the first well-formed fenced code block. When the output has a
/// reasoning span, only the text after it is searched.
pub fn extract_code_block(raw_text: &str) -> Result<String, InvalidMarkdown> {
    find_block(answer_part(raw_text)).map(|(_, body)| body).ok_or(InvalidMarkdown)
}

/// A complete reasoning span that opens before the answer's code block.
pub fn has_reasoning(raw_text: &str) -> bool {
    let Some((open, _)) = think_span(raw_text) else {
        return false;
    };
    match find_block(raw_text) {
        Some((fence_at, _)) => open < fence_at,
        None => true,
    }
}

fn split_lines(code: &str) -> Vec<String> {
    code.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l).to_string()).collect()
}

/// Compares extracted code (context included) with the sample.
pub fn classify_code(code: &str, sample: &MergeSample) -> Category {
    let lines = if code.is_empty() { Vec::new() } else { split_lines(code) };
    let Ok(core) = extract_resolution(&lines, &sample.pre_context, &sample.post_context) else {
        return Category::DifferentCode;
    };
    if let Ok(parsed) = parse_conflict(&core.join("\n")) {
        if let [Region::Conflicted(c)] = parsed.regions.as_slice() {
            if c.left == sample.left && c.base == sample.base && c.right == sample.right {
                return Category::ConflictPreserved;
            }
        }
    }
    if core == sample.ground_truth {
        return Category::TextEquivalent;
    }
    match code_equivalent(&core.join("\n"), &sample.ground_truth_text(), sample.language) {
        Ok(true) => Category::NormalizedEquivalentOnly,
        _ => Category::DifferentCode,
    }
}

pub fn classify(raw_text: &str, sample: &MergeSample) -> Category {
    match extract_code_block(raw_text) {
        Ok(code) => classify_code(&code, sample),
        Err(InvalidMarkdown) => Category::InvalidMarkdown,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub reasoning: f64,
    pub format: f64,
    pub resolution: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn new(reasoning: bool, format: bool, category: Category) -> Self {
        let reasoning = if reasoning { 1.0 } else { 0.0 };
        let format = if format { 1.0 } else { 0.0 };
        let resolution = category.resolution_reward();
        RewardBreakdown {
            reasoning,
            format,
            resolution,
            total: reasoning + format + resolution,
        }
    }
}

/// Category and reward of one output.
pub fn score(raw_text: &str, sample: &MergeSample) -> (Category, RewardBreakdown) {
    let category = classify(raw_text, sample);
    let format = category != Category::InvalidMarkdown;
    (category, RewardBreakdown::new(has_reasoning(raw_text), format, category))
}

pub fn compute_reward(raw_text: &str, sample: &MergeSample) -> RewardBreakdown {
    score(raw_text, sample).1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot aggregate an empty list of classifications")]
pub struct EmptyInput;

/// Category counts for one model, with the percentages of the results table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model_id: String,
    pub total: usize,
    pub text_equivalent: usize,
    pub normalized_only: usize,
    pub different_code: usize,
    pub conflict_preserved: usize,
    pub invalid_markdown: usize,
}

impl ReportRow {
    fn pct(&self, n: usize) -> f64 {
        100.0 * n as f64 / self.total as f64
    }

    pub fn equivalent_text_pct(&self) -> f64 {
        self.pct(self.text_equivalent)
    }

    /// Includes the text-equivalent outputs.
    pub fn normalized_equivalent_pct(&self) -> f64 {
        self.pct(self.text_equivalent + self.normalized_only)
    }

    pub fn different_code_pct(&self) -> f64 {
        self.pct(self.different_code)
    }

    pub fn conflict_pct(&self) -> f64 {
        self.pct(self.conflict_preserved)
    }

    pub fn invalid_markdown_pct(&self) -> f64 {
        self.pct(self.invalid_markdown)
    }

    /// The five table columns in order.
    pub fn percentages(&self) -> [f64; 5] {
        [
            self.equivalent_text_pct(),
            self.normalized_equivalent_pct(),
            self.different_code_pct(),
            self.conflict_pct(),
            self.invalid_markdown_pct(),
        ]
    }
}

pub fn aggregate(categories: &[Category], model_id: &str) -> Result<ReportRow, EmptyInput> {
    if categories.is_empty() {
        return Err(EmptyInput);
    }
    let count = |c: Category| categories.iter().filter(|&&x| x == c).count();
    Ok(ReportRow {
        model_id: model_id.to_string(),
        total: categories.len(),
        text_equivalent: count(Category::TextEquivalent),
        normalized_only: count(Category::NormalizedEquivalentOnly),
        different_code: count(Category::DifferentCode),
        conflict_preserved: count(Category::ConflictPreserved),
        invalid_markdown: count(Category::InvalidMarkdown),
    })
}
