//! Comment- and whitespace-insensitive code comparison.

mod profile;
mod scanner;

pub use profile::{Escape, LanguageProfile, StringDelimiter};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::language::Language;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("no lexical profile for language {0}")]
    UnsupportedLanguage(Language),
}

/// Code reduced to the lines that matter for equivalence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedCode {
    pub language: Language,
    pub lines: Vec<String>,
}

impl NormalizedCode {
    pub fn text(&self) -> String {
        self.lines.join("\n")
    }
}

fn profile(language: Language) -> Result<&'static LanguageProfile, NormalizeError> {
    LanguageProfile::for_language(language).ok_or(NormalizeError::UnsupportedLanguage(language))
}

/// Removes comments, and standalone docstrings in Python. String literals
/// are left untouched. A line that held only a comment disappears.
pub fn strip_comments(code: &str, language: Language) -> Result<String, NormalizeError> {
    Ok(scanner::strip(code, profile(language)?))
}

/// Per line: drops trailing whitespace and carriage returns, collapses
/// interior runs of whitespace to one space, and removes leading whitespace
/// unless indentation is significant. Blank lines are dropped.
pub fn normalize_whitespace(code: &str, language: Language) -> Result<Vec<String>, NormalizeError> {
    let sensitive = profile(language)?.whitespace_sensitive;
    Ok(code.split('\n').filter_map(|line| normalize_line(line, sensitive)).collect())
}

fn normalize_line(line: &str, keep_indent: bool) -> Option<String> {
    let body = line.trim();
    if body.is_empty() {
        return None;
    }
    let mut out = String::with_capacity(line.len());
    if keep_indent {
        out.push_str(&line[..line.len() - line.trim_start().len()]);
    }
    let mut in_gap = false;
    for ch in body.chars() {
        if ch.is_whitespace() {
            in_gap = true;
            continue;
        }
        if in_gap {
            out.push(' ');
            in_gap = false;
        }
        out.push(ch);
    }
    Some(out)
}

pub fn normalize(code: &str, language: Language) -> Result<NormalizedCode, NormalizeError> {
    let stripped = strip_comments(code, language)?;
    Ok(NormalizedCode {
        language,
        lines: normalize_whitespace(&stripped, language)?,
    })
}

/// True when the two snippets differ only in comments and formatting.
pub fn code_equivalent(a: &str, b: &str, language: Language) -> Result<bool, NormalizeError> {
    Ok(normalize(a, language)?.lines == normalize(b, language)?.lines)
}
