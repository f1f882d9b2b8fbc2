//! Lexer-level comment removal.
//!
//! The scanner walks the source once, copying code and string literals and
//! dropping comments. It only knows enough of each language to tell string
//! literals from comments; anything it does not recognise is copied as code.

use std::collections::BTreeSet;

use super::profile::{Escape, LanguageProfile, StringDelimiter};
use crate::language::Language;

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b >= 0x80
}

struct Scanner<'a> {
    src: &'a [u8],
    profile: &'a LanguageProfile,
    out: Vec<u8>,
    /// Output line numbers on which something was removed.
    touched: BTreeSet<usize>,
    out_line: usize,
    // Python statement tracking
    depth: usize,
    continued: bool,
}

/// Removes comments (and, for Python, statement docstrings). Lines left
/// holding only whitespace after a removal are dropped.
pub(crate) fn strip(code: &str, profile: &LanguageProfile) -> String {
    let mut s = Scanner {
        src: code.as_bytes(),
        profile,
        out: Vec::with_capacity(code.len()),
        touched: BTreeSet::new(),
        out_line: 0,
        depth: 0,
        continued: false,
    };
    s.run();

    let text = String::from_utf8(s.out).expect("scanner only cuts at ASCII boundaries");
    if s.touched.is_empty() {
        return text;
    }
    let mut kept: Vec<&str> = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        if s.touched.contains(&i) && line.trim().is_empty() {
            continue;
        }
        kept.push(line);
    }
    kept.join("\n")
}

impl Scanner<'_> {
    fn at(&self, i: usize, pat: &str) -> bool {
        self.src[i..].starts_with(pat.as_bytes())
    }

    fn byte(&self, i: usize) -> Option<u8> {
        self.src.get(i).copied()
    }

    fn line_end(&self, i: usize) -> usize {
        self.src[i..].iter().position(|&b| b == b'\n').map_or(self.src.len(), |p| i + p)
    }

    fn line_start(&self, i: usize) -> usize {
        self.src[..i].iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1)
    }

    fn copy(&mut self, from: usize, to: usize) {
        let chunk = &self.src[from..to];
        self.out_line += chunk.iter().filter(|&&b| b == b'\n').count();
        self.out.extend_from_slice(chunk);
    }

    fn removed(&mut self) {
        self.touched.insert(self.out_line);
    }

    fn run(&mut self) {
        let n = self.src.len();
        let mut i = 0;
        while i < n {
            if let Some(end) = self.comment_at(i) {
                self.removed();
                i = end;
                continue;
            }
            if let Some((end, docstring)) = self.string_at(i) {
                if docstring {
                    self.removed();
                } else {
                    self.copy(i, end);
                }
                self.continued = false;
                i = end;
                continue;
            }
            let b = self.src[i];
            match b {
                b'(' | b'[' | b'{' => self.depth += 1,
                b')' | b']' | b'}' => self.depth = self.depth.saturating_sub(1),
                _ => {}
            }
            if b == b'\n' {
                self.continued = i > 0 && self.src[i - 1] == b'\\';
            } else if !b.is_ascii_whitespace() {
                self.continued = false;
            }
            self.copy(i, i + 1);
            i += 1;
        }
    }

    /// End offset of a comment starting at `i`.
    fn comment_at(&self, i: usize) -> Option<usize> {
        let p = self.profile;
        for &(open, close) in p.line_anchored_blocks {
            if self.line_start(i) == i && self.at(i, open) && self.byte(i + open.len()).is_none_or(|b| b.is_ascii_whitespace()) {
                let mut j = self.line_end(i);
                while j < self.src.len() {
                    let next = j + 1;
                    if self.at(next, close) {
                        return Some(self.line_end(next));
                    }
                    j = self.line_end(next);
                }
                log::warn!("unterminated {open} block; removing to end of input");
                return Some(self.src.len());
            }
        }
        for &(open, close) in p.block_comment_delimiters {
            if self.at(i, open) {
                return Some(self.block_end(i + open.len(), open, close));
            }
        }
        for &opener in p.line_comment_openers {
            if self.at(i, opener) {
                if p.language == Language::Php && opener == "#" && self.byte(i + 1) == Some(b'[') {
                    // PHP 8 attribute
                    continue;
                }
                return Some(self.line_end(i));
            }
        }
        None
    }

    fn block_end(&self, mut i: usize, open: &str, close: &str) -> usize {
        let mut depth = 1;
        while i < self.src.len() {
            if self.at(i, close) {
                depth -= 1;
                i += close.len();
                if depth == 0 || !self.profile.nested_block_comments {
                    return i;
                }
            } else if self.profile.nested_block_comments && self.at(i, open) {
                depth += 1;
                i += open.len();
            } else {
                i += 1;
            }
        }
        log::warn!("unterminated block comment; removing to end of input");
        self.src.len()
    }

    /// End offset of a string literal starting at `i`, and whether it is a
    /// removable docstring.
    fn string_at(&self, i: usize) -> Option<(usize, bool)> {
        let prev = if i > 0 { Some(self.src[i - 1]) } else { None };
        let after_ident = prev.is_some_and(is_ident_byte);
        match self.profile.language {
            Language::Rust => {
                if let Some(end) = self.rust_special(i, after_ident) {
                    return Some((end, false));
                }
            }
            Language::Cpp => {
                if let Some(end) = self.cpp_raw(i) {
                    return Some((end, false));
                }
                if self.src[i] == b'\'' && prev.is_some_and(|b| b.is_ascii_hexdigit()) {
                    // digit separator
                    return None;
                }
            }
            Language::CSharp => {
                if let Some(end) = self.csharp_verbatim(i) {
                    return Some((end, false));
                }
            }
            Language::Php => {
                if let Some(end) = self.php_heredoc(i) {
                    return Some((end, false));
                }
            }
            Language::Python => return self.python_string(i, after_ident),
            _ => {}
        }
        for d in self.profile.string_delimiters {
            if self.at(i, d.open) {
                return Some((self.delimited_end(i + d.open.len(), d), false));
            }
        }
        None
    }

    fn delimited_end(&self, i: usize, d: &StringDelimiter) -> usize {
        self.quoted_end(i, d.close.as_bytes(), d.escape, d.multiline)
    }

    fn quoted_end(&self, mut i: usize, close: &[u8], escape: Escape, multiline: bool) -> usize {
        while i < self.src.len() {
            let b = self.src[i];
            if escape == Escape::Backslash && b == b'\\' {
                i += 2;
                continue;
            }
            if self.src[i..].starts_with(close) {
                if escape == Escape::DoubledQuote && self.src[i + close.len()..].starts_with(close) {
                    i += 2 * close.len();
                    continue;
                }
                return i + close.len();
            }
            if b == b'\n' && !multiline {
                // unterminated on this line: keep the rest as string text
                return i;
            }
            i += 1;
        }
        self.src.len()
    }

    fn rust_special(&self, i: usize, after_ident: bool) -> Option<usize> {
        let src = self.src;
        // raw strings: r"..", r#".."#, br#".."#
        let mut j = i;
        if !after_ident && src[j] == b'b' && src.get(j + 1) == Some(&b'r') {
            j += 1;
        }
        if src[j] == b'r' && (j == i && !after_ident || j == i + 1) {
            let mut k = j + 1;
            while src.get(k) == Some(&b'#') {
                k += 1;
            }
            if src.get(k) == Some(&b'"') {
                let hashes = k - j - 1;
                let mut close = String::from("\"");
                close.extend(std::iter::repeat_n('#', hashes));
                return Some(self.quoted_end(k + 1, close.as_bytes(), Escape::None, true));
            }
        }
        if src[i] == b'\'' {
            // char literal or lifetime/label
            if src.get(i + 1) == Some(&b'\\') {
                let end = src[i + 2..].iter().take(12).position(|&b| b == b'\'')?;
                return Some(i + 2 + end + 1);
            }
            let ch_len = std::str::from_utf8(&src[i + 1..])
                .ok()
                .or_else(|| std::str::from_utf8(&src[i + 1..(i + 5).min(src.len())]).ok())
                .and_then(|s| s.chars().next())
                .map(char::len_utf8)?;
            if src.get(i + 1 + ch_len) == Some(&b'\'') && src[i + 1] != b'\n' {
                return Some(i + 2 + ch_len);
            }
            return None;
        }
        None
    }

    fn cpp_raw(&self, i: usize) -> Option<usize> {
        let src = self.src;
        if src[i] != b'R' || src.get(i + 1) != Some(&b'"') {
            return None;
        }
        let start = src[..i].iter().rposition(|&b| !is_ident_byte(b)).map_or(0, |p| p + 1);
        let prefix = &src[start..i];
        if !matches!(prefix, b"" | b"u8" | b"L" | b"u" | b"U") {
            return None;
        }
        let open_paren = src[i + 2..].iter().take(17).position(|&b| b == b'(')? + i + 2;
        let delim = std::str::from_utf8(&src[i + 2..open_paren]).ok()?;
        let close = format!("){delim}\"");
        let body = open_paren + 1;
        let end = src[body..]
            .windows(close.len())
            .position(|w| w == close.as_bytes())
            .map_or(src.len(), |p| body + p + close.len());
        Some(end)
    }

    fn csharp_verbatim(&self, i: usize) -> Option<usize> {
        let quote = if self.at(i, "@\"") {
            i + 1
        } else if self.at(i, "$@\"") || self.at(i, "@$\"") {
            i + 2
        } else if self.at(i, "$\"") {
            return Some(self.quoted_end(i + 2, b"\"", Escape::Backslash, false));
        } else {
            return None;
        };
        Some(self.quoted_end(quote + 1, b"\"", Escape::DoubledQuote, true))
    }

    fn php_heredoc(&self, i: usize) -> Option<usize> {
        if !self.at(i, "<<<") {
            return None;
        }
        let eol = self.line_end(i);
        let label: String = std::str::from_utf8(&self.src[i + 3..eol])
            .ok()?
            .trim()
            .trim_matches(|c| c == '"' || c == '\'')
            .to_owned();
        if label.is_empty() || !label.bytes().all(is_ident_byte) {
            return None;
        }
        let mut j = eol;
        while j < self.src.len() {
            let start = j + 1;
            let end = self.line_end(start.min(self.src.len()));
            let line = std::str::from_utf8(&self.src[start.min(end)..end]).unwrap_or("");
            if line.trim_start().starts_with(label.as_str()) {
                let offset = line.len() - line.trim_start().len();
                return Some(start + offset + label.len());
            }
            j = end;
        }
        Some(self.src.len())
    }

    fn python_string(&self, i: usize, after_ident: bool) -> Option<(usize, bool)> {
        let src = self.src;
        // optional prefix of up to two letters
        let mut q = i;
        if !after_ident {
            while q < src.len() && q - i < 2 && matches!(src[q].to_ascii_lowercase(), b'r' | b'b' | b'u' | b'f') {
                q += 1;
            }
        }
        if q != i && !matches!(src.get(q), Some(b'"') | Some(b'\'')) {
            return None;
        }
        let d = self.profile.string_delimiters.iter().find(|d| self.at(q, d.open))?;
        let end = self.delimited_end(q + d.open.len(), d);
        let triple = d.open.len() == 3;
        let docstring = triple && self.is_statement_docstring(i, end);
        Some((end, docstring))
    }

    /// A triple-quoted string is a docstring when it forms a whole logical
    /// line: only indentation before it and only whitespace or a comment after.
    fn is_statement_docstring(&self, start: usize, end: usize) -> bool {
        if self.depth > 0 || self.continued {
            return false;
        }
        let ls = self.line_start(start);
        if !self.src[ls..start].iter().all(|b| *b == b' ' || *b == b'\t') {
            return false;
        }
        let rest_end = self.line_end(end.min(self.src.len()));
        let rest = std::str::from_utf8(&self.src[end..rest_end]).unwrap_or("x").trim();
        rest.is_empty() || rest.starts_with('#')
    }
}
