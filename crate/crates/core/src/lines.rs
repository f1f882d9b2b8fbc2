//! Line-oriented documents that remember their terminator convention.

use serde::{Deserialize, Serialize};

/// Line terminator convention of a document.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Eol {
    #[default]
    Lf,
    CrLf,
}

impl Eol {
    pub fn as_str(self) -> &'static str {
        match self {
            Eol::Lf => "\n",
            Eol::CrLf => "\r\n",
        }
    }
}

/// A text split into lines without their terminators.
///
/// `parse` followed by `render` reproduces the input byte for byte. A
/// document is `CrLf` only when every terminated line ends in `\r\n`; mixed
/// documents are `Lf` and keep any stray `\r` as line content.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineSeq {
    pub lines: Vec<String>,
    pub eol: Eol,
    pub final_newline: bool,
}

impl LineSeq {
    pub fn new(lines: Vec<String>) -> Self {
        let final_newline = !lines.is_empty();
        LineSeq {
            lines,
            eol: Eol::Lf,
            final_newline,
        }
    }

    pub fn from_lines<S: AsRef<str>>(lines: &[S]) -> Self {
        Self::new(lines.iter().map(|l| l.as_ref().to_owned()).collect())
    }

    pub fn parse(text: &str) -> Self {
        if text.is_empty() {
            return LineSeq::default();
        }
        let mut lines: Vec<String> = text.split('\n').map(str::to_owned).collect();
        let final_newline = text.ends_with('\n');
        if final_newline {
            lines.pop();
        }
        let terminated = if final_newline {
            lines.len()
        } else {
            lines.len() - 1
        };
        let crlf = terminated > 0 && lines[..terminated].iter().all(|l| l.ends_with('\r'));
        if crlf {
            for line in &mut lines[..terminated] {
                line.pop();
            }
        }
        LineSeq {
            lines,
            eol: if crlf { Eol::CrLf } else { Eol::Lf },
            final_newline,
        }
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join(self.eol.as_str());
        if self.final_newline && !self.lines.is_empty() {
            out.push_str(self.eol.as_str());
        }
        out
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// True when the last line has no terminator.
    pub(crate) fn unterminated_tail(&self) -> bool {
        !self.lines.is_empty() && !self.final_newline
    }
}

/// Joins lines with `\n`, without a trailing terminator.
pub fn join_lines<S: AsRef<str>>(lines: &[S]) -> String {
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(line.as_ref());
    }
    out
}
