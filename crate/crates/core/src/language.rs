use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Source languages covered by the benchmark, plus `Unknown` for everything
/// else.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    C,
    Cpp,
    CSharp,
    Go,
    Java,
    JavaScript,
    Php,
    Python,
    Ruby,
    Rust,
    TypeScript,
    Unknown,
}

impl Language {
    pub const SUPPORTED: [Language; 11] = [
        Language::C,
        Language::Cpp,
        Language::CSharp,
        Language::Go,
        Language::Java,
        Language::JavaScript,
        Language::Php,
        Language::Python,
        Language::Ruby,
        Language::Rust,
        Language::TypeScript,
    ];

    pub fn from_extension(ext: &str) -> Language {
        match ext.to_ascii_lowercase().as_str() {
            "java" => Language::Java,
            "py" => Language::Python,
            "rs" => Language::Rust,
            "go" => Language::Go,
            "ts" => Language::TypeScript,
            "js" => Language::JavaScript,
            "c" | "h" => Language::C,
            "cc" | "cpp" | "hpp" => Language::Cpp,
            "cs" => Language::CSharp,
            "php" => Language::Php,
            "rb" => Language::Ruby,
            _ => Language::Unknown,
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Language {
        path.as_ref()
            .extension()
            .and_then(|e| e.to_str())
            .map_or(Language::Unknown, Language::from_extension)
    }

    pub fn is_known(self) -> bool {
        self != Language::Unknown
    }

    /// Identifier used in file formats, CLI flags and Markdown fence tags.
    pub fn id(self) -> &'static str {
        match self {
            Language::C => "c",
            Language::Cpp => "cpp",
            Language::CSharp => "csharp",
            Language::Go => "go",
            Language::Java => "java",
            Language::JavaScript => "javascript",
            Language::Php => "php",
            Language::Python => "python",
            Language::Ruby => "ruby",
            Language::Rust => "rust",
            Language::TypeScript => "typescript",
            Language::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language id {0:?}")]
pub struct ParseLanguageError(pub String);

impl FromStr for Language {
    type Err = ParseLanguageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lang = match s.to_ascii_lowercase().as_str() {
            "c" => Language::C,
            "cpp" | "c++" | "cc" => Language::Cpp,
            "csharp" | "c#" | "cs" => Language::CSharp,
            "go" => Language::Go,
            "java" => Language::Java,
            "javascript" | "js" => Language::JavaScript,
            "php" => Language::Php,
            "python" | "py" => Language::Python,
            "ruby" | "rb" => Language::Ruby,
            "rust" | "rs" => Language::Rust,
            "typescript" | "ts" => Language::TypeScript,
            "unknown" => Language::Unknown,
            other => return Err(ParseLanguageError(other.to_owned())),
        };
        Ok(lang)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_table() {
        assert_eq!(Language::from_path("src/Main.java"), Language::Java);
        assert_eq!(Language::from_path("README.md"), Language::Unknown);
        assert_eq!(Language::from_path("x.h"), Language::C);
        assert_eq!(Language::from_path("x.hpp"), Language::Cpp);
        assert_eq!(Language::from_path("Makefile"), Language::Unknown);
    }

    #[test]
    fn ids_round_trip() {
        for lang in Language::SUPPORTED {
            assert_eq!(lang.id().parse::<Language>().unwrap(), lang);
        }
    }
}
