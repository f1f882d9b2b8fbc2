use crate::language::Language;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Escape {
    Backslash,
    /// The closing quote written twice stands for itself (`@"a""b"`).
    DoubledQuote,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StringDelimiter {
    pub open: &'static str,
    pub close: &'static str,
    pub escape: Escape,
    pub multiline: bool,
}

const fn quoted(q: &'static str, escape: Escape, multiline: bool) -> StringDelimiter {
    StringDelimiter {
        open: q,
        close: q,
        escape,
        multiline,
    }
}

const DOUBLE: StringDelimiter = quoted("\"", Escape::Backslash, false);
const SINGLE: StringDelimiter = quoted("'", Escape::Backslash, false);
const BACKTICK_RAW: StringDelimiter = quoted("`", Escape::None, true);
const BACKTICK_ESCAPED: StringDelimiter = quoted("`", Escape::Backslash, true);
const TRIPLE_DOUBLE: StringDelimiter = quoted("\"\"\"", Escape::Backslash, true);
const TRIPLE_SINGLE: StringDelimiter = quoted("'''", Escape::Backslash, true);
const TRIPLE_DOUBLE_RAW: StringDelimiter = quoted("\"\"\"", Escape::None, true);

const C_LINE: &[&str] = &["//"];
const C_BLOCK: &[(&str, &str)] = &[("/*", "*/")];

/// Lexical rules needed to find comments without a full parser.
///
/// Forms that do not fit a fixed open/close pair (Rust and C++ raw strings,
/// C# verbatim strings, Python string prefixes, PHP heredocs, Rust
/// lifetimes) are recognised by the scanner itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageProfile {
    pub language: Language,
    pub line_comment_openers: &'static [&'static str],
    pub block_comment_delimiters: &'static [(&'static str, &'static str)],
    pub nested_block_comments: bool,
    /// Block comments whose delimiters must start a line (Ruby `=begin`).
    pub line_anchored_blocks: &'static [(&'static str, &'static str)],
    /// Removed only when the string is a whole statement on its own.
    pub docstring_delimiters: &'static [(&'static str, &'static str)],
    /// Longest opener first.
    pub string_delimiters: &'static [StringDelimiter],
    pub whitespace_sensitive: bool,
}

const fn c_family(language: Language, strings: &'static [StringDelimiter]) -> LanguageProfile {
    LanguageProfile {
        language,
        line_comment_openers: C_LINE,
        block_comment_delimiters: C_BLOCK,
        nested_block_comments: false,
        line_anchored_blocks: &[],
        docstring_delimiters: &[],
        string_delimiters: strings,
        whitespace_sensitive: false,
    }
}

static C: LanguageProfile = c_family(Language::C, &[DOUBLE, SINGLE]);
static CPP: LanguageProfile = c_family(Language::Cpp, &[DOUBLE, SINGLE]);
static CSHARP: LanguageProfile = c_family(Language::CSharp, &[TRIPLE_DOUBLE_RAW, DOUBLE, SINGLE]);
static GO: LanguageProfile = c_family(Language::Go, &[DOUBLE, SINGLE, BACKTICK_RAW]);
static JAVA: LanguageProfile = c_family(Language::Java, &[TRIPLE_DOUBLE, DOUBLE, SINGLE]);
static JAVASCRIPT: LanguageProfile = c_family(Language::JavaScript, &[DOUBLE, SINGLE, BACKTICK_ESCAPED]);
static TYPESCRIPT: LanguageProfile = c_family(Language::TypeScript, &[DOUBLE, SINGLE, BACKTICK_ESCAPED]);
static RUST: LanguageProfile = LanguageProfile {
    nested_block_comments: true,
    // single quotes are handled by the scanner (char literal or lifetime)
    ..c_family(Language::Rust, &[DOUBLE])
};
static PHP: LanguageProfile = LanguageProfile {
    line_comment_openers: &["//", "#"],
    ..c_family(Language::Php, &[DOUBLE, SINGLE])
};
static PYTHON: LanguageProfile = LanguageProfile {
    language: Language::Python,
    line_comment_openers: &["#"],
    block_comment_delimiters: &[],
    nested_block_comments: false,
    line_anchored_blocks: &[],
    docstring_delimiters: &[("\"\"\"", "\"\"\""), ("'''", "'''")],
    string_delimiters: &[TRIPLE_DOUBLE, TRIPLE_SINGLE, DOUBLE, SINGLE],
    whitespace_sensitive: true,
};
static RUBY: LanguageProfile = LanguageProfile {
    language: Language::Ruby,
    line_comment_openers: &["#"],
    block_comment_delimiters: &[],
    nested_block_comments: false,
    line_anchored_blocks: &[("=begin", "=end")],
    docstring_delimiters: &[],
    string_delimiters: &[DOUBLE, SINGLE, BACKTICK_ESCAPED],
    whitespace_sensitive: true,
};

impl LanguageProfile {
    pub fn for_language(language: Language) -> Option<&'static LanguageProfile> {
        Some(match language {
            Language::C => &C,
            Language::Cpp => &CPP,
            Language::CSharp => &CSHARP,
            Language::Go => &GO,
            Language::Java => &JAVA,
            Language::JavaScript => &JAVASCRIPT,
            Language::Php => &PHP,
            Language::Python => &PYTHON,
            Language::Ruby => &RUBY,
            Language::Rust => &RUST,
            Language::TypeScript => &TYPESCRIPT,
            Language::Unknown => return None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_python_and_ruby_are_whitespace_sensitive() {
        for lang in Language::SUPPORTED {
            let profile = LanguageProfile::for_language(lang).unwrap();
            assert_eq!(profile.language, lang);
            assert_eq!(
                profile.whitespace_sensitive,
                matches!(lang, Language::Python | Language::Ruby),
                "{lang}"
            );
        }
        assert!(LanguageProfile::for_language(Language::Unknown).is_none());
    }
}
