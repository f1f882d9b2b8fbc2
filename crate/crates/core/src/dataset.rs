//! Line-delimited JSON files with a schema header.
//!
//! The first line of every file is a comment carrying the schema name and
//! version, e.g. `# {"schema":"merge-bench.samples","schema_version":1}`.
//! Each further non-comment line is one JSON record.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordKind {
    Candidates,
    Samples,
    Results,
    Groups,
}

impl RecordKind {
    pub fn schema(self) -> &'static str {
        match self {
            RecordKind::Candidates => "merge-bench.candidates",
            RecordKind::Samples => "merge-bench.samples",
            RecordKind::Results => "merge-bench.results",
            RecordKind::Groups => "merge-bench.grpo-groups",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
    schema_version: u32,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("missing schema header, expected {expected}")]
    MissingHeader { expected: &'static str },
    #[error("schema {found} v{version} found, expected {expected} v{SCHEMA_VERSION} or older")]
    SchemaMismatch { expected: &'static str, found: String, version: u32 },
}

pub fn header_line(kind: RecordKind) -> String {
    let header = Header {
        schema: kind.schema().to_string(),
        schema_version: SCHEMA_VERSION,
    };
    format!("# {}", serde_json::to_string(&header).expect("header serializes"))
}

pub fn to_jsonl<T: Serialize>(kind: RecordKind, records: &[T]) -> String {
    let mut out = header_line(kind);
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Writes next to the destination and renames into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut file = fs::File::create(&tmp)?;
    file.write_all(contents)?;
    file.sync_all()?;
    fs::rename(&tmp, path)
}

pub fn write_records<T: Serialize>(path: &Path, kind: RecordKind, records: &[T]) -> io::Result<()> {
    write_atomic(path, to_jsonl(kind, records).as_bytes())
}

/// Records that parsed, plus the lines that did not.
#[derive(Debug)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    /// (1-based line number, parse error)
    pub corrupt: Vec<(usize, String)>,
}

pub fn parse_records<T: DeserializeOwned>(text: &str, kind: RecordKind) -> Result<Loaded<T>, DatasetError> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .and_then(|(_, l)| l.strip_prefix('#'))
        .and_then(|h| serde_json::from_str::<Header>(h.trim()).ok())
        .ok_or(DatasetError::MissingHeader { expected: kind.schema() })?;
    if header.schema != kind.schema() || header.schema_version > SCHEMA_VERSION {
        return Err(DatasetError::SchemaMismatch {
            expected: kind.schema(),
            found: header.schema,
            version: header.schema_version,
        });
    }
    let mut loaded = Loaded {
        records: Vec::new(),
        corrupt: Vec::new(),
    };
    for (i, line) in lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => loaded.records.push(r),
            Err(e) => loaded.corrupt.push((i + 1, e.to_string())),
        }
    }
    Ok(loaded)
}

pub fn read_records<T: DeserializeOwned>(path: &Path, kind: RecordKind) -> Result<Loaded<T>, DatasetError> {
    parse_records(&fs::read_to_string(path)?, kind)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> io::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{render_conflict_text, MergeSample, Provenance};
    use crate::language::Language;
    use proptest::prelude::*;

    fn any_sample() -> impl Strategy<Value = MergeSample> {
        let lines = || proptest::collection::vec("[ -~]{0,12}|\u{e9}\t\"\\\\", 0..4);
        (lines(), lines(), lines(), lines(), lines(), lines(), "[a-f0-9]{16}", proptest::sample::select(Language::SUPPORTED.to_vec()))
            .prop_map(|(pre, left, base, right, post, gt, id, language)| MergeSample {
                id,
                language,
                conflict_text: render_conflict_text(&pre, &left, &base, &right, &post),
                ground_truth: gt,
                left,
                base,
                right,
                pre_context: pre,
                post_context: post,
                provenance: Provenance {
                    repo_id: "repo".into(),
                    merge_commit: "abc".into(),
                    path: "x".into(),
                },
            })
    }

    proptest! {
        #[test]
        fn samples_round_trip(samples in proptest::collection::vec(any_sample(), 0..5)) {
            let text = to_jsonl(RecordKind::Samples, &samples);
            let back: Loaded<MergeSample> = parse_records(&text, RecordKind::Samples).unwrap();
            prop_assert!(back.corrupt.is_empty());
            prop_assert_eq!(back.records, samples);
        }
    }

    #[test]
    fn header_is_required_and_checked() {
        assert!(matches!(parse_records::<u32>("1\n", RecordKind::Samples), Err(DatasetError::MissingHeader { .. })));
        let text = to_jsonl(RecordKind::Results, &[1u32]);
        assert!(matches!(parse_records::<u32>(&text, RecordKind::Samples), Err(DatasetError::SchemaMismatch { .. })));
        let future = text.replace("\"schema_version\":1", "\"schema_version\":9");
        assert!(matches!(parse_records::<u32>(&future, RecordKind::Results), Err(DatasetError::SchemaMismatch { .. })));
    }

    #[test]
    fn corrupt_lines_are_reported_not_fatal() {
        let text = format!("{}\n1\nnot json\n\n3\n", header_line(RecordKind::Results));
        let loaded: Loaded<u32> = parse_records(&text, RecordKind::Results).unwrap();
        assert_eq!(loaded.records, vec![1, 3]);
        assert_eq!(loaded.corrupt.len(), 1);
        assert_eq!(loaded.corrupt[0].0, 3);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        write_records(&path, RecordKind::Results, &[1u32]).unwrap();
        write_records(&path, RecordKind::Results, &[2u32]).unwrap();
        let loaded: Loaded<u32> = read_records(&path, RecordKind::Results).unwrap();
        assert_eq!(loaded.records, vec![2]);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
