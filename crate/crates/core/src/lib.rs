//! Mining, merging and scoring of merge-conflict resolutions.
//!
//! The crate covers the whole benchmark pipeline: replaying merges from git
//! history ([`miner`]), turning conflicts into samples with developer
//! resolutions ([`extract`]), comparing candidate resolutions after
//! comment and whitespace normalization ([`normalize`], [`classify`]),
//! driving chat-completion endpoints ([`llm`]) and the group-relative policy
//! optimization arithmetic used to train on the resulting reward ([`grpo`]).

pub mod classify;
pub mod conflict;
pub mod dataset;
pub mod diff;
pub mod extract;
pub mod grpo;
pub mod language;
pub mod lines;
pub mod llm;
pub mod merge;
pub mod miner;
pub mod normalize;
pub mod report;

pub use conflict::{parse_conflict, render_conflict, ConflictError};
pub use diff::{diff_lines, EditOp, EditScript};
pub use language::Language;
pub use lines::{Eol, LineSeq};
pub use merge::{merge3, Conflict, ConflictHunk, MergeOutcome, Region};
