//! Ground-truth extraction and dataset filters.
//!
//! A candidate hunk becomes a [`MergeSample`] once its pre and post context
//! can be located unambiguously in the developer's resolved file; the lines
//! between them are the ground truth. The sample is then checked against the
//! size limits of a [`ContextPolicy`].

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conflict::MARKER_LEN;
use crate::language::Language;
use crate::merge::{MergeOutcome, Region};
use crate::miner::CandidateHunk;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextPolicy {
    pub max_context_lines: usize,
    pub max_side_lines: usize,
    pub max_conflict_tokens: usize,
}

impl Default for ContextPolicy {
    fn default() -> Self {
        ContextPolicy {
            max_context_lines: 20,
            max_side_lines: 20,
            max_conflict_tokens: 512,
        }
    }
}

pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

/// Roughly four bytes per token. Counts drift from any particular BPE
/// vocabulary, most on non-ASCII text.
#[derive(Clone, Copy, Debug, Default)]
pub struct ApproxTokenCounter;

impl TokenCounter for ApproxTokenCounter {
    fn count(&self, text: &str) -> usize {
        text.len().div_ceil(4)
    }
}

/// Filter outcomes, in the order the checks are applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RejectKind {
    SpanningContext,
    MissingContext,
    RepeatedContext,
    ResolutionTooLarge,
    SideTooLarge,
    TooManyTokens,
    UnknownLanguage,
}

impl RejectKind {
    pub const ALL: [RejectKind; 7] = [
        RejectKind::SpanningContext,
        RejectKind::MissingContext,
        RejectKind::RepeatedContext,
        RejectKind::ResolutionTooLarge,
        RejectKind::SideTooLarge,
        RejectKind::TooManyTokens,
        RejectKind::UnknownLanguage,
    ];
}

impl fmt::Display for RejectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectReason {
    pub kind: RejectKind,
    pub detail: String,
}

impl RejectReason {
    fn new(kind: RejectKind, detail: impl Into<String>) -> Self {
        RejectReason { kind, detail: detail.into() }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub repo_id: String,
    pub merge_commit: String,
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeSample {
    pub id: String,
    pub language: Language,
    /// Pre-context, unlabeled diff3 markers and post-context, joined with
    /// `\n` and without a trailing newline.
    pub conflict_text: String,
    pub ground_truth: Vec<String>,
    pub left: Vec<String>,
    pub base: Vec<String>,
    pub right: Vec<String>,
    pub pre_context: Vec<String>,
    pub post_context: Vec<String>,
    pub provenance: Provenance,
}

impl MergeSample {
    pub fn ground_truth_text(&self) -> String {
        self.ground_truth.join("\n")
    }

    /// Checks that the rendered conflict agrees with the structural fields.
    pub fn check_consistency(&self) -> Result<(), String> {
        let expected = render_conflict_text(&self.pre_context, &self.left, &self.base, &self.right, &self.post_context);
        if self.conflict_text != expected {
            return Err(format!("sample {}: conflict_text disagrees with its sides and context", self.id));
        }
        Ok(())
    }
}

pub fn sample_id(repo_id: &str, merge_commit: &str, path: &str, hunk_index: usize) -> String {
    let mut h = Sha256::new();
    for part in [repo_id, merge_commit, path, &hunk_index.to_string()] {
        h.update(part.as_bytes());
        h.update([0]);
    }
    hex::encode(&h.finalize()[..8])
}

pub fn render_conflict_text(pre: &[String], left: &[String], base: &[String], right: &[String], post: &[String]) -> String {
    let marker = |c: char| c.to_string().repeat(MARKER_LEN);
    let mut lines: Vec<&str> = Vec::with_capacity(pre.len() + left.len() + base.len() + right.len() + post.len() + 4);
    let (start, mid, sep, end) = (marker('<'), marker('|'), marker('='), marker('>'));
    lines.extend(pre.iter().map(String::as_str));
    lines.push(&start);
    lines.extend(left.iter().map(String::as_str));
    lines.push(&mid);
    lines.extend(base.iter().map(String::as_str));
    lines.push(&sep);
    lines.extend(right.iter().map(String::as_str));
    lines.push(&end);
    lines.extend(post.iter().map(String::as_str));
    lines.join("\n")
}

/// Stable lines immediately around the `hunk_index`th conflict, at most
/// `max_context_lines` on each side. Context never reaches into a
/// neighbouring conflict. `None` if there is no such conflict.
pub fn attach_context(outcome: &MergeOutcome, hunk_index: usize, policy: &ContextPolicy) -> Option<(Vec<String>, Vec<String>)> {
    let at = outcome.conflict_region_index(hunk_index)?;
    let limit = policy.max_context_lines;
    let pre = match at.checked_sub(1).map(|i| &outcome.regions[i]) {
        Some(Region::Stable(lines)) => lines[lines.len().saturating_sub(limit)..].to_vec(),
        _ => Vec::new(),
    };
    let post = match outcome.regions.get(at + 1) {
        Some(Region::Stable(lines)) => lines[..lines.len().min(limit)].to_vec(),
        _ => Vec::new(),
    };
    Some((pre, post))
}

fn occurrences(haystack: &[String], needle: &[String]) -> Vec<usize> {
    if needle.len() > haystack.len() {
        return Vec::new();
    }
    (0..=haystack.len() - needle.len())
        .filter(|&i| haystack[i..i + needle.len()] == *needle)
        .collect()
}

enum Anchor {
    At(usize),
    Missing,
    Repeated(usize),
}

fn locate(haystack: &[String], needle: &[String]) -> Anchor {
    let found = occurrences(haystack, needle);
    match found.len() {
        0 => Anchor::Missing,
        1 => Anchor::At(found[0]),
        n => Anchor::Repeated(n),
    }
}

/// Lines of `resolved` strictly between the unique occurrences of `pre` and
/// `post`. An empty `pre` anchors at the start of the file and an empty
/// `post` at the end. Overlapping contexts give an empty resolution.
pub fn extract_resolution(resolved: &[String], pre: &[String], post: &[String]) -> Result<Vec<String>, RejectReason> {
    let pre_at = if pre.is_empty() { Anchor::At(0) } else { locate(resolved, pre) };
    let post_at = if post.is_empty() {
        Anchor::At(resolved.len())
    } else {
        locate(resolved, post)
    };
    let (pre_start, post_start) = match (pre_at, post_at) {
        (Anchor::At(a), Anchor::At(b)) => (a, b),
        (Anchor::Missing, _) => return Err(RejectReason::new(RejectKind::MissingContext, "pre-context not found in resolved file")),
        (_, Anchor::Missing) => return Err(RejectReason::new(RejectKind::MissingContext, "post-context not found in resolved file")),
        (Anchor::Repeated(n), _) => {
            return Err(RejectReason::new(RejectKind::RepeatedContext, format!("pre-context occurs {n} times")))
        }
        (_, Anchor::Repeated(n)) => {
            return Err(RejectReason::new(RejectKind::RepeatedContext, format!("post-context occurs {n} times")))
        }
    };
    if post_start < pre_start {
        return Err(RejectReason::new(
            RejectKind::SpanningContext,
            format!("post-context (line {}) precedes pre-context (line {})", post_start + 1, pre_start + 1),
        ));
    }
    let from = pre_start + pre.len();
    Ok(if post_start > from { resolved[from..post_start].to_vec() } else { Vec::new() })
}

/// Checks that happen after extraction, in order.
pub fn filter_sample(sample: &MergeSample, policy: &ContextPolicy, counter: &dyn TokenCounter) -> Result<(), RejectReason> {
    let sides = sample.left.len() + sample.base.len() + sample.right.len();
    if sample.ground_truth.len() > sides {
        return Err(RejectReason::new(
            RejectKind::ResolutionTooLarge,
            format!("resolution has {} lines, sides have {sides}", sample.ground_truth.len()),
        ));
    }
    for (name, lines) in [
        ("left", &sample.left),
        ("base", &sample.base),
        ("right", &sample.right),
        ("resolution", &sample.ground_truth),
    ] {
        if lines.len() > policy.max_side_lines {
            return Err(RejectReason::new(
                RejectKind::SideTooLarge,
                format!("{name} has {} lines (limit {})", lines.len(), policy.max_side_lines),
            ));
        }
    }
    let tokens = counter.count(&sample.conflict_text);
    if tokens > policy.max_conflict_tokens {
        return Err(RejectReason::new(
            RejectKind::TooManyTokens,
            format!("{tokens} tokens (limit {})", policy.max_conflict_tokens),
        ));
    }
    if !sample.language.is_known() {
        return Err(RejectReason::new(RejectKind::UnknownLanguage, format!("path {}", sample.provenance.path)));
    }
    Ok(())
}

/// Turns a mined candidate into an accepted sample or the first reason it
/// fails.
pub fn build_sample(candidate: &CandidateHunk, policy: &ContextPolicy, counter: &dyn TokenCounter) -> Result<MergeSample, RejectReason> {
    let hunk = &candidate.hunk;
    for (name, ctx) in [("pre", &hunk.pre_context), ("post", &hunk.post_context)] {
        if ctx.len() > policy.max_context_lines {
            return Err(RejectReason::new(
                RejectKind::SpanningContext,
                format!("{name}-context has {} lines (limit {})", ctx.len(), policy.max_context_lines),
            ));
        }
    }
    let ground_truth = extract_resolution(&candidate.resolved_file.lines, &hunk.pre_context, &hunk.post_context)?;
    let scenario = &candidate.scenario;
    let sample = MergeSample {
        id: sample_id(&scenario.repo_id, &scenario.merge_commit, &candidate.path, candidate.hunk_index),
        language: candidate.language,
        conflict_text: render_conflict_text(&hunk.pre_context, &hunk.left, &hunk.base, &hunk.right, &hunk.post_context),
        ground_truth,
        left: hunk.left.clone(),
        base: hunk.base.clone(),
        right: hunk.right.clone(),
        pre_context: hunk.pre_context.clone(),
        post_context: hunk.post_context.clone(),
        provenance: Provenance {
            repo_id: scenario.repo_id.clone(),
            merge_commit: scenario.merge_commit.clone(),
            path: candidate.path.clone(),
        },
    };
    filter_sample(&sample, policy, counter)?;
    Ok(sample)
}
