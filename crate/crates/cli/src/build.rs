use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use anyhow::{Context, Result};
use mergebench_core::dataset::{read_records, write_atomic, write_records, RecordKind};
use mergebench_core::extract::{build_sample, sample_id, ApproxTokenCounter, ContextPolicy, MergeSample, RejectKind};
use mergebench_core::miner::CandidateHunk;
use serde_json::json;

use crate::manifest::{hash_inputs, write_manifest};
use crate::Status;

#[derive(clap::Args)]
pub struct Args {
    /// Candidate hunks written by `mine`.
    #[arg(long)]
    candidates: PathBuf,
    /// Accepted samples (JSONL).
    #[arg(long)]
    out: PathBuf,
    /// Rejection log, one `id<TAB>kind<TAB>detail` line per rejected
    /// candidate. Defaults to `<out>.rejections.tsv`.
    #[arg(long)]
    rejections: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    max_context_lines: usize,
    #[arg(long, default_value_t = 20)]
    max_side_lines: usize,
    #[arg(long, default_value_t = 512)]
    max_conflict_tokens: usize,
}

fn one_line(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn run(args: Args) -> Result<Status> {
    let policy = ContextPolicy {
        max_context_lines: args.max_context_lines,
        max_side_lines: args.max_side_lines,
        max_conflict_tokens: args.max_conflict_tokens,
    };
    let rejections_path = args.rejections.clone().unwrap_or_else(|| {
        let mut name = args.out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".rejections.tsv");
        args.out.with_file_name(name)
    });
    write_manifest(
        &args.out,
        "build",
        json!({ "policy": policy, "token_counter": "approx-bytes/4" }),
        hash_inputs(&[&args.candidates])?,
    )?;

    let loaded = read_records::<CandidateHunk>(&args.candidates, RecordKind::Candidates)
        .with_context(|| format!("reading {}", args.candidates.display()))?;
    for (line, err) in &loaded.corrupt {
        log::warn!("{}:{line}: skipped corrupt record: {err}", args.candidates.display());
    }

    let mut samples: Vec<MergeSample> = Vec::new();
    let mut seen = HashSet::new();
    let mut log_lines = String::new();
    let mut counts: BTreeMap<RejectKind, usize> = BTreeMap::new();
    for candidate in &loaded.records {
        let s = &candidate.scenario;
        let id = sample_id(&s.repo_id, &s.merge_commit, &candidate.path, candidate.hunk_index);
        if !seen.insert(id.clone()) {
            log::warn!("duplicate candidate {id} skipped");
            continue;
        }
        match build_sample(candidate, &policy, &ApproxTokenCounter) {
            Ok(sample) => samples.push(sample),
            Err(reason) => {
                *counts.entry(reason.kind).or_default() += 1;
                log_lines.push_str(&format!("{id}\t{}\t{}\n", reason.kind, one_line(&reason.detail)));
            }
        }
    }

    write_records(&args.out, RecordKind::Samples, &samples).with_context(|| format!("writing {}", args.out.display()))?;
    write_atomic(&rejections_path, log_lines.as_bytes()).with_context(|| format!("writing {}", rejections_path.display()))?;

    println!("accepted {} of {} candidates", samples.len(), loaded.records.len());
    for kind in RejectKind::ALL {
        println!("  {kind:<20} {}", counts.get(&kind).copied().unwrap_or(0));
    }
    if !loaded.corrupt.is_empty() {
        println!("  {:<20} {}", "corrupt records", loaded.corrupt.len());
    }
    Ok(Status::from_counts(loaded.records.len(), loaded.corrupt.len()))
}
