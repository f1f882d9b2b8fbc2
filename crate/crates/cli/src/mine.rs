use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{bail, Context, Result};
use mergebench_core::dataset::{write_records, RecordKind};
use mergebench_core::extract::ContextPolicy;
use mergebench_core::miner::{mine_all, sample_hunks, CandidateHunk, MineOptions, SampleTargets};
use serde_json::json;

use crate::manifest::{hash_inputs, write_manifest};
use crate::Status;

#[derive(clap::Args)]
pub struct Args {
    /// Repository list: one local path or clone URL per line, `#` comments.
    #[arg(long)]
    manifest: PathBuf,
    /// Candidate hunks (JSONL).
    #[arg(long)]
    out: PathBuf,
    /// Where URLs from the manifest are cloned.
    #[arg(long, default_value = "clones")]
    clone_dir: PathBuf,
    #[arg(long, default_value_t = 1000)]
    branch_cap: usize,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    #[arg(long, default_value_t = 20)]
    max_context_lines: usize,
    #[arg(long, default_value_t = 600)]
    target_min: usize,
    #[arg(long, default_value_t = 800)]
    target_max: usize,
    #[arg(long, default_value_t = 20)]
    per_repo_cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep every candidate instead of sampling per language.
    #[arg(long)]
    no_sample: bool,
}

fn is_url(entry: &str) -> bool {
    entry.contains("://") || entry.starts_with("git@")
}

/// Non-empty manifest entries with comments removed.
fn read_manifest(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split_once('#').map_or(l, |(before, _)| before).trim())
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// Relative paths are taken relative to the manifest file; URLs are cloned
/// once into `clone_dir`.
fn local_path(entry: &str, manifest: &Path, clone_dir: &Path) -> Result<PathBuf> {
    if !is_url(entry) {
        let p = Path::new(entry);
        return Ok(if p.is_absolute() {
            p.to_path_buf()
        } else {
            manifest.parent().unwrap_or(Path::new(".")).join(p)
        });
    }
    let name: String = entry
        .trim_end_matches('/')
        .trim_end_matches(".git")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    let dest = clone_dir.join(name);
    if !dest.exists() {
        std::fs::create_dir_all(clone_dir)?;
        log::info!("cloning {entry}");
        let ok = Command::new("git")
            .args(["clone", "--quiet", "--mirror", entry])
            .arg(&dest)
            .status()
            .context("running git clone")?
            .success();
        if !ok {
            bail!("git clone {entry} failed");
        }
    }
    Ok(dest)
}

pub fn run(args: Args) -> Result<Status> {
    let entries = read_manifest(&args.manifest)?;
    if entries.is_empty() {
        bail!("no repositories in {}", args.manifest.display());
    }
    let opts = MineOptions {
        branch_cap: args.branch_cap,
        workers: args.workers,
        policy: ContextPolicy {
            max_context_lines: args.max_context_lines,
            ..ContextPolicy::default()
        },
    };
    let targets = SampleTargets {
        target_min: args.target_min,
        target_max: args.target_max,
        per_repo_cap: args.per_repo_cap,
        seed: args.seed,
    };
    if targets.target_min > targets.target_max {
        bail!("--target-min must not exceed --target-max");
    }
    write_manifest(
        &args.out,
        "mine",
        json!({ "mine": opts, "sampling": if args.no_sample { None } else { Some(targets) }, "repositories": entries }),
        hash_inputs(&[&args.manifest])?,
    )?;

    let mut repos = Vec::new();
    let mut failed = 0;
    for entry in &entries {
        match local_path(entry, &args.manifest, &args.clone_dir) {
            Ok(path) => repos.push((entry.clone(), path)),
            Err(e) => {
                eprintln!("{entry}: {e:#}");
                failed += 1;
            }
        }
    }
    let mut candidates: Vec<CandidateHunk> = Vec::new();
    let mut succeeded = 0;
    for ((id, _), result) in repos.iter().zip(mine_all(&repos, &opts)) {
        match result {
            Ok(found) => {
                eprintln!("{id}: {} branches, {} merges, {} conflict hunks", found.branches, found.merges, found.hunks.len());
                candidates.extend(found.hunks);
                succeeded += 1;
            }
            Err(e) => {
                eprintln!("{id}: {e}");
                failed += 1;
            }
        }
    }
    let selected = if args.no_sample { candidates } else { sample_hunks(&candidates, &targets) };
    write_records(&args.out, RecordKind::Candidates, &selected).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("{} candidates written to {}", selected.len(), args.out.display());
    if failed > 0 {
        eprintln!("{failed} of {} repositories failed", entries.len());
    }
    // Failed repositories only fail the run when nothing could be mined.
    Ok(if succeeded == 0 { Status::Failed } else { Status::Success })
}
