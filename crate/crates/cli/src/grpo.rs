use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use mergebench_core::dataset::{read_records, RecordKind};
use mergebench_core::grpo::{group_terms, grpo_objective, GrpoConfig, RolloutGroup};

use crate::Status;

#[derive(clap::Args)]
pub struct Args {
    /// Rollout groups (JSONL): rewards, logp_new, logp_old and optional
    /// kl_estimate per group.
    #[arg(long)]
    groups: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")
}

pub fn run(args: Args) -> Result<Status> {
    if args.epsilon.is_nan() || args.epsilon < 0.0 {
        bail!("--epsilon must be non-negative");
    }
    let config = GrpoConfig {
        epsilon: args.epsilon,
        beta: args.beta,
    };
    let loaded = read_records::<RolloutGroup>(&args.groups, RecordKind::Groups)
        .with_context(|| format!("reading {}", args.groups.display()))?;
    for (line, err) in &loaded.corrupt {
        log::warn!("{}:{line}: skipped corrupt record: {err}", args.groups.display());
    }
    for (i, group) in loaded.records.iter().enumerate() {
        let terms = group_terms(group, &config).with_context(|| format!("group {i}"))?;
        println!("group {i}");
        println!("  advantages {}", fmt_list(&terms.advantages));
        println!("  ratios     {}", fmt_list(&terms.ratios));
        println!("  clipped    {}", fmt_list(&terms.clipped));
        println!("  mean_kl    {:.6}", terms.mean_kl);
        println!("  value      {:.6}", terms.value);
    }
    let objective = grpo_objective(&loaded.records, &config)?;
    println!("objective {objective:.6}");
    Ok(Status::from_counts(loaded.records.len(), loaded.corrupt.len()))
}
