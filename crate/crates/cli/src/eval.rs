use std::collections::HashSet;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use mergebench_core::classify::score;
use mergebench_core::dataset::{read_records, sha256_hex, write_records, RecordKind};
use mergebench_core::extract::MergeSample;
use mergebench_core::llm::{run_benchmark, CacheStore, EndpointConfig, HttpEndpoint, API_KEY_ENV, CACHE_DIR_ENV};
use mergebench_core::report::{Disposition, EvalRecord};
use serde_json::json;

use crate::manifest::{hash_inputs, write_manifest};
use crate::Status;

#[derive(clap::Args)]
pub struct Args {
    /// Samples written by `build`.
    #[arg(long)]
    dataset: PathBuf,
    /// Results (JSONL), one record per sample.
    #[arg(long)]
    out: PathBuf,
    /// Model name sent to the endpoint.
    #[arg(long)]
    model: String,
    /// Label for the results table; defaults to --model.
    #[arg(long)]
    model_id: Option<String>,
    /// Base URL of a chat-completions API, without `/chat/completions`.
    #[arg(long, default_value = "http://localhost:8000/v1")]
    base_url: String,
    #[arg(long, default_value_t = 0.9)]
    temperature: f64,
    #[arg(long, default_value_t = 2048)]
    max_tokens: u32,
    /// Requests in flight at once.
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    /// System prompt text; none is sent when omitted.
    #[arg(long)]
    system_prompt_file: Option<PathBuf>,
    #[arg(long, env = CACHE_DIR_ENV, default_value = ".merge-bench-cache")]
    cache_dir: PathBuf,
    #[arg(long, default_value_t = 300)]
    timeout_secs: u64,
    #[arg(long, default_value_t = 4)]
    max_retries: u32,
    /// First retry delay; doubles on every further attempt.
    #[arg(long, default_value_t = 500)]
    retry_delay_ms: u64,
}

pub fn run(args: Args) -> Result<Status> {
    if args.parallelism == 0 {
        bail!("--parallelism must be at least 1");
    }
    if args.temperature.is_nan() || args.temperature < 0.0 {
        bail!("--temperature must be non-negative");
    }
    let system_text = match &args.system_prompt_file {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let config = EndpointConfig {
        base_url: args.base_url.clone(),
        model: args.model.clone(),
        temperature: args.temperature,
        max_output_tokens: args.max_tokens,
        timeout_secs: args.timeout_secs,
        max_retries: args.max_retries,
        parallelism: args.parallelism,
        retry_base_delay_ms: args.retry_delay_ms,
    };
    let model_id = args.model_id.clone().unwrap_or_else(|| args.model.clone());
    let config_json = serde_json::to_value(&config)?;
    write_manifest(
        &args.out,
        "eval",
        json!({
            "endpoint": config_json,
            "endpoint_sha256": sha256_hex(config_json.to_string().as_bytes()),
            "system_prompt_sha256": sha256_hex(system_text.as_bytes()),
            "model_id": model_id,
            "cache_dir": args.cache_dir,
        }),
        hash_inputs(&[&args.dataset])?,
    )?;

    let loaded = read_records::<MergeSample>(&args.dataset, RecordKind::Samples)
        .with_context(|| format!("reading {}", args.dataset.display()))?;
    for (line, err) in &loaded.corrupt {
        log::warn!("{}:{line}: skipped corrupt record: {err}", args.dataset.display());
    }
    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for s in loaded.records {
        if let Err(e) = s.check_consistency() {
            log::warn!("{e}; skipped");
        } else if !seen.insert(s.id.clone()) {
            log::warn!("duplicate sample id {}; skipped", s.id);
        } else {
            samples.push(s);
        }
    }
    if samples.is_empty() {
        bail!("no usable samples in {}", args.dataset.display());
    }

    let endpoint = HttpEndpoint::new(&config, std::env::var(API_KEY_ENV).ok());
    let cache = CacheStore::new(&args.cache_dir);
    let runs = run_benchmark(&samples, &system_text, &config, &endpoint, &cache);

    let mut records = Vec::with_capacity(samples.len());
    let (mut fresh, mut errors) = (0, 0);
    for (sample, run) in samples.iter().zip(runs) {
        let record = match run.result {
            Ok(completion) => {
                fresh += usize::from(!completion.cached);
                let (category, reward) = score(&completion.text, sample);
                EvalRecord {
                    sample_id: sample.id.clone(),
                    model_id: model_id.clone(),
                    language: sample.language,
                    category: Disposition::Scored(category),
                    reward: Some(reward),
                    error: None,
                }
            }
            Err(e) => {
                errors += 1;
                EvalRecord {
                    sample_id: sample.id.clone(),
                    model_id: model_id.clone(),
                    language: sample.language,
                    category: Disposition::Error,
                    reward: None,
                    error: Some(e.to_string()),
                }
            }
        };
        records.push(record);
    }
    write_records(&args.out, RecordKind::Results, &records).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "{} samples: {} answered ({} from cache), {errors} failed",
        samples.len(),
        samples.len() - errors,
        samples.len() - errors - fresh
    );
    let skipped = loaded.corrupt.len();
    Ok(Status::from_counts(samples.len() - errors, errors + skipped))
}
