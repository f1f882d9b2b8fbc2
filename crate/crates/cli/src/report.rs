use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use mergebench_core::dataset::{read_records, write_atomic, RecordKind};
use mergebench_core::report::{build_report, render_csv, render_table, EvalRecord};
use serde_json::json;

use crate::manifest::{hash_inputs, write_manifest};
use crate::Status;

#[derive(clap::Args)]
pub struct Args {
    /// Results files written by `eval`.
    #[arg(required = true)]
    results: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the table to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<Status> {
    let paths: Vec<&std::path::Path> = args.results.iter().map(PathBuf::as_path).collect();
    let inputs = hash_inputs(&paths)?;
    if let Some(out) = &args.out {
        write_manifest(out, "report", json!({ "csv": args.csv }), hash_inputs(&paths)?)?;
    }

    let mut records: Vec<EvalRecord> = Vec::new();
    let mut corrupt = 0;
    for path in &args.results {
        let loaded = read_records::<EvalRecord>(path, RecordKind::Results)
            .with_context(|| format!("reading {}", path.display()))?;
        for (line, err) in &loaded.corrupt {
            log::warn!("{}:{line}: skipped corrupt record: {err}", path.display());
        }
        corrupt += loaded.corrupt.len();
        records.extend(loaded.records);
    }
    let reports = match build_report(&records) {
        Ok(r) => r,
        Err(e) => bail!("{e}"),
    };

    let mut text = String::new();
    for input in &inputs {
        text.push_str(&format!("# {} sha256={}\n", input.path, input.sha256));
    }
    text.push_str(&render_table(&reports));
    match &args.out {
        Some(out) => write_atomic(out, text.as_bytes()).with_context(|| format!("writing {}", out.display()))?,
        None => print!("{text}"),
    }
    if let Some(csv) = &args.csv {
        write_atomic(csv, render_csv(&reports).as_bytes()).with_context(|| format!("writing {}", csv.display()))?;
    }
    Ok(Status::from_counts(records.len(), corrupt))
}
