use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use mergebench_core::dataset::{file_sha256, write_atomic};
use serde::Serialize;
use serde_json::Value;

/// Written next to a command's main output before anything else, and never
/// touched again.
#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub started_unix: u64,
    pub config: Value,
    pub inputs: Vec<InputHash>,
}

#[derive(Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

pub fn hash_inputs(paths: &[&Path]) -> Result<Vec<InputHash>> {
    paths
        .iter()
        .map(|p| {
            Ok(InputHash {
                path: p.display().to_string(),
                sha256: file_sha256(p).with_context(|| format!("reading {}", p.display()))?,
            })
        })
        .collect()
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

pub fn write_manifest(output: &Path, command: &'static str, config: Value, inputs: Vec<InputHash>) -> Result<()> {
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config,
        inputs,
    };
    let path = manifest_path(output);
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes).with_context(|| format!("writing {}", path.display()))
}
