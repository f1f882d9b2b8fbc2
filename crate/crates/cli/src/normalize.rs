use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mergebench_core::normalize::{code_equivalent, normalize};
use mergebench_core::Language;

use crate::Status;

#[derive(clap::Args)]
pub struct Args {
    /// Language id (c, cpp, csharp, go, java, javascript, php, python, ruby,
    /// rust, typescript).
    #[arg(long)]
    language: Language,
    /// Source file, or `-` for stdin.
    input: PathBuf,
    /// Compare against this file instead of printing the normalized form.
    #[arg(long)]
    compare: Option<PathBuf>,
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

/// With `--compare`, prints `equivalent` or `different` and returns Partial
/// for the latter so scripts can branch on the exit code.
pub fn run(args: Args) -> Result<Status> {
    let code = read_input(&args.input)?;
    match &args.compare {
        None => {
            let normalized = normalize(&code, args.language)?;
            for line in &normalized.lines {
                println!("{line}");
            }
            Ok(Status::Success)
        }
        Some(other) => {
            let other = read_input(other)?;
            if code_equivalent(&code, &other, args.language)? {
                println!("equivalent");
                Ok(Status::Success)
            } else {
                println!("different");
                Ok(Status::Partial)
            }
        }
    }
}
