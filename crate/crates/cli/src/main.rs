//! `merge-bench`: mine merge conflicts, build a dataset, evaluate models
//! against it and report the results.

mod build;
mod eval;
mod grpo;
mod manifest;
mod mine;
mod normalize;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// How a command finished, mapped onto the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Some inputs failed; outputs cover the rest.
    Partial,
    Failed,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Partial => 2,
            Status::Failed => 3,
        }
    }

    /// Success when nothing failed, Failed when nothing succeeded.
    pub fn from_counts(ok: usize, failed: usize) -> Status {
        match (ok, failed) {
            (_, 0) => Status::Success,
            (0, _) => Status::Failed,
            _ => Status::Partial,
        }
    }
}

#[derive(Parser)]
#[command(name = "merge-bench", version, about = "Merge-conflict resolution benchmark toolkit")]
struct Cli {
    /// More logging (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay merges from local clones and write candidate conflict hunks.
    Mine(mine::Args),
    /// Extract developer resolutions, apply the filters and write samples.
    Build(build::Args),
    /// Ask a model to resolve every sample and score the answers.
    Eval(eval::Args),
    /// Summarize one or more results files as a table and CSV.
    Report(report::Args),
    /// Print the normalized form of a snippet, or compare two snippets.
    Normalize(normalize::Args),
    /// Evaluate GRPO advantages, clipped terms and objective for rollout groups.
    GrpoCheck(grpo::Args),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Mine(args) => mine::run(args),
        Command::Build(args) => build::run(args),
        Command::Eval(args) => eval::run(args),
        Command::Report(args) => report::run(args),
        Command::Normalize(args) => normalize::run(args),
        Command::GrpoCheck(args) => grpo::run(args),
    };
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::Failed.code())
        }
    }
}
