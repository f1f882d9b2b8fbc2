//! Mining conflict hunks from git history.
//!
//! Object access goes through the `git` command line tool; the merges
//! themselves are replayed with [`merge3`] so that hunk boundaries come
//! from this crate rather than from git's merge machinery.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict::marker_of;
use crate::extract::{attach_context, ContextPolicy};
use crate::language::Language;
use crate::lines::LineSeq;
use crate::merge::{merge3, ConflictHunk};

#[derive(Debug, Error)]
pub enum MineError {
    #[error("{0} is not a git repository")]
    NotARepository(PathBuf),
    #[error("could not run git: {0}")]
    ToolUnavailable(#[source] std::io::Error),
    #[error("git {args} failed: {stderr}")]
    Git { args: String, stderr: String },
    #[error("cannot read {path} at {commit}")]
    MissingBlob { commit: String, path: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MergeScenario {
    pub repo_id: String,
    pub merge_commit: String,
    pub parent_left: String,
    pub parent_right: String,
    pub merge_base: String,
    pub conflicted_paths: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateHunk {
    pub scenario: MergeScenario,
    pub path: String,
    pub language: Language,
    /// Position of the hunk among the conflicts of its file.
    pub hunk_index: usize,
    pub hunk: ConflictHunk,
    pub resolved_file: LineSeq,
}

impl CandidateHunk {
    pub fn key(&self) -> (&str, &str, &str, usize) {
        (&self.scenario.repo_id, &self.scenario.merge_commit, &self.path, self.hunk_index)
    }
}

/// A local clone driven through the git CLI. Commands run sequentially;
/// share one `Repo` per worker, not across workers.
#[derive(Debug)]
pub struct Repo {
    path: PathBuf,
}

impl Repo {
    pub fn open(path: impl AsRef<Path>) -> Result<Repo, MineError> {
        let repo = Repo {
            path: path.as_ref().to_path_buf(),
        };
        if !repo.path.is_dir() {
            return Err(MineError::NotARepository(repo.path));
        }
        match repo.run_raw(&["rev-parse", "--git-dir"], None)? {
            (true, _) => Ok(repo),
            (false, _) => Err(MineError::NotARepository(repo.path)),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn run_raw(&self, args: &[&str], stdin: Option<&str>) -> Result<(bool, Vec<u8>), MineError> {
        let mut cmd = Command::new("git");
        cmd.arg("-C")
            .arg(&self.path)
            .args(args)
            .stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        let mut child = cmd.spawn().map_err(MineError::ToolUnavailable)?;
        if let Some(input) = stdin {
            let mut pipe = child.stdin.take().expect("stdin was piped");
            pipe.write_all(input.as_bytes()).map_err(MineError::ToolUnavailable)?;
        }
        let out = child.wait_with_output().map_err(MineError::ToolUnavailable)?;
        if !out.status.success() {
            log::debug!("git {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim());
            return Ok((false, out.stderr));
        }
        Ok((true, out.stdout))
    }

    fn run(&self, args: &[&str], stdin: Option<&str>) -> Result<String, MineError> {
        match self.run_raw(args, stdin)? {
            (true, out) => Ok(String::from_utf8_lossy(&out).into_owned()),
            (false, err) => Err(MineError::Git {
                args: args.join(" "),
                stderr: String::from_utf8_lossy(&err).trim().to_string(),
            }),
        }
    }

    /// File content at `commit`, or `None` if the path does not exist there.
    pub fn blob(&self, commit: &str, path: &str) -> Result<Option<Vec<u8>>, MineError> {
        let spec = format!("{commit}:{path}");
        match self.run_raw(&["cat-file", "blob", &spec], None)? {
            (true, bytes) => Ok(Some(bytes)),
            (false, _) => Ok(None),
        }
    }

    pub fn merge_base(&self, a: &str, b: &str) -> Result<Option<String>, MineError> {
        match self.run_raw(&["merge-base", a, b], None)? {
            (true, out) => Ok(Some(String::from_utf8_lossy(&out).trim().to_string())),
            (false, err) if err.is_empty() => Ok(None),
            (false, err) => Err(MineError::Git {
                args: format!("merge-base {a} {b}"),
                stderr: String::from_utf8_lossy(&err).trim().to_string(),
            }),
        }
    }

    fn changed_paths(&self, from: &str, to: &str) -> Result<HashSet<String>, MineError> {
        let out = self.run(&["diff", "--name-only", "--no-renames", "-z", from, to], None)?;
        Ok(out.split('\0').filter(|s| !s.is_empty()).map(String::from).collect())
    }
}

/// The default branch first, then the remaining branches in lexicographic
/// order, at most `cap` in total. Symbolic refs such as `origin/HEAD` are
/// skipped.
pub fn enumerate_branches(repo: &Repo, cap: usize) -> Result<Vec<String>, MineError> {
    let default = match repo.run_raw(&["symbolic-ref", "-q", "HEAD"], None)? {
        (true, out) => Some(String::from_utf8_lossy(&out).trim().to_string()),
        (false, _) => None,
    };
    let listed = repo.run(&["for-each-ref", "--format=%(refname)", "refs/heads", "refs/remotes"], None)?;
    let mut others: Vec<String> = listed
        .lines()
        .filter(|r| !r.is_empty() && !r.ends_with("/HEAD") && Some(*r) != default.as_deref())
        .map(String::from)
        .collect();
    others.sort();
    let mut refs: Vec<String> = default.into_iter().collect();
    refs.extend(others);
    refs.truncate(cap);
    Ok(refs)
}

/// Two-parent merges reachable from `refs`, each listed once. Merges whose
/// parents share no ancestor are dropped.
pub fn find_merges(repo: &Repo, repo_id: &str, refs: &[String]) -> Result<Vec<MergeScenario>, MineError> {
    if refs.is_empty() {
        return Ok(Vec::new());
    }
    let input = refs.join("\n") + "\n";
    let out = repo.run(&["rev-list", "--merges", "--min-parents=2", "--max-parents=2", "--parents", "--stdin"], Some(&input))?;
    let mut seen = HashSet::new();
    let mut scenarios = Vec::new();
    for line in out.lines() {
        let ids: Vec<&str> = line.split_whitespace().collect();
        let [merge, left, right] = ids[..] else {
            continue;
        };
        if !seen.insert(merge.to_string()) {
            continue;
        }
        let Some(base) = repo.merge_base(left, right)? else {
            log::info!("{repo_id}: merge {merge} has unrelated parents, skipped");
            continue;
        };
        let on_left = repo.changed_paths(&base, left)?;
        let on_right = repo.changed_paths(&base, right)?;
        let mut both: Vec<String> = on_left.intersection(&on_right).cloned().collect();
        both.sort();
        scenarios.push(MergeScenario {
            repo_id: repo_id.to_string(),
            merge_commit: merge.to_string(),
            parent_left: left.to_string(),
            parent_right: right.to_string(),
            merge_base: base,
            conflicted_paths: both,
        });
    }
    Ok(scenarios)
}

fn text_of(bytes: Vec<u8>) -> Option<String> {
    if bytes.contains(&0) {
        return None;
    }
    String::from_utf8(bytes).ok()
}

/// Replays one merge and returns a candidate for every conflicted region.
pub fn replay_merge(repo: &Repo, scenario: &MergeScenario, policy: &ContextPolicy) -> Result<Vec<CandidateHunk>, MineError> {
    let mut out = Vec::new();
    for path in &scenario.conflicted_paths {
        let read = |commit: &str| -> Result<Option<String>, MineError> { Ok(repo.blob(commit, path)?.and_then(text_of)) };
        let (Some(base), Some(left), Some(right)) = (read(&scenario.merge_base)?, read(&scenario.parent_left)?, read(&scenario.parent_right)?)
        else {
            // added, deleted or binary on some side
            continue;
        };
        let outcome = merge3(&LineSeq::parse(&base), &LineSeq::parse(&left), &LineSeq::parse(&right));
        if outcome.is_clean() {
            continue;
        }
        let Some(resolved) = read(&scenario.merge_commit)? else {
            let err = MineError::MissingBlob {
                commit: scenario.merge_commit.clone(),
                path: path.clone(),
            };
            log::warn!("{}: {err}; skipped", scenario.repo_id);
            continue;
        };
        let resolved_file = LineSeq::parse(&resolved);
        let language = Language::from_path(path);
        for (index, conflict) in outcome.conflicts().enumerate() {
            if conflict.left == conflict.right {
                continue;
            }
            let (pre_context, post_context) = attach_context(&outcome, index, policy).expect("index comes from the same outcome");
            let hunk = ConflictHunk {
                pre_context,
                left: conflict.left.clone(),
                base: conflict.base.clone(),
                right: conflict.right.clone(),
                post_context,
            };
            let all = hunk.pre_context.iter().chain(&hunk.left).chain(&hunk.base).chain(&hunk.right).chain(&hunk.post_context);
            if all.clone().any(|l| marker_of(l).is_some()) {
                log::info!("{}: {path} hunk {index} already contains conflict markers, skipped", scenario.repo_id);
                continue;
            }
            out.push(CandidateHunk {
                scenario: scenario.clone(),
                path: path.clone(),
                language,
                hunk_index: index,
                hunk,
                resolved_file: resolved_file.clone(),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineOptions {
    pub branch_cap: usize,
    pub workers: usize,
    pub policy: ContextPolicy,
}

impl Default for MineOptions {
    fn default() -> Self {
        MineOptions {
            branch_cap: 1000,
            workers: 4,
            policy: ContextPolicy::default(),
        }
    }
}

/// Everything mined from one repository.
#[derive(Clone, Debug, Default)]
pub struct RepoYield {
    pub branches: usize,
    pub merges: usize,
    pub hunks: Vec<CandidateHunk>,
}

pub fn mine_repository(path: &Path, repo_id: &str, opts: &MineOptions) -> Result<RepoYield, MineError> {
    let repo = Repo::open(path)?;
    let refs = enumerate_branches(&repo, opts.branch_cap)?;
    let scenarios = find_merges(&repo, repo_id, &refs)?;
    log::info!("{repo_id}: {} branches, {} merges", refs.len(), scenarios.len());
    let mut hunks = Vec::new();
    for scenario in &scenarios {
        match replay_merge(&repo, scenario, &opts.policy) {
            Ok(found) => hunks.extend(found),
            Err(e) => log::warn!("{repo_id}: merge {}: {e}", scenario.merge_commit),
        }
    }
    Ok(RepoYield {
        branches: refs.len(),
        merges: scenarios.len(),
        hunks,
    })
}

/// Mines repositories in parallel on a pool of `opts.workers` threads.
/// Results keep the input order; a failing repository does not stop the
/// others.
pub fn mine_all(repos: &[(String, PathBuf)], opts: &MineOptions) -> Vec<Result<RepoYield, MineError>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| repos.par_iter().map(|(id, path)| mine_repository(path, id, opts)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleTargets {
    pub target_min: usize,
    pub target_max: usize,
    pub per_repo_cap: usize,
    pub seed: u64,
}

impl Default for SampleTargets {
    fn default() -> Self {
        SampleTargets {
            target_min: 600,
            target_max: 800,
            per_repo_cap: 20,
            seed: 0,
        }
    }
}

/// Per language, a seeded random selection of at most `target_max` hunks
/// with no more than `per_repo_cap` from any one repository. The result
/// does not depend on the order of `candidates`.
pub fn sample_hunks(candidates: &[CandidateHunk], targets: &SampleTargets) -> Vec<CandidateHunk> {
    assert!(targets.target_min <= targets.target_max, "target_min must not exceed target_max");
    let mut by_language: BTreeMap<Language, Vec<&CandidateHunk>> = BTreeMap::new();
    for c in candidates {
        by_language.entry(c.language).or_default().push(c);
    }
    let mut out = Vec::new();
    for (language, mut pool) in by_language {
        pool.sort_by(|a, b| a.key().cmp(&b.key()));
        pool.dedup_by(|a, b| a.key() == b.key());
        let lang_seed = targets.seed ^ (language as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        pool.shuffle(&mut ChaCha8Rng::seed_from_u64(lang_seed));
        let mut per_repo: HashMap<&str, usize> = HashMap::new();
        let mut taken = 0;
        for c in pool {
            if taken == targets.target_max {
                break;
            }
            let n = per_repo.entry(&c.scenario.repo_id).or_default();
            if *n < targets.per_repo_cap {
                *n += 1;
                taken += 1;
                out.push(c.clone());
            }
        }
        if taken < targets.target_min {
            log::info!("{language}: only {taken} hunks available (target {})", targets.target_min);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hunk(repo: &str, commit: &str, path: &str, index: usize) -> CandidateHunk {
        CandidateHunk {
            scenario: MergeScenario {
                repo_id: repo.into(),
                merge_commit: commit.into(),
                parent_left: "l".into(),
                parent_right: "r".into(),
                merge_base: "b".into(),
                conflicted_paths: vec![path.into()],
            },
            path: path.into(),
            language: Language::from_path(path),
            hunk_index: index,
            hunk: ConflictHunk::default(),
            resolved_file: LineSeq::default(),
        }
    }

    fn targets(cap: usize) -> SampleTargets {
        SampleTargets {
            target_min: 600,
            target_max: 800,
            per_repo_cap: cap,
            seed: 7,
        }
    }

    #[test]
    fn undersupply_returns_everything() {
        let c: Vec<_> = (0..10).map(|i| hunk("r", "m", "A.java", i)).collect();
        assert_eq!(sample_hunks(&c, &targets(20)).len(), 10);
    }

    #[test]
    fn per_repo_cap_applies() {
        let c: Vec<_> = (0..100).map(|i| hunk("r", "m", "A.java", i)).collect();
        assert_eq!(sample_hunks(&c, &targets(20)).len(), 20);
    }

    #[test]
    fn target_max_applies_per_language() {
        let mut c: Vec<_> = (0..1000).map(|i| hunk(&format!("r{}", i % 100), "m", "A.java", i)).collect();
        c.extend((0..50).map(|i| hunk("py", "m", "a.py", i)));
        let s = sample_hunks(&c, &targets(20));
        assert_eq!(s.iter().filter(|h| h.language == Language::Java).count(), 800);
        assert_eq!(s.iter().filter(|h| h.language == Language::Python).count(), 20);
    }

    #[test]
    fn sampling_is_deterministic_and_order_free() {
        let c: Vec<_> = (0..300).map(|i| hunk(&format!("r{}", i % 7), "m", "A.go", i)).collect();
        let once = sample_hunks(&c, &targets(20));
        assert_eq!(once, sample_hunks(&c, &targets(20)));
        let mut reversed = c.clone();
        reversed.reverse();
        assert_eq!(once, sample_hunks(&reversed, &targets(20)));
        let mut other = targets(20);
        other.seed = 8;
        assert_ne!(once, sample_hunks(&c, &other));
    }

    #[test]
    fn duplicates_are_sampled_once() {
        let c = vec![hunk("r", "m", "A.rs", 0), hunk("r", "m", "A.rs", 0)];
        assert_eq!(sample_hunks(&c, &targets(20)).len(), 1);
    }

    #[test]
    fn missing_directory_is_not_a_repository() {
        assert!(matches!(Repo::open("/nonexistent/path"), Err(MineError::NotARepository(_))));
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Repo::open(dir.path()), Err(MineError::NotARepository(_))));
    }
}
