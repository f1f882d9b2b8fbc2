//! Throwaway git repositories for tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub struct GitFixture {
    dir: tempfile::TempDir,
}

impl GitFixture {
    pub fn new() -> GitFixture {
        let fixture = GitFixture {
            dir: tempfile::tempdir().unwrap(),
        };
        fixture.git(&["init", "-q", "-b", "main"]);
        fixture.git(&["config", "user.name", "Fixture"]);
        fixture.git(&["config", "user.email", "fixture@example.com"]);
        fixture.git(&["config", "commit.gpgsign", "false"]);
        fixture
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn path_buf(&self) -> PathBuf {
        self.dir.path().to_path_buf()
    }

    /// Runs git and returns trimmed stdout; panics on failure.
    pub fn git(&self, args: &[&str]) -> String {
        let (ok, out, err) = self.try_git(args);
        assert!(ok, "git {} failed: {err}", args.join(" "));
        out
    }

    pub fn try_git(&self, args: &[&str]) -> (bool, String, String) {
        let out = Command::new("git")
            .current_dir(self.path())
            .args(args)
            .env("GIT_AUTHOR_DATE", "2024-01-01T00:00:00Z")
            .env("GIT_COMMITTER_DATE", "2024-01-01T00:00:00Z")
            .output()
            .expect("git must be installed");
        (
            out.status.success(),
            String::from_utf8_lossy(&out.stdout).trim().to_string(),
            String::from_utf8_lossy(&out.stderr).into_owned(),
        )
    }

    pub fn git_stdin(&self, args: &[&str], input: &str) {
        use std::io::Write;
        let mut child = Command::new("git")
            .current_dir(self.path())
            .args(args)
            .stdin(std::process::Stdio::piped())
            .spawn()
            .expect("git must be installed");
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
        assert!(child.wait().unwrap().success(), "git {} failed", args.join(" "));
    }

    pub fn write(&self, path: &str, content: &str) {
        let full = self.path().join(path);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).unwrap();
        }
        std::fs::write(full, content).unwrap();
    }

    pub fn remove(&self, path: &str) {
        self.git(&["rm", "-q", path]);
    }

    pub fn commit(&self, message: &str) -> String {
        self.git(&["add", "-A"]);
        self.git(&["commit", "-q", "--allow-empty", "-m", message]);
        self.head()
    }

    pub fn head(&self) -> String {
        self.git(&["rev-parse", "HEAD"])
    }

    pub fn branch(&self, name: &str) {
        self.git(&["checkout", "-q", "-b", name]);
    }

    pub fn checkout(&self, name: &str) {
        self.git(&["checkout", "-q", name]);
    }

    /// Merges `other` into the current branch, overwrites `files` with the
    /// given resolution and commits, whether or not git saw conflicts.
    pub fn merge_resolved(&self, other: &str, files: &[(&str, &str)]) -> String {
        self.try_git(&["merge", "-q", "--no-ff", "--no-commit", other]);
        for (path, content) in files {
            self.write(path, content);
        }
        self.git(&["add", "-A"]);
        self.git(&["commit", "-q", "-m", &format!("merge {other}")]);
        self.head()
    }
}
