//! Cross-checks merge3 against `git merge-file --diff3` on random documents.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mergebench_core::conflict::{render_conflict_labeled, MarkerLabels};
use mergebench_core::{merge3, LineSeq};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHABET: [&str; 4] = ["a", "b", "c", "d"];

fn random_doc(rng: &mut ChaCha8Rng, max: usize) -> Vec<&'static str> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| ALPHABET[rng.gen_range(0..4)]).collect()
}

/// Applies a few random line edits, so that sides share most of the base.
fn mutate(rng: &mut ChaCha8Rng, base: &[&'static str], max: usize) -> Vec<&'static str> {
    let mut doc = base.to_vec();
    for _ in 0..rng.gen_range(0..=4) {
        match rng.gen_range(0..3) {
            0 if doc.len() < max => {
                let at = rng.gen_range(0..=doc.len());
                doc.insert(at, ALPHABET[rng.gen_range(0..4)]);
            }
            1 if !doc.is_empty() => {
                let at = rng.gen_range(0..doc.len());
                doc.remove(at);
            }
            _ if !doc.is_empty() => {
                let at = rng.gen_range(0..doc.len());
                doc[at] = ALPHABET[rng.gen_range(0..4)];
            }
            _ => {}
        }
    }
    doc
}

fn to_text(lines: &[&str]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}

/// Returns (conflicted, output bytes) from git.
fn git_merge(dir: &Path, base: &str, left: &str, right: &str) -> (bool, String) {
    std::fs::write(dir.join("left"), left).unwrap();
    std::fs::write(dir.join("base"), base).unwrap();
    std::fs::write(dir.join("right"), right).unwrap();
    let out = Command::new("git")
        .current_dir(dir)
        .args(["merge-file", "-p", "--diff3", "-L", "left", "-L", "base", "-L", "right", "left", "base", "right"])
        .output()
        .expect("git must be installed to run the merge oracle");
    let code = out.status.code().expect("git merge-file terminated by signal");
    assert!((0..128).contains(&code), "git merge-file failed: {}", String::from_utf8_lossy(&out.stderr));
    (code > 0, String::from_utf8(out.stdout).unwrap())
}

#[test]
fn verdicts_and_output_match_git_merge_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let labels = MarkerLabels {
        left: Some("left"),
        base: Some("base"),
        right: Some("right"),
    };
    let started = Instant::now();
    let cases = 1000;
    let mut verdict_mismatches = 0;
    let mut byte_mismatches = 0;
    let mut conflicted = 0;
    for case in 0..cases {
        let base = random_doc(&mut rng, 40);
        let (left, right) = if case % 4 == 0 {
            (random_doc(&mut rng, 40), random_doc(&mut rng, 40))
        } else {
            (mutate(&mut rng, &base, 40), mutate(&mut rng, &base, 40))
        };
        let (bt, lt, rt) = (to_text(&base), to_text(&left), to_text(&right));
        let outcome = merge3(&LineSeq::parse(&bt), &LineSeq::parse(&lt), &LineSeq::parse(&rt));
        let (git_conflicted, git_text) = git_merge(dir.path(), &bt, &lt, &rt);
        conflicted += git_conflicted as usize;
        if outcome.is_clean() == git_conflicted {
            verdict_mismatches += 1;
            eprintln!("verdict mismatch case {case}: base={base:?} left={left:?} right={right:?}");
        }
        let ours = render_conflict_labeled(&outcome, &labels).unwrap();
        if ours != git_text {
            byte_mismatches += 1;
            if byte_mismatches <= 3 {
                eprintln!("output mismatch case {case}:\n--- ours\n{ours}--- git\n{git_text}");
            }
        }
    }
    let elapsed = started.elapsed();
    eprintln!(
        "{cases} cases, {conflicted} conflicted per git, {verdict_mismatches} verdict mismatches, \
         {byte_mismatches} output mismatches, {elapsed:?}"
    );
    assert_eq!(verdict_mismatches, 0);
    assert_eq!(byte_mismatches, 0);
    assert!(elapsed.as_secs() < 60);
}
