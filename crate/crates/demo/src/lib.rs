//! Browser bindings for the playground page in `www/`.
//!
//! Every export takes and returns plain strings; structured results are
//! JSON so the page can stay framework-free.

use mergebench_core::classify::{score, Category};
use mergebench_core::conflict::{parse_conflict, render_conflict_labeled, MarkerLabels};
use mergebench_core::extract::{MergeSample, Provenance};
use mergebench_core::grpo::standardize_advantages;
use mergebench_core::normalize::{code_equivalent, normalize};
use mergebench_core::{merge3, Language, LineSeq, Region};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct MergeView {
    clean: bool,
    conflicts: usize,
    text: String,
}

#[derive(Serialize)]
struct CompareView {
    equivalent: bool,
    left: Vec<String>,
    right: Vec<String>,
}

#[derive(Serialize)]
struct ScoredAnswer {
    category: Category,
    reasoning: f64,
    format: f64,
    resolution: f64,
    total: f64,
    advantage: f64,
}

fn language(id: &str) -> Result<Language, String> {
    id.parse::<Language>().map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("view serializes")
}

pub fn merge_view(base: &str, left: &str, right: &str) -> String {
    let outcome = merge3(&LineSeq::parse(base), &LineSeq::parse(left), &LineSeq::parse(right));
    let labels = MarkerLabels {
        left: Some("left"),
        base: Some("base"),
        right: Some("right"),
    };
    to_json(&MergeView {
        clean: outcome.is_clean(),
        conflicts: outcome.conflict_count(),
        text: render_conflict_labeled(&outcome, &labels).expect("merge output renders"),
    })
}

pub fn compare_view(a: &str, b: &str, lang: &str) -> Result<String, String> {
    let lang = language(lang)?;
    let left = normalize(a, lang).map_err(|e| e.to_string())?;
    let right = normalize(b, lang).map_err(|e| e.to_string())?;
    Ok(to_json(&CompareView {
        equivalent: code_equivalent(a, b, lang).map_err(|e| e.to_string())?,
        left: left.lines,
        right: right.lines,
    }))
}

/// A sample from a snippet holding exactly one conflict, with the stable
/// lines around it as context.
fn sample_from_snippet(snippet: &str, resolution: &str, lang: Language) -> Result<MergeSample, String> {
    let parsed = parse_conflict(snippet).map_err(|e| e.to_string())?;
    let mut pre = Vec::new();
    let mut post = Vec::new();
    let mut conflict = None;
    for region in parsed.regions {
        match (region, &conflict) {
            (Region::Conflicted(c), None) => conflict = Some(c),
            (Region::Conflicted(_), Some(_)) => return Err("snippet has more than one conflict".into()),
            (Region::Stable(lines), None) => pre = lines,
            (Region::Stable(lines), Some(_)) => post = lines,
        }
    }
    let c = conflict.ok_or("snippet has no conflict markers")?;
    Ok(MergeSample {
        id: "playground".into(),
        language: lang,
        conflict_text: snippet.trim_end_matches('\n').to_string(),
        ground_truth: LineSeq::parse(resolution).lines,
        left: c.left,
        base: c.base,
        right: c.right,
        pre_context: pre,
        post_context: post,
        provenance: Provenance {
            repo_id: "playground".into(),
            merge_commit: String::new(),
            path: String::new(),
        },
    })
}

/// Scores each answer against the snippet and treats the answers as one
/// rollout group for the advantages. `answers_json` is a JSON string array.
pub fn score_view(snippet: &str, resolution: &str, lang: &str, answers_json: &str) -> Result<String, String> {
    let sample = sample_from_snippet(snippet, resolution, language(lang)?)?;
    let answers: Vec<String> = serde_json::from_str(answers_json).map_err(|e| e.to_string())?;
    if answers.is_empty() {
        return Err("no answers".into());
    }
    let scored: Vec<_> = answers.iter().map(|a| score(a, &sample)).collect();
    let rewards: Vec<f64> = scored.iter().map(|(_, r)| r.total).collect();
    let advantages = if rewards.len() >= 2 {
        standardize_advantages(&rewards).map_err(|e| e.to_string())?
    } else {
        vec![0.0]
    };
    let rows: Vec<ScoredAnswer> = scored
        .into_iter()
        .zip(advantages)
        .map(|((category, r), advantage)| ScoredAnswer {
            category,
            reasoning: r.reasoning,
            format: r.format,
            resolution: r.resolution,
            total: r.total,
            advantage,
        })
        .collect();
    Ok(to_json(&rows))
}

#[wasm_bindgen]
pub fn merge(base: &str, left: &str, right: &str) -> String {
    merge_view(base, left, right)
}

#[wasm_bindgen]
pub fn compare(a: &str, b: &str, language: &str) -> Result<String, JsError> {
    compare_view(a, b, language).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = scoreAnswers)]
pub fn score_answers(snippet: &str, resolution: &str, language: &str, answers_json: &str) -> Result<String, JsError> {
    score_view(snippet, resolution, language, answers_json).map_err(|e| JsError::new(&e))
}
