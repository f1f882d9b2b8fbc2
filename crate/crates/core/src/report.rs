//! Evaluation records and the results table.

use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{aggregate, Category, EmptyInput, ParseCategoryError, ReportRow, RewardBreakdown};
use crate::language::Language;

/// A category, or a sample the endpoint never answered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Disposition {
    Scored(Category),
    Error,
}

impl fmt::Display for Disposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Disposition::Scored(c) => c.fmt(f),
            Disposition::Error => f.write_str("error"),
        }
    }
}

impl From<Disposition> for String {
    fn from(d: Disposition) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for Disposition {
    type Error = ParseCategoryError;

    fn try_from(s: String) -> Result<Self, ParseCategoryError> {
        s.parse()
    }
}

impl FromStr for Disposition {
    type Err = ParseCategoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "error" {
            Ok(Disposition::Error)
        } else {
            s.parse().map(Disposition::Scored)
        }
    }
}

/// One line of a results file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub sample_id: String,
    pub model_id: String,
    pub language: Language,
    pub category: Disposition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelReport {
    pub row: ReportRow,
    pub errors: usize,
    pub mean_reward: f64,
    pub by_language: Vec<(Language, ReportRow)>,
}

/// One report per model, ordered by model id. Errored samples are counted
/// separately and left out of the percentages.
pub fn build_report(records: &[EvalRecord]) -> Result<Vec<ModelReport>, EmptyInput> {
    let mut by_model: BTreeMap<&str, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        by_model.entry(&r.model_id).or_default().push(r);
    }
    let mut reports = Vec::new();
    for (model, recs) in by_model {
        let scored: Vec<(&EvalRecord, Category)> = recs
            .iter()
            .filter_map(|r| match r.category {
                Disposition::Scored(c) => Some((*r, c)),
                Disposition::Error => None,
            })
            .collect();
        let categories: Vec<Category> = scored.iter().map(|(_, c)| *c).collect();
        let row = aggregate(&categories, model)?;
        let rewards: Vec<f64> = scored.iter().filter_map(|(r, _)| r.reward.map(|b| b.total)).collect();
        let mean_reward = if rewards.is_empty() { 0.0 } else { rewards.iter().sum::<f64>() / rewards.len() as f64 };
        let mut langs: BTreeMap<Language, Vec<Category>> = BTreeMap::new();
        for (r, c) in &scored {
            langs.entry(r.language).or_default().push(*c);
        }
        let by_language = langs
            .into_iter()
            .map(|(lang, cats)| (lang, aggregate(&cats, model).expect("non-empty by construction")))
            .collect();
        reports.push(ModelReport {
            row,
            errors: recs.len() - scored.len(),
            mean_reward,
            by_language,
        });
    }
    if reports.is_empty() {
        return Err(EmptyInput);
    }
    Ok(reports)
}

const COLUMNS: [&str; 5] = [
    "Equivalent text",
    "Code normalized equivalent",
    "Different code",
    "Conflict",
    "Invalid Markdown",
];

fn pct(x: f64) -> String {
    format!("{x:.1}")
}

fn table(title: &str, rows: &[(String, &ReportRow, Option<f64>)]) -> String {
    let mut header: Vec<String> = vec![title.to_string(), "N".to_string()];
    header.extend(COLUMNS.iter().map(|c| c.to_string()));
    let with_reward = rows.iter().any(|(_, _, r)| r.is_some());
    if with_reward {
        header.push("Mean reward".to_string());
    }
    let mut cells: Vec<Vec<String>> = vec![header];
    for (name, row, reward) in rows {
        let mut line = vec![name.clone(), row.total.to_string()];
        line.extend(row.percentages().iter().map(|&p| pct(p)));
        if with_reward {
            line.push(reward.map_or(String::new(), |r| format!("{r:.3}")));
        }
        cells.push(line);
    }
    let widths: Vec<usize> = (0..cells[0].len()).map(|i| cells.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (n, line) in cells.iter().enumerate() {
        let mut text = String::new();
        for (i, cell) in line.iter().enumerate() {
            if i == 0 {
                let _ = write!(text, "{cell:<w$}", w = widths[i]);
            } else {
                let _ = write!(text, "  {cell:>w$}", w = widths[i]);
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
        if n == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}

/// Aligned text table, followed by a per-language table when the results
/// cover more than one language.
pub fn render_table(reports: &[ModelReport]) -> String {
    let rows: Vec<(String, &ReportRow, Option<f64>)> = reports
        .iter()
        .map(|r| (r.row.model_id.clone(), &r.row, Some(r.mean_reward)))
        .collect();
    let mut out = table("Model", &rows);
    let multi = reports.iter().any(|r| r.by_language.len() > 1);
    if multi {
        let lang_rows: Vec<(String, &ReportRow, Option<f64>)> = reports
            .iter()
            .flat_map(|r| r.by_language.iter().map(move |(lang, row)| (format!("{} / {lang}", r.row.model_id), row, None)))
            .collect();
        out.push('\n');
        out.push_str(&table("Model / language", &lang_rows));
    }
    for r in reports.iter().filter(|r| r.errors > 0) {
        let _ = writeln!(out, "\n{}: {} samples failed at the endpoint and are excluded above", r.row.model_id, r.errors);
    }
    out
}

pub fn render_csv(reports: &[ModelReport]) -> String {
    let mut out = String::from(
        "model,language,n,equivalent_text,code_normalized_equivalent,different_code,conflict,invalid_markdown,errors,mean_reward\n",
    );
    let mut line = |model: &str, lang: &str, row: &ReportRow, errors: String, reward: String| {
        let p = row.percentages();
        let _ = writeln!(
            out,
            "{},{lang},{},{},{},{},{},{},{errors},{reward}",
            csv_field(model),
            row.total,
            pct(p[0]),
            pct(p[1]),
            pct(p[2]),
            pct(p[3]),
            pct(p[4])
        );
    };
    for r in reports {
        line(&r.row.model_id, "all", &r.row, r.errors.to_string(), format!("{:.3}", r.mean_reward));
        if r.by_language.len() > 1 {
            for (lang, row) in &r.by_language {
                line(&r.row.model_id, lang.id(), row, String::new(), String::new());
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
