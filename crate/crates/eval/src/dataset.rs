use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use medagent_core::agent::Role;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calls::{average, match_outputs, CallAccuracy};
use crate::text::{bleu, rouge_l, rouge_n, MetricConfig};
use crate::MetricError;

pub const VALUES_ACC_DEFINITION: &str = "ValuesAcc counts a call only when the tool and the parameter-name set \
    both match and every value equals the reference after normalization (dates and slots canonicalized, \
    strings trimmed and case-folded, numbers by value). ParamAcc is gated on ToolAcc the same way.";

/// One reference output with its grouping keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSample {
    pub role: Role,
    #[serde(default)]
    pub family: Option<String>,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub role: Role,
    pub category: String,
    pub samples: usize,
    pub bleu: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tool_acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param_acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values_acc: Option<f64>,
}

impl EvalRow {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "bleu" => Some(self.bleu),
            "rouge1" => Some(self.rouge1),
            "rouge2" => Some(self.rouge2),
            "rouge_l" | "rougel" => Some(self.rouge_l),
            "tool_acc" => self.tool_acc,
            "param_acc" => self.param_acc,
            "values_acc" => self.values_acc,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: String,
    pub values_acc_definition: &'static str,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn row(&self, role: Role, category: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.role == role && r.category == category)
    }

    /// Rows failing `t`, as human-readable lines.
    pub fn violations(&self, thresholds: &[Threshold]) -> Vec<String> {
        let mut out = Vec::new();
        for t in thresholds {
            for r in &self.rows {
                if let Some(v) = r.metric(&t.metric) {
                    if v < t.min {
                        out.push(format!("{} {} {} = {v:.4} < {}", r.role, r.category, t.metric, t.min));
                    }
                }
            }
        }
        out
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.config)?;
        writeln!(f, "# {}", self.values_acc_definition)?;
        writeln!(
            f,
            "{:<8} {:<16} {:>7} {:>8} {:>7} {:>7} {:>7} {:>8} {:>9} {:>10}",
            "role", "category", "n", "BLEU", "Rouge1", "Rouge2", "RougeL", "ToolAcc", "ParamAcc", "ValuesAcc"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<8} {:<16} {:>7} {:>8.2} {:>7.4} {:>7.4} {:>7.4} {:>8} {:>9} {:>10}",
                r.role.as_str(),
                r.category,
                r.samples,
                r.bleu,
                r.rouge1,
                r.rouge2,
                r.rouge_l,
                opt(r.tool_acc),
                opt(r.param_acc),
                opt(r.values_acc)
            )?;
        }
        Ok(())
    }
}

/// A CI gate: every row that reports `metric` must reach `min`.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub metric: String,
    pub min: f64,
}

impl FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (m, v) = s.split_once('=').ok_or_else(|| format!("expected metric=value, got `{s}`"))?;
        let metric = m.trim().to_lowercase();
        const KNOWN: [&str; 8] = ["bleu", "rouge1", "rouge2", "rouge_l", "rougel", "tool_acc", "param_acc", "values_acc"];
        if !KNOWN.contains(&metric.as_str()) {
            return Err(format!("unknown metric `{m}`"));
        }
        let min = v.trim().parse().map_err(|_| format!("bad threshold `{v}`"))?;
        Ok(Self { metric, min })
    }
}

struct PairScores {
    rouge1: f64,
    rouge2: f64,
    rouge_l: f64,
}

fn row(role: Role, category: String, preds: &[&str], golds: &[&str], cfg: &MetricConfig) -> Result<EvalRow, MetricError> {
    let scores: Vec<PairScores> = preds
        .par_iter()
        .zip(golds.par_iter())
        .map(|(p, g)| PairScores { rouge1: rouge_n(p, g, 1), rouge2: rouge_n(p, g, 2), rouge_l: rouge_l(p, g) })
        .collect();
    let n = scores.len() as f64;
    let mean = |f: fn(&PairScores) -> f64| scores.iter().map(f).sum::<f64>() / n;
    let acc: Option<CallAccuracy> = (role == Role::Caller).then(|| {
        let matches: Vec<_> = preds.par_iter().zip(golds.par_iter()).map(|(p, g)| match_outputs(p, g)).collect();
        average(matches)
    });
    Ok(EvalRow {
        role,
        category,
        samples: scores.len(),
        bleu: bleu(preds, golds, cfg)?,
        rouge1: mean(|s| s.rouge1),
        rouge2: mean(|s| s.rouge2),
        rouge_l: mean(|s| s.rouge_l),
        tool_acc: acc.map(|a| a.tool),
        param_acc: acc.map(|a| a.params),
        values_acc: acc.map(|a| a.values),
    })
}

/// Rows per (role, family) followed by an `all` row per role. Empty groups
/// are skipped.
pub fn evaluate_samples(preds: &[String], golds: &[EvalSample], cfg: &MetricConfig) -> Result<EvalReport, MetricError> {
    if preds.len() != golds.len() {
        return Err(MetricError::LengthMismatch { predictions: preds.len(), references: golds.len() });
    }
    if golds.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut groups: BTreeMap<(&'static str, String), (Role, Vec<&str>, Vec<&str>)> = BTreeMap::new();
    for (p, g) in preds.iter().zip(golds) {
        if g.role == Role::Report {
            continue;
        }
        let family = g.family.clone().unwrap_or_else(|| "unknown".into());
        for category in [family, "all".to_string()] {
            let e = groups.entry((g.role.as_str(), category)).or_insert_with(|| (g.role, Vec::new(), Vec::new()));
            e.1.push(p);
            e.2.push(&g.output);
        }
    }
    let mut rows = Vec::new();
    // planner before caller, `all` last within a role
    let mut keys: Vec<_> = groups.keys().cloned().collect();
    keys.sort_by_key(|(role, cat)| (*role != "planner", cat == "all", cat.clone()));
    for key in keys {
        let (role, p, g) = &groups[&key];
        if p.is_empty() {
            tracing::warn!("no samples for {} {}", key.0, key.1);
            continue;
        }
        rows.push(row(*role, key.1.clone(), p, g, cfg)?);
    }
    Ok(EvalReport { config: cfg.describe(), values_acc_definition: VALUES_ACC_DEFINITION, rows })
}

fn prediction_text(line: &str) -> Result<String> {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::String(s)) => Ok(s),
        Ok(Value::Object(o)) => match o.get("output") {
            Some(Value::String(s)) => Ok(s.clone()),
            _ => bail!("prediction object has no `output` string"),
        },
        _ => Ok(line.to_string()),
    }
}

fn lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().filter(|l| !l.trim().is_empty()).map(String::from).collect())
}

/// Predictions are one per line: a JSON object with `output`, a JSON
/// string, or raw text. References are JSON objects with `role`, `family`
/// and `output`, as written by the interleaver.
pub fn evaluate_dataset(pred: &Path, gold: &Path, cfg: &MetricConfig) -> Result<EvalReport> {
    let preds = lines(pred)?
        .iter()
        .enumerate()
        .map(|(i, l)| prediction_text(l).with_context(|| format!("{}:{}", pred.display(), i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let golds = lines(gold)?
        .iter()
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", gold.display(), i + 1)))
        .collect::<Result<Vec<EvalSample>>>()?;
    Ok(evaluate_samples(&preds, &golds, cfg)?)
}
