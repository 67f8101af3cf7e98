//! Gated tool-call accuracy. A prediction earns parameter credit only if it
//! names the right tool, and value credit only if its parameter names are
//! also right, so `values <= params <= tools` on any dataset.

use std::collections::BTreeSet;

use medagent_core::calendar::{format_date, parse_date, Slot};
use medagent_core::trajectory::{parse_caller_output, ToolCall};
use serde::Serialize;
use serde_json::Value;

use crate::MetricError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CallAccuracy {
    pub tool: f64,
    pub params: f64,
    pub values: f64,
}

/// Per-pair verdict before averaging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallMatch {
    pub tool: bool,
    pub params: bool,
    pub values: bool,
}

fn canonical_text(s: &str) -> String {
    let s = s.trim();
    if let Some(slot) = Slot::parse_call_format(s) {
        return slot.to_call_format();
    }
    if let Some(d) = parse_date(s) {
        return format_date(d);
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Dates and slots in one canonical spelling, strings case-folded with
/// collapsed whitespace, numbers compared by value.
pub fn normalize_value(v: &Value) -> Value {
    match v {
        Value::String(s) => Value::String(canonical_text(s)),
        Value::Number(n) => n.as_f64().map_or(Value::Null, |f| serde_json::json!(f)),
        Value::Array(a) => Value::Array(a.iter().map(normalize_value).collect()),
        Value::Object(o) => {
            let mut keys: Vec<&String> = o.keys().collect();
            keys.sort();
            Value::Object(keys.into_iter().map(|k| (k.clone(), normalize_value(&o[k]))).collect())
        }
        other => other.clone(),
    }
}

pub fn match_calls(pred: Option<&ToolCall>, gold: &ToolCall) -> CallMatch {
    let Some(pred) = pred else { return CallMatch::default() };
    let tool = pred.tool == gold.tool;
    let names = |c: &ToolCall| c.parameters.keys().cloned().collect::<BTreeSet<_>>();
    let params = tool && names(pred) == names(gold);
    let values = params
        && gold
            .parameters
            .iter()
            .all(|(k, v)| pred.parameters.get(k).map(normalize_value) == Some(normalize_value(v)));
    CallMatch { tool, params, values }
}

/// Parses caller outputs; an unparsable prediction scores zero on all three.
pub fn match_outputs(pred: &str, gold: &str) -> CallMatch {
    let Ok(gold) = parse_caller_output(gold) else { return CallMatch::default() };
    match_calls(parse_caller_output(pred).ok().as_ref(), &gold)
}

pub fn call_accuracy(preds: &[Option<ToolCall>], golds: &[ToolCall]) -> Result<CallAccuracy, MetricError> {
    if preds.len() != golds.len() {
        return Err(MetricError::LengthMismatch { predictions: preds.len(), references: golds.len() });
    }
    if golds.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(average(preds.iter().zip(golds).map(|(p, g)| match_calls(p.as_ref(), g))))
}

pub fn average(matches: impl IntoIterator<Item = CallMatch>) -> CallAccuracy {
    let (mut n, mut t, mut p, mut v) = (0usize, 0usize, 0usize, 0usize);
    for m in matches {
        n += 1;
        t += usize::from(m.tool);
        p += usize::from(m.params);
        v += usize::from(m.values);
    }
    if n == 0 {
        return CallAccuracy::default();
    }
    let n = n as f64;
    CallAccuracy { tool: t as f64 / n, params: p as f64 / n, values: v as f64 / n }
}
