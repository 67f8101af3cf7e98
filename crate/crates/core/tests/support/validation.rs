//! Random tool calls and the validation report expected of them, computed
//! by set difference over the declared parameters.

use std::collections::BTreeSet;

use medagent_core::toolbox::{ToolRegistry, ValidationReport};
use medagent_core::trajectory::ToolCall;
use rand::Rng;
use serde_json::{json, Value};

fn random_value(rng: &mut impl Rng) -> Value {
    match rng.gen_range(0..6) {
        0 => json!("text"),
        1 => json!(true),
        2 => json!({"k": 1}),
        3 => json!([1, 2]),
        4 => json!(3),
        _ => Value::Null,
    }
}

fn type_ok(declared: &str, v: &Value) -> bool {
    match declared {
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "object" | "dictionary" => v.is_object(),
        "array" => v.is_array(),
        _ => true,
    }
}

pub fn good_value(ty: &str) -> Value {
    match ty {
        "string" => json!("x"),
        "boolean" => json!(true),
        "object" | "dictionary" => json!({}),
        "array" => json!([]),
        _ => json!("x"),
    }
}

/// Mostly well-formed calls to registered tools, with aliases, dropped
/// parameters, wrong types, stray keys and the odd unknown tool mixed in.
pub fn random_call(rng: &mut impl Rng, reg: &ToolRegistry) -> ToolCall {
    let junk = ["foo", "bar", "date", "id", "text2"];
    let tool = if rng.gen_bool(0.9) {
        reg.tools()[rng.gen_range(0..reg.len())].name.clone()
    } else {
        "no_such_tool".to_string()
    };
    let mut call = ToolCall::new(tool.clone());
    if let Some(spec) = reg.lookup(&tool) {
        for p in &spec.parameters {
            if rng.gen_bool(0.7) {
                let key = if !p.aliases.is_empty() && rng.gen_bool(0.5) { p.aliases[0].clone() } else { p.name.clone() };
                let v = if rng.gen_bool(0.8) { good_value(p.ty.as_str()) } else { random_value(rng) };
                call.parameters.insert(key, v);
            }
        }
    }
    if rng.gen_bool(0.3) {
        call.parameters.insert(junk[rng.gen_range(0..junk.len())].to_string(), random_value(rng));
    }
    call
}

#[derive(Debug, PartialEq, Eq)]
pub struct Expected {
    pub unknown: BTreeSet<String>,
    pub missing: BTreeSet<String>,
    pub mismatched: BTreeSet<String>,
}

impl Expected {
    pub fn is_valid(&self) -> bool {
        self.unknown.is_empty() && self.missing.is_empty() && self.mismatched.is_empty()
    }
}

/// `None` for an unknown tool.
pub fn expected(call: &ToolCall, reg: &ToolRegistry) -> Option<Expected> {
    let spec = reg.lookup(&call.tool)?;
    let param = |k: &String| spec.parameters.iter().find(|p| &p.name == k || p.aliases.contains(k));
    let accepted: BTreeSet<String> = spec
        .parameters
        .iter()
        .flat_map(|p| std::iter::once(p.name.clone()).chain(p.aliases.iter().cloned()))
        .collect();
    let keys: BTreeSet<String> = call.parameters.keys().cloned().collect();
    let canonical: BTreeSet<String> = keys.iter().filter_map(param).map(|p| p.name.clone()).collect();
    let required: BTreeSet<String> = spec.required.iter().cloned().collect();
    let mismatched = call
        .parameters
        .iter()
        .filter_map(|(k, v)| {
            let p = param(k)?;
            (!type_ok(p.ty.as_str(), v)).then(|| p.name.clone())
        })
        .collect();
    Some(Expected {
        unknown: keys.difference(&accepted).cloned().collect(),
        missing: required.difference(&canonical).cloned().collect(),
        mismatched,
    })
}

/// The report's findings in the same form, for comparison.
pub fn reported(r: &ValidationReport) -> Expected {
    Expected {
        unknown: r.unknown_params.iter().cloned().collect(),
        missing: r.missing_required.iter().cloned().collect(),
        mismatched: r.type_mismatches.iter().map(|m| m.param.clone()).collect(),
    }
}
