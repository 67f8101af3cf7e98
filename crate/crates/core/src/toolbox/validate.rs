use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::registry::ToolRegistry;
use crate::trajectory::ToolCall;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeMismatch {
    pub param: String,
    pub expected: String,
    pub found: String,
}

/// Outcome of checking a call against the registry. For a known tool the
/// call is valid exactly when every list is empty.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tool: String,
    pub tool_known: bool,
    pub missing_required: Vec<String>,
    pub unknown_params: Vec<String>,
    pub type_mismatches: Vec<TypeMismatch>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.tool_known
            && self.missing_required.is_empty()
            && self.unknown_params.is_empty()
            && self.type_mismatches.is_empty()
    }

    /// One-line summary suitable for a corrective prompt.
    pub fn describe(&self) -> String {
        if !self.tool_known {
            return format!("unknown tool `{}`", self.tool);
        }
        let mut parts = Vec::new();
        if !self.missing_required.is_empty() {
            parts.push(format!("missing required: {}", self.missing_required.join(", ")));
        }
        if !self.unknown_params.is_empty() {
            parts.push(format!("unknown parameters: {}", self.unknown_params.join(", ")));
        }
        for m in &self.type_mismatches {
            parts.push(format!("`{}` expects {} but got {}", m.param, m.expected, m.found));
        }
        if parts.is_empty() {
            "valid".into()
        } else {
            format!("{}: {}", self.tool, parts.join("; "))
        }
    }
}

fn json_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

pub fn validate_call(call: &ToolCall, reg: &ToolRegistry) -> ValidationReport {
    let mut report = ValidationReport {
        tool: call.tool.clone(),
        ..Default::default()
    };
    let Some(spec) = reg.lookup(&call.tool) else {
        return report;
    };
    report.tool_known = true;

    let mut supplied: Vec<&str> = Vec::new();
    for (name, value) in &call.parameters {
        match spec.resolve(name) {
            Some(p) if supplied.contains(&p.name.as_str()) => {
                // both a name and its alias were given
                report.unknown_params.push(name.clone());
            }
            Some(p) => {
                supplied.push(p.name.as_str());
                if !p.ty.accepts(value) {
                    report.type_mismatches.push(TypeMismatch {
                        param: p.name.clone(),
                        expected: p.ty.to_string(),
                        found: json_type(value).to_string(),
                    });
                }
            }
            None => report.unknown_params.push(name.clone()),
        }
    }
    report.missing_required = spec
        .required
        .iter()
        .filter(|r| !supplied.contains(&r.as_str()))
        .cloned()
        .collect();
    report
}

/// Rewrites alias keys to their canonical parameter names. Unknown keys
/// pass through untouched.
pub fn normalize_call(call: &ToolCall, reg: &ToolRegistry) -> ToolCall {
    let Some(spec) = reg.lookup(&call.tool) else {
        return call.clone();
    };
    let parameters: Map<String, Value> = call
        .parameters
        .iter()
        .map(|(k, v)| {
            let key = spec.resolve(k).map_or(k.clone(), |p| p.name.clone());
            (key, v.clone())
        })
        .collect();
    ToolCall {
        tool: call.tool.clone(),
        parameters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolbox::load_default_registry;
    use serde_json::json;

    #[test]
    fn golden_confirm_appointment_is_valid() {
        let reg = load_default_registry();
        let call = ToolCall::new("confirm_appointment")
            .with("user_id", "JICC571413")
            .with("specialist_id", "AECJ317777")
            .with("appointment_time_date", "11:00-11:30, 30/11/2024");
        let r = validate_call(&call, &reg);
        assert!(r.is_valid(), "{r:?}");
    }

    #[test]
    fn missing_text_on_send_message() {
        let reg = load_default_registry();
        let r = validate_call(&ToolCall::new("send_message").with("phone_no", "+1"), &reg);
        assert_eq!(r.missing_required, vec!["text"]);
        assert!(!r.is_valid());
    }

    #[test]
    fn extra_param_is_unknown() {
        let reg = load_default_registry();
        let call = ToolCall::new("store_symptoms")
            .with("user_id", "JICC571413")
            .with("symptoms", "cough")
            .with("timestamp", "2024-09-02T10:57:00")
            .with("foo", 1);
        let r = validate_call(&call, &reg);
        assert_eq!(r.unknown_params, vec!["foo"]);
        assert!(r.missing_required.is_empty());
    }

    #[test]
    fn alias_is_accepted_and_normalized() {
        let reg = load_default_registry();
        let call = ToolCall::new("notify_user")
            .with("user_id", "HNNT232992")
            .with("symptoms", "Hard SOS triggered.");
        assert!(validate_call(&call, &reg).is_valid());
        let norm = normalize_call(&call, &reg);
        assert_eq!(norm.param_str("message"), Some("Hard SOS triggered."));
        assert!(norm.param("symptoms").is_none());

        let both = call.clone().with("message", "x");
        assert_eq!(validate_call(&both, &reg).unknown_params, vec!["message"]);
    }

    #[test]
    fn type_mismatch_is_reported() {
        let reg = load_default_registry();
        let call = ToolCall::new("search_ambulance").with("location", json!("23.5,139.7"));
        let r = validate_call(&call, &reg);
        assert_eq!(r.type_mismatches.len(), 1);
        assert_eq!(r.type_mismatches[0].expected, "dictionary");
    }

    #[test]
    fn unknown_tool() {
        let reg = load_default_registry();
        let r = validate_call(&ToolCall::new("book_taxi"), &reg);
        assert!(!r.tool_known);
        assert!(!r.is_valid());
        assert_eq!(r.describe(), "unknown tool `book_taxi`");
    }
}
