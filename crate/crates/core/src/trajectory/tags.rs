//! Tagged text renderings of planner and caller outputs.
//!
//! Planner: `<reason>…</reason><action>…</action>`.
//! Caller: `<tool>name</tool><parameters>{…}</parameters>`, where the
//! parameter block is a JSON object literal.

use std::fmt;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::{Map, Value};
use thiserror::Error;

use super::{is_identifier, PlannerStep, ToolCall};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TagError {
    #[error("missing or unclosed <{0}> tag")]
    MissingTag(&'static str),
    #[error("<{0}> is empty")]
    EmptyField(&'static str),
    #[error("malformed parameters: {0}")]
    MalformedParameters(String),
}

fn between<'a>(text: &'a str, tag: &'static str, from: usize) -> Result<(&'a str, usize), TagError> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = text[from..]
        .find(&open)
        .map(|i| from + i + open.len())
        .ok_or(TagError::MissingTag(tag))?;
    let end = text[start..]
        .find(&close)
        .map(|i| start + i)
        .ok_or(TagError::MissingTag(tag))?;
    Ok((&text[start..end], end + close.len()))
}

pub fn parse_planner_output(text: &str) -> Result<PlannerStep, TagError> {
    let (reason, after) = between(text, "reason", 0)?;
    let (action, _) = between(text, "action", after)
        .or_else(|_| between(text, "action", 0))?;
    let reason = reason.trim();
    let action = action.trim();
    if reason.is_empty() {
        return Err(TagError::EmptyField("reason"));
    }
    if action.is_empty() {
        return Err(TagError::EmptyField("action"));
    }
    Ok(PlannerStep::new(reason, action))
}

pub fn render_planner_output(step: &PlannerStep) -> String {
    format!("<reason>{}</reason><action>{}</action>", step.reason, step.action)
}

pub fn parse_caller_output(text: &str) -> Result<ToolCall, TagError> {
    let (tool, after) = between(text, "tool", 0)?;
    let tool = tool.trim();
    if tool.is_empty() {
        return Err(TagError::EmptyField("tool"));
    }
    if !is_identifier(tool) {
        return Err(TagError::MalformedParameters(format!(
            "tool name `{tool}` is not an identifier"
        )));
    }
    let (params, _) = between(text, "parameters", after)
        .or_else(|_| between(text, "parameters", 0))?;
    let params = params.trim();
    let parameters = if params.is_empty() {
        Map::new()
    } else {
        serde_json::from_str::<UniqueKeyObject>(params)
            .map_err(|e| TagError::MalformedParameters(e.to_string()))?
            .0
    };
    Ok(ToolCall {
        tool: tool.to_string(),
        parameters,
    })
}

pub fn render_caller_output(call: &ToolCall) -> String {
    let params = serde_json::to_string(&call.parameters).expect("json values serialize");
    format!("<tool>{}</tool><parameters>{}</parameters>", call.tool, params)
}

/// A JSON object whose top-level keys must be unique.
struct UniqueKeyObject(Map<String, Value>);

impl<'de> Deserialize<'de> for UniqueKeyObject {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = UniqueKeyObject;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a parameter object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut map = Map::new();
                while let Some((k, v)) = access.next_entry::<String, Value>()? {
                    if map.contains_key(&k) {
                        return Err(serde::de::Error::custom(format!("duplicate parameter `{k}`")));
                    }
                    map.insert(k, v);
                }
                Ok(UniqueKeyObject(map))
            }
        }
        d.deserialize_map(V)
    }
}
