//! Trajectory data model and its document format.
//!
//! A trajectory is the ordered record of one task episode: a `system` state
//! carrying the user profile, the user's query, then alternating planner,
//! caller and observation states until the planner emits `<END>`.
//!
//! ```json
//! {
//!   "interaction_trajectory": [
//!     {"from": "system", "value": {"user_details": {"user_id": "...", "name": "...", "timestamp": "..."}}},
//!     {"from": "user", "value": "..."},
//!     {"from": "planner", "value": {"reason": "...", "action": "..."}},
//!     {"from": "caller", "value": {"tool": "...", "parameters": {...}}},
//!     {"from": "observation", "value": {"result": ...}}
//!   ]
//! }
//! ```

mod tags;

pub use tags::{
    parse_caller_output, parse_planner_output, render_caller_output, render_planner_output,
    TagError,
};

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Literal planner action that terminates an episode.
pub const END_ACTION: &str = "<END>";

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("schema violation at state {index:?}: {message}")]
    SchemaViolation { index: Option<usize>, message: String },
    #[error("ordering violation at state {index}: `{found}` may not follow `{previous}`")]
    OrderingViolation {
        index: usize,
        previous: StateKind,
        found: StateKind,
    },
    #[error("ordering violation at state {index}: {message}")]
    InvalidSequence { index: usize, message: String },
}

impl TrajectoryError {
    fn schema(index: impl Into<Option<usize>>, message: impl Into<String>) -> Self {
        Self::SchemaViolation {
            index: index.into(),
            message: message.into(),
        }
    }

    pub fn is_ordering(&self) -> bool {
        matches!(
            self,
            Self::OrderingViolation { .. } | Self::InvalidSequence { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    System,
    User,
    Planner,
    Caller,
    Observation,
}

impl StateKind {
    pub const ALL: [StateKind; 5] = [
        StateKind::System,
        StateKind::User,
        StateKind::Planner,
        StateKind::Caller,
        StateKind::Observation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StateKind::System => "system",
            StateKind::User => "user",
            StateKind::Planner => "planner",
            StateKind::Caller => "caller",
            StateKind::Observation => "observation",
        }
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StateKind {
    type Err = TrajectoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StateKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| TrajectoryError::schema(None, format!("unknown state kind `{s}`")))
    }
}

/// User identifier of the form `[A-Z]{4}[0-9]{6}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct UserId(String);

impl UserId {
    pub fn parse(s: &str) -> Result<Self, TrajectoryError> {
        if is_user_id(s) {
            Ok(Self(s.to_string()))
        } else {
            Err(TrajectoryError::schema(
                None,
                format!("user_id `{s}` does not match [A-Z]{{4}}[0-9]{{6}}"),
            ))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl<'de> Deserialize<'de> for UserId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        UserId::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn is_user_id(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 10
        && b[..4].iter().all(u8::is_ascii_uppercase)
        && b[4..].iter().all(u8::is_ascii_digit)
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f").ok()
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    let base = ts.format(TIMESTAMP_FORMAT).to_string();
    if ts.and_utc().timestamp_subsec_nanos() == 0 {
        base
    } else {
        ts.format("%Y-%m-%dT%H:%M:%S%.f").to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserDetails {
    pub user_id: UserId,
    pub name: String,
    /// Naive local time; one clock per trajectory.
    pub timestamp: NaiveDateTime,
    pub extra: Map<String, Value>,
}

impl UserDetails {
    pub fn new(user_id: UserId, name: impl Into<String>, timestamp: NaiveDateTime) -> Self {
        Self {
            user_id,
            name: name.into(),
            timestamp,
            extra: Map::new(),
        }
    }

    fn from_value(index: usize, v: &Value) -> Result<Self, TrajectoryError> {
        let obj = v
            .as_object()
            .ok_or_else(|| TrajectoryError::schema(index, "user_details must be an object"))?;
        let field = |k: &str| {
            obj.get(k)
                .and_then(Value::as_str)
                .ok_or_else(|| TrajectoryError::schema(index, format!("user_details.{k} missing")))
        };
        let user_id = UserId::parse(field("user_id")?).map_err(|e| match e {
            TrajectoryError::SchemaViolation { message, .. } => {
                TrajectoryError::schema(index, message)
            }
            other => other,
        })?;
        let name = field("name")?.to_string();
        let raw_ts = field("timestamp")?;
        let timestamp = parse_timestamp(raw_ts).ok_or_else(|| {
            TrajectoryError::schema(index, format!("timestamp `{raw_ts}` is not ISO-8601"))
        })?;
        let extra = without_keys(obj, &["user_id", "name", "timestamp"]);
        Ok(Self {
            user_id,
            name,
            timestamp,
            extra,
        })
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("user_id".into(), Value::String(self.user_id.to_string()));
        m.insert("name".into(), Value::String(self.name.clone()));
        m.insert(
            "timestamp".into(),
            Value::String(format_timestamp(&self.timestamp)),
        );
        m.extend(self.extra.clone());
        Value::Object(m)
    }
}

/// One planner turn: free-text reasoning plus the next action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerStep {
    pub reason: String,
    pub action: String,
}

impl PlannerStep {
    pub fn new(reason: impl Into<String>, action: impl Into<String>) -> Self {
        Self {
            reason: reason.into(),
            action: action.into(),
        }
    }

    pub fn end(reason: impl Into<String>) -> Self {
        Self::new(reason, END_ACTION)
    }

    pub fn is_terminal(&self) -> bool {
        self.action == END_ACTION
    }
}

/// A concrete tool invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    pub parameters: Map<String, Value>,
}

impl ToolCall {
    pub fn new(tool: impl Into<String>) -> Self {
        Self {
            tool: tool.into(),
            parameters: Map::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.parameters.insert(name.into(), value.into());
        self
    }

    pub fn param(&self, name: &str) -> Option<&Value> {
        self.parameters.get(name)
    }

    pub fn param_str(&self, name: &str) -> Option<&str> {
        self.parameters.get(name).and_then(Value::as_str)
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    System(UserDetails),
    User(String),
    Planner(PlannerStep),
    Caller(ToolCall),
    Observation(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub payload: Payload,
    /// Unrecognized keys inside `value`, preserved verbatim.
    pub value_extra: Map<String, Value>,
    /// Unrecognized keys next to `from`/`value`, preserved verbatim.
    pub extra: Map<String, Value>,
}

impl From<Payload> for State {
    fn from(payload: Payload) -> Self {
        Self {
            payload,
            value_extra: Map::new(),
            extra: Map::new(),
        }
    }
}

impl State {
    pub fn system(details: UserDetails) -> Self {
        Payload::System(details).into()
    }

    pub fn user(text: impl Into<String>) -> Self {
        Payload::User(text.into()).into()
    }

    pub fn planner(step: PlannerStep) -> Self {
        Payload::Planner(step).into()
    }

    pub fn caller(call: ToolCall) -> Self {
        Payload::Caller(call).into()
    }

    pub fn observation(result: Value) -> Self {
        Payload::Observation(result).into()
    }

    pub fn kind(&self) -> StateKind {
        match self.payload {
            Payload::System(_) => StateKind::System,
            Payload::User(_) => StateKind::User,
            Payload::Planner(_) => StateKind::Planner,
            Payload::Caller(_) => StateKind::Caller,
            Payload::Observation(_) => StateKind::Observation,
        }
    }

    pub fn as_planner(&self) -> Option<&PlannerStep> {
        match &self.payload {
            Payload::Planner(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_caller(&self) -> Option<&ToolCall> {
        match &self.payload {
            Payload::Caller(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_observation(&self) -> Option<&Value> {
        match &self.payload {
            Payload::Observation(v) => Some(v),
            _ => None,
        }
    }

    pub fn from_value(index: usize, v: &Value) -> Result<Self, TrajectoryError> {
        let obj = v
            .as_object()
            .ok_or_else(|| TrajectoryError::schema(index, "state must be an object"))?;
        let from = obj
            .get("from")
            .ok_or_else(|| TrajectoryError::schema(index, "missing `from`"))?
            .as_str()
            .ok_or_else(|| TrajectoryError::schema(index, "`from` must be a string"))?;
        let kind: StateKind = from.parse().map_err(|_| {
            TrajectoryError::schema(index, format!("unknown state kind `{from}`"))
        })?;
        let value = obj
            .get("value")
            .ok_or_else(|| TrajectoryError::schema(index, "missing `value`"))?;
        let extra = without_keys(obj, &["from", "value"]);

        let value_obj = |what: &str| {
            value
                .as_object()
                .ok_or_else(|| TrajectoryError::schema(index, format!("{what} value must be an object")))
        };
        let (payload, value_extra) = match kind {
            StateKind::System => {
                let o = value_obj("system")?;
                let details = o
                    .get("user_details")
                    .ok_or_else(|| TrajectoryError::schema(index, "missing user_details"))?;
                (
                    Payload::System(UserDetails::from_value(index, details)?),
                    without_keys(o, &["user_details"]),
                )
            }
            StateKind::User => {
                let text = value
                    .as_str()
                    .ok_or_else(|| TrajectoryError::schema(index, "user value must be a string"))?;
                (Payload::User(text.to_string()), Map::new())
            }
            StateKind::Planner => {
                let o = value_obj("planner")?;
                let text = |k: &str| -> Result<String, TrajectoryError> {
                    let s = o
                        .get(k)
                        .and_then(Value::as_str)
                        .ok_or_else(|| TrajectoryError::schema(index, format!("planner `{k}` missing")))?;
                    if s.trim().is_empty() {
                        return Err(TrajectoryError::schema(index, format!("planner `{k}` is empty")));
                    }
                    Ok(s.to_string())
                };
                (
                    Payload::Planner(PlannerStep::new(text("reason")?, text("action")?)),
                    without_keys(o, &["reason", "action"]),
                )
            }
            StateKind::Caller => {
                let o = value_obj("caller")?;
                let tool = o
                    .get("tool")
                    .and_then(Value::as_str)
                    .filter(|t| is_identifier(t))
                    .ok_or_else(|| TrajectoryError::schema(index, "caller `tool` must be an identifier"))?;
                let parameters = match o.get("parameters") {
                    Some(Value::Object(p)) => p.clone(),
                    Some(Value::Null) | None => Map::new(),
                    Some(_) => {
                        return Err(TrajectoryError::schema(index, "caller `parameters` must be an object"))
                    }
                };
                (
                    Payload::Caller(ToolCall {
                        tool: tool.to_string(),
                        parameters,
                    }),
                    without_keys(o, &["tool", "parameters"]),
                )
            }
            StateKind::Observation => {
                let o = value_obj("observation")?;
                let result = o
                    .get("result")
                    .ok_or_else(|| TrajectoryError::schema(index, "observation `result` missing"))?;
                (
                    Payload::Observation(result.clone()),
                    without_keys(o, &["result"]),
                )
            }
        };
        Ok(Self {
            payload,
            value_extra,
            extra,
        })
    }

    pub fn to_value(&self) -> Value {
        let mut value = Map::new();
        let inner = match &self.payload {
            Payload::System(d) => {
                value.insert("user_details".into(), d.to_value());
                None
            }
            Payload::User(text) => Some(Value::String(text.clone())),
            Payload::Planner(p) => {
                value.insert("reason".into(), Value::String(p.reason.clone()));
                value.insert("action".into(), Value::String(p.action.clone()));
                None
            }
            Payload::Caller(c) => {
                value.insert("tool".into(), Value::String(c.tool.clone()));
                value.insert("parameters".into(), Value::Object(c.parameters.clone()));
                None
            }
            Payload::Observation(r) => {
                value.insert("result".into(), r.clone());
                None
            }
        };
        let value = inner.unwrap_or_else(|| {
            value.extend(self.value_extra.clone());
            Value::Object(value)
        });
        let mut m = Map::new();
        m.insert("from".into(), Value::String(self.kind().to_string()));
        m.insert("value".into(), value);
        m.extend(self.extra.clone());
        Value::Object(m)
    }
}

fn without_keys(obj: &Map<String, Value>, keys: &[&str]) -> Map<String, Value> {
    obj.iter()
        .filter(|(k, _)| !keys.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Require an observation after every caller state. Off for corpus
    /// ingestion (the reference soft-SOS episode skips one), on for
    /// generated data.
    pub strict: bool,
}

impl ParseOptions {
    pub const STRICT: ParseOptions = ParseOptions { strict: true };
}

/// An ordered episode. The states always satisfy the adjacency grammar
/// checked by [`check_ordering`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub states: Vec<State>,
    /// Unrecognized top-level document keys.
    pub extra: Map<String, Value>,
}

impl Trajectory {
    pub fn new(details: UserDetails) -> Self {
        Self {
            states: vec![State::system(details)],
            extra: Map::new(),
        }
    }

    pub fn from_states(states: Vec<State>, opts: ParseOptions) -> Result<Self, TrajectoryError> {
        check_ordering(&states, opts)?;
        Ok(Self {
            states,
            extra: Map::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn push(&mut self, state: State) {
        self.states.push(state);
    }

    pub fn user_details(&self) -> Option<&UserDetails> {
        match self.states.first().map(|s| &s.payload) {
            Some(Payload::System(d)) => Some(d),
            _ => None,
        }
    }

    pub fn query(&self) -> Option<&str> {
        self.states.iter().find_map(|s| match &s.payload {
            Payload::User(t) => Some(t.as_str()),
            _ => None,
        })
    }

    pub fn planner_steps(&self) -> impl Iterator<Item = &PlannerStep> {
        self.states.iter().filter_map(State::as_planner)
    }

    pub fn calls(&self) -> impl Iterator<Item = &ToolCall> {
        self.states.iter().filter_map(State::as_caller)
    }

    pub fn count(&self, kind: StateKind) -> usize {
        self.states.iter().filter(|s| s.kind() == kind).count()
    }

    /// True when the last state is a planner `<END>`.
    pub fn is_complete(&self) -> bool {
        self.states
            .last()
            .and_then(State::as_planner)
            .is_some_and(PlannerStep::is_terminal)
    }

    pub fn last_kind(&self) -> Option<StateKind> {
        self.states.last().map(State::kind)
    }

    /// Pairs each caller with the observation that follows it, if any.
    pub fn call_observations(&self) -> Vec<(&ToolCall, Option<&Value>)> {
        let mut out = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            if let Some(call) = s.as_caller() {
                let obs = self.states.get(i + 1).and_then(State::as_observation);
                out.push((call, obs));
            }
        }
        out
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert(
            "interaction_trajectory".into(),
            Value::Array(self.states.iter().map(State::to_value).collect()),
        );
        m.extend(self.extra.clone());
        Value::Object(m)
    }

    pub fn from_value(v: &Value, opts: ParseOptions) -> Result<Self, TrajectoryError> {
        let (list, extra) = match v {
            Value::Array(list) => (list, Map::new()),
            Value::Object(obj) => {
                let list = obj
                    .get("interaction_trajectory")
                    .ok_or_else(|| TrajectoryError::schema(None, "missing `interaction_trajectory`"))?
                    .as_array()
                    .ok_or_else(|| {
                        TrajectoryError::schema(None, "`interaction_trajectory` must be a list")
                    })?;
                (list, without_keys(obj, &["interaction_trajectory"]))
            }
            _ => {
                return Err(TrajectoryError::schema(
                    None,
                    "document must be an object or a list of states",
                ))
            }
        };
        let states = list
            .iter()
            .enumerate()
            .map(|(i, s)| State::from_value(i, s))
            .collect::<Result<Vec<_>, _>>()?;
        check_ordering(&states, opts)?;
        Ok(Self { states, extra })
    }
}

/// Checks the adjacency grammar: `system (user)? planner`, `planner ->
/// caller`, `caller -> observation` (or `planner` when not strict),
/// `observation -> planner`, with `<END>` only as the final state.
/// Trailing planner or caller states are allowed: they are in-flight
/// episodes.
pub fn check_ordering(states: &[State], opts: ParseOptions) -> Result<(), TrajectoryError> {
    let Some(first) = states.first() else {
        return Err(TrajectoryError::schema(None, "trajectory has no states"));
    };
    if first.kind() != StateKind::System {
        return Err(TrajectoryError::InvalidSequence {
            index: 0,
            message: format!("first state must be `system`, found `{}`", first.kind()),
        });
    }
    for (i, pair) in states.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        let index = i + 1;
        if let Some(p) = prev.as_planner() {
            if p.is_terminal() {
                return Err(TrajectoryError::InvalidSequence {
                    index,
                    message: "`<END>` must be the final state".into(),
                });
            }
        }
        if !adjacency_allowed(prev.kind(), next.kind(), index, opts) {
            return Err(TrajectoryError::OrderingViolation {
                index,
                previous: prev.kind(),
                found: next.kind(),
            });
        }
    }
    Ok(())
}

/// Legal `(previous, next)` kind pairs; `index` is the position of `next`.
pub fn adjacency_allowed(prev: StateKind, next: StateKind, index: usize, opts: ParseOptions) -> bool {
    use StateKind::*;
    match (prev, next) {
        (System, User) => index == 1,
        (System, Planner) => true,
        (User, Planner) => true,
        (Planner, Caller) => true,
        (Caller, Observation) => true,
        (Caller, Planner) => !opts.strict,
        (Observation, Planner) => true,
        _ => false,
    }
}

pub fn parse_trajectory(text: &str) -> Result<Trajectory, TrajectoryError> {
    parse_trajectory_with(text, ParseOptions::default())
}

pub fn parse_trajectory_with(text: &str, opts: ParseOptions) -> Result<Trajectory, TrajectoryError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| TrajectoryError::MalformedDocument(e.to_string()))?;
    Trajectory::from_value(&value, opts)
}

/// Pretty document with two-space indentation, keys in canonical order.
pub fn serialize_trajectory(t: &Trajectory) -> String {
    let mut out = serde_json::to_string_pretty(&t.to_value()).expect("json values serialize");
    out.push('\n');
    out
}

/// Single-line document, for line-delimited corpora.
pub fn serialize_trajectory_line(t: &Trajectory) -> String {
    serde_json::to_string(&t.to_value()).expect("json values serialize")
}
