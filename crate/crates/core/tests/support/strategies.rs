//! Proptest strategies for episodes, planner steps and tool calls.

use medagent_core::trajectory::{PlannerStep, State, ToolCall, Trajectory, UserDetails, UserId};
use proptest::prelude::*;
use serde_json::{Map, Value};

pub fn text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9][A-Za-z0-9 ,.'()?!:/-]{0,60}[A-Za-z0-9.?!)]"
}

pub fn json_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(Value::from),
        "[ -~]{0,20}".prop_map(Value::String),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            prop::collection::btree_map("[a-z_]{1,8}", inner, 0..4)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

pub fn step() -> impl Strategy<Value = PlannerStep> {
    (text(), prop_oneof![4 => text(), 1 => Just("<END>".to_string())])
        .prop_map(|(r, a)| PlannerStep::new(r, a))
}

pub fn call() -> impl Strategy<Value = ToolCall> {
    ("[a-z][a-z_]{0,20}", prop::collection::btree_map("[a-z_]{1,10}", json_value(), 0..5)).prop_map(
        |(tool, params)| ToolCall { tool, parameters: params.into_iter().collect::<Map<String, Value>>() },
    )
}

pub fn details() -> impl Strategy<Value = UserDetails> {
    ("[A-Z]{4}[0-9]{6}", "[A-Z][a-z]{1,8} [A-Z][a-z]{1,8}", 0i64..2_000_000_000).prop_map(|(id, name, secs)| {
        let ts = chrono::DateTime::from_timestamp(secs, 0).unwrap().naive_utc();
        UserDetails::new(UserId::parse(&id).unwrap(), name, ts)
    })
}

/// Episodes that follow the adjacency grammar: an optional query, then
/// rounds of planner, caller and (usually) an observation, optionally
/// closed by `<END>`.
pub fn trajectory() -> impl Strategy<Value = Trajectory> {
    let round = (step(), call(), prop::option::weighted(0.9, json_value()));
    (details(), prop::option::of(text()), prop::collection::vec(round, 0..6), prop::option::of(text())).prop_map(
        |(d, query, rounds, end)| {
            let mut t = Trajectory::new(d);
            if let Some(q) = query {
                t.push(State::user(q));
            }
            for (mut s, c, obs) in rounds {
                if s.is_terminal() {
                    s.action = "Continue.".into();
                }
                t.push(State::planner(s));
                t.push(State::caller(c));
                if let Some(o) = obs {
                    t.push(State::observation(o));
                }
            }
            if let Some(reason) = end {
                t.push(State::planner(PlannerStep::end(reason)));
            }
            t
        },
    )
}
