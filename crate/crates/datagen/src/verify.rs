//! Post-generation checks. A generated episode is kept only if it is
//! well-formed, every call validates, its dates are plausible relative to
//! the query date, and it actually exhibits its family's behaviour.

use std::sync::OnceLock;

use chrono::{Duration, NaiveDate};
use medagent_core::agent::answer_text;
use medagent_core::agent::rules::consent;
use medagent_core::calendar::{parse_date, Slot};
use medagent_core::goldens::Family;
use medagent_core::toolbox::{validate_call, ToolRegistry};
use medagent_core::trajectory::{check_ordering, ParseOptions, ToolCall, Trajectory};
use serde::Serialize;
use serde_json::Value;

use crate::config::DEFAULT_WINDOW_DAYS;
use crate::generate::{family_index, family_of};
use crate::template::UseCaseTemplate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Structure,
    InvalidCall,
    Temporal,
    Family,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Index of the offending state, when one can be singled out.
    pub state: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, state: Option<usize>, detail: impl Into<String>) {
        self.violations.push(Violation { kind, state, detail: detail.into() });
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub window_days: i64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { window_days: DEFAULT_WINDOW_DAYS }
    }
}

/// Verifies against the family recorded on the episode, if any.
pub fn verify(t: &Trajectory, reg: &ToolRegistry) -> VerificationReport {
    verify_as(t, reg, family_of(t), VerifyOptions::default())
}

pub fn verify_as(t: &Trajectory, reg: &ToolRegistry, family: Option<Family>, opts: VerifyOptions) -> VerificationReport {
    let mut r = VerificationReport::default();
    structure(t, &mut r);
    for (i, s) in t.states.iter().enumerate() {
        if let Some(call) = s.as_caller() {
            let v = validate_call(call, reg);
            if !v.is_valid() {
                r.push(ViolationKind::InvalidCall, Some(i), format!("{v:?}"));
            }
        }
    }
    if let Some(d) = t.user_details() {
        temporal(t, d.timestamp.date(), opts.window_days, &mut r);
    }
    consent_flow(t, &mut r);
    if let Some(f) = family {
        family_checks(t, f, &mut r);
    }
    r
}

fn structure(t: &Trajectory, r: &mut VerificationReport) {
    if let Err(e) = check_ordering(&t.states, ParseOptions::STRICT) {
        r.push(ViolationKind::Structure, None, e.to_string());
    }
    if !t.is_complete() {
        r.push(ViolationKind::Structure, None, "episode does not end with <END>");
    }
    if t.query().is_none() {
        r.push(ViolationKind::Structure, None, "episode has no user query");
    }
}

fn slot_of(call: &ToolCall) -> Option<Slot> {
    call.param_str("appointment_time_date").and_then(Slot::parse_call_format)
}

fn offered(obs: &Value) -> Option<(String, NaiveDate, String)> {
    let o = obs.get("available_slot")?;
    Some((
        obs.get("specialist_id")?.as_str()?.to_string(),
        parse_date(o.get("date")?.as_str()?)?,
        o.get("time")?.as_str()?.to_string(),
    ))
}

fn temporal(t: &Trajectory, today: NaiveDate, window: i64, r: &mut VerificationReport) {
    let upcoming = |d: NaiveDate| d > today && d <= today + Duration::days(window);
    for (i, s) in t.states.iter().enumerate() {
        if let Some(obs) = s.as_observation() {
            let call = i.checked_sub(1).and_then(|p| t.states[p].as_caller());
            match call.map(|c| c.tool.as_str()) {
                Some("retrieve_past_complaints") => {
                    for rec in obs.as_array().into_iter().flatten() {
                        match rec.get("date").and_then(Value::as_str).and_then(parse_date) {
                            Some(d) if d < today => {}
                            Some(d) => r.push(ViolationKind::Temporal, Some(i), format!("past complaint dated {d}")),
                            None => r.push(ViolationKind::Temporal, Some(i), "past complaint without a date"),
                        }
                    }
                }
                Some("get_available_specialists") => {
                    if let Some((_, d, _)) = offered(obs) {
                        if !upcoming(d) {
                            r.push(ViolationKind::Temporal, Some(i), format!("offered slot on {d} is outside the window"));
                        }
                    }
                }
                _ => {}
            }
        }
        if let Some(call) = s.as_caller() {
            if let Some(slot) = slot_of(call) {
                if !upcoming(slot.date) {
                    r.push(ViolationKind::Temporal, Some(i), format!("appointment on {} is outside the window", slot.date));
                }
            } else if call.param("appointment_time_date").is_some() {
                r.push(ViolationKind::Temporal, Some(i), "unreadable appointment_time_date");
            }
        }
    }
}

/// The most recent user answer before `upto`.
fn last_answer(t: &Trajectory, upto: usize) -> Option<&str> {
    (1..upto).rev().find_map(|i| {
        let asked = t.states[i - 1].as_caller().is_some_and(|c| c.tool == "get_input_from_user");
        if asked {
            t.states[i].as_observation().and_then(answer_text)
        } else {
            None
        }
    })
}

fn consent_flow(t: &Trajectory, r: &mut VerificationReport) {
    let mut offer: Option<(String, NaiveDate, String)> = None;
    for (i, s) in t.states.iter().enumerate() {
        if let Some(obs) = s.as_observation() {
            let searched = t.states[i - 1].as_caller().is_some_and(|c| c.tool == "get_available_specialists");
            if searched {
                offer = offered(obs);
            }
        }
        let Some(call) = s.as_caller().filter(|c| c.tool == "confirm_appointment") else {
            continue;
        };
        if !last_answer(t, i).is_some_and(consent) {
            r.push(ViolationKind::Family, Some(i), "appointment confirmed without the user's consent");
        }
        let matches = match (&offer, slot_of(call)) {
            (Some((id, date, time)), Some(slot)) => {
                call.param_str("specialist_id") == Some(id.as_str())
                    && slot.date == *date
                    && slot.time.to_string() == *time
            }
            _ => false,
        };
        if !matches {
            r.push(ViolationKind::Family, Some(i), "confirmed slot differs from the offered one");
        }
    }
}

fn reference_tools(family: Family) -> Vec<&'static str> {
    static CELL: OnceLock<Vec<Vec<String>>> = OnceLock::new();
    let all = CELL.get_or_init(|| {
        Family::ALL
            .iter()
            .map(|f| UseCaseTemplate::for_family(*f).tools().into_iter().map(String::from).collect())
            .collect()
    });
    all[family_index(family) as usize].iter().map(String::as_str).collect()
}

fn tools(t: &Trajectory) -> Vec<&str> {
    t.calls().map(|c| c.tool.as_str()).collect()
}

fn family_checks(t: &Trajectory, family: Family, r: &mut VerificationReport) {
    let used = tools(t);
    let pos = |name: &str| used.iter().position(|x| *x == name);
    match family {
        Family::Counter => {
            let asked = pos("get_input_from_user");
            let searched = pos("get_available_specialists");
            if !matches!((asked, searched), (Some(a), Some(s)) if a < s) {
                r.push(ViolationKind::Family, None, "counter episode never asks for details before searching");
            }
        }
        Family::Negative => {
            let declined = t
                .call_observations()
                .into_iter()
                .filter(|(c, _)| c.tool == "get_input_from_user")
                .filter_map(|(_, o)| o.and_then(answer_text))
                .any(|a| !consent(a));
            if !declined {
                r.push(ViolationKind::Family, None, "negative episode has no declining answer");
            }
            if pos("confirm_appointment").is_some() {
                r.push(ViolationKind::Family, None, "negative episode books an appointment");
            }
            if pos("store_symptoms").is_none() {
                r.push(ViolationKind::Family, None, "negative episode does not store symptoms");
            }
        }
        Family::Dietician => {
            let dietician = t.calls().any(|c| {
                c.tool == "get_available_specialists"
                    && c.param_str("specialization").is_some_and(|s| s.eq_ignore_ascii_case("dietician"))
            });
            if !dietician {
                r.push(ViolationKind::Family, None, "dietician episode never searches for a dietician");
            }
        }
        Family::General => {
            if pos("confirm_appointment").is_none() {
                r.push(ViolationKind::Family, None, "general episode books no appointment");
            }
        }
        Family::SoftSos | Family::HardSosStart | Family::HardSosEnd => {
            let expected = reference_tools(family);
            if used != expected {
                r.push(
                    ViolationKind::Family,
                    None,
                    format!("tool sequence {used:?} differs from {expected:?}"),
                );
            }
        }
    }
}
