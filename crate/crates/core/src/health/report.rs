use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::reminders::{Reminder, ReminderStatus};
use super::vitals::{Metric, VitalsSample};
use crate::agent::prompt::render_report_prompt;
use crate::agent::{PolicyBackend, Role};
use crate::calendar::format_date;
use crate::memory::AppointmentRecord;

/// A soft-SOS alert raised during the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub at: NaiveDateTime,
    pub metrics: Vec<Metric>,
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub query: String,
    /// `completed`, `suspended`, `exhausted` or `failed`.
    pub status: String,
    pub steps: usize,
}

/// Everything recorded for one user on one date.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DayData {
    pub user_id: String,
    pub date: Option<NaiveDate>,
    pub vitals: Vec<VitalsSample>,
    pub alerts: Vec<AlertEvent>,
    pub sessions: Vec<SessionSummary>,
    pub appointments: Vec<AppointmentRecord>,
    pub reminders: Vec<Reminder>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub count: usize,
    pub min: u32,
    pub max: u32,
    pub mean: f64,
}

impl MetricStats {
    pub fn from_values(values: &[u32]) -> Self {
        let (Some(&min), Some(&max)) = (values.iter().min(), values.iter().max()) else {
            return Self::default();
        };
        let sum: u64 = values.iter().map(|v| u64::from(*v)).sum();
        Self { count: values.len(), min, max, mean: sum as f64 / values.len() as f64 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adherence {
    pub scheduled: usize,
    pub fired: usize,
    pub dismissed: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyReport {
    pub user_id: String,
    pub date: NaiveDate,
    pub vitals: BTreeMap<Metric, MetricStats>,
    pub anomalies: Vec<AlertEvent>,
    pub sessions: Vec<SessionSummary>,
    pub appointments: Vec<AppointmentRecord>,
    pub reminders: Adherence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub narrative: Option<String>,
}

/// Builds the template report; a backend, when given, is asked for a short
/// narrative. Backend failures leave `narrative` empty.
pub fn generate_report(day: &DayData, date: NaiveDate, backend: Option<&dyn PolicyBackend>) -> DailyReport {
    let on_day = |t: &NaiveDateTime| t.date() == date;
    let samples: Vec<&VitalsSample> = day.vitals.iter().filter(|s| on_day(&s.timestamp)).collect();
    let vitals = Metric::ALL
        .into_iter()
        .map(|m| {
            let values: Vec<u32> = samples.iter().filter_map(|s| s.value(m)).collect();
            (m, MetricStats::from_values(&values))
        })
        .collect();
    let mut reminders = Adherence::default();
    for r in day.reminders.iter().filter(|r| on_day(&r.fire_at)) {
        reminders.scheduled += 1;
        match r.status {
            ReminderStatus::Pending => reminders.pending += 1,
            ReminderStatus::Fired => reminders.fired += 1,
            ReminderStatus::Dismissed => reminders.dismissed += 1,
        }
    }
    let mut report = DailyReport {
        user_id: day.user_id.clone(),
        date,
        vitals,
        anomalies: day.alerts.iter().filter(|a| on_day(&a.at)).cloned().collect(),
        sessions: day.sessions.clone(),
        appointments: day.appointments.iter().filter(|a| a.date == date).cloned().collect(),
        reminders,
        narrative: None,
    };
    if let Some(backend) = backend {
        let summary = serde_json::to_value(&report).unwrap_or(Value::Null);
        match backend.complete(&render_report_prompt(&summary), Role::Report) {
            Ok(text) if !text.trim().is_empty() => report.narrative = Some(text.trim().to_string()),
            Ok(_) => {}
            Err(e) => tracing::warn!(error = %e, "report narrative unavailable"),
        }
    }
    report
}

impl DailyReport {
    pub fn render_text(&self) -> String {
        let mut out = format!("Daily health report for {} on {}\n", self.user_id, format_date(self.date));
        out.push_str("\nVitals\n");
        for (m, s) in &self.vitals {
            if s.count == 0 {
                let _ = writeln!(out, "  {m}: no readings");
            } else {
                let _ = writeln!(out, "  {m}: min {} max {} mean {:.1} ({} readings)", s.min, s.max, s.mean, s.count);
            }
        }
        let _ = writeln!(out, "\nAlerts: {}", self.anomalies.len());
        for a in &self.anomalies {
            let names: Vec<&str> = a.metrics.iter().map(|m| m.as_str()).collect();
            let _ = writeln!(out, "  {} {}", a.at.format("%H:%M"), names.join(", "));
        }
        let _ = writeln!(out, "\nSessions: {}", self.sessions.len());
        for s in &self.sessions {
            let _ = writeln!(out, "  [{}] {} ({} steps)", s.status, s.query, s.steps);
        }
        let _ = writeln!(out, "\nAppointments: {}", self.appointments.len());
        for a in &self.appointments {
            let _ = writeln!(out, "  {} {} with {}", format_date(a.date), a.time, a.specialist_id);
        }
        let r = &self.reminders;
        let _ = writeln!(
            out,
            "\nReminders: {} scheduled, {} sent, {} dismissed, {} pending",
            r.scheduled, r.fired, r.dismissed, r.pending
        );
        if let Some(n) = &self.narrative {
            let _ = writeln!(out, "\n{n}");
        }
        out
    }
}
