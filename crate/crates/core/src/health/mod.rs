//! Vitals monitoring, prescription reminders and daily reports.

mod prescription;
mod reminders;
mod report;
mod vitals;

use chrono::{NaiveDate, NaiveDateTime};
use serde_json::{json, Value};

pub use prescription::{
    parse_line, parse_prescription, MedicationDirective, ParsedPrescription, PrescriptionError,
};
pub use reminders::{
    directives_to_reminders, dismiss_reminder, due_reminders, reminders_for, schedule_reminders,
    Reminder, ReminderStatus, StoredReminder,
};
pub use report::{
    generate_report, Adherence, AlertEvent, DailyReport, DayData, MetricStats, SessionSummary,
};
pub use vitals::{
    check_vitals, parse_soft_sos_query, soft_sos_alert, soft_sos_query, Abnormality, BloodPressure,
    Metric, MonitorDecision, QuotedVitals, Range, SleepMinutes, VitalsError, VitalsMonitor,
    VitalsSample, VitalsThresholds,
};

use crate::memory::{Collection, MemoryError, MemoryStore};

pub fn record_vitals(store: &MemoryStore, user_id: &str, s: &VitalsSample) -> Result<u64, MemoryError> {
    let body = serde_json::to_value(s).expect("sample serializes");
    store.put(Collection::Vitals, user_id, Some(s.timestamp.date()), body)
}

pub fn vitals_on(store: &MemoryStore, user_id: &str, date: NaiveDate) -> Vec<VitalsSample> {
    store
        .scan(Collection::Vitals, Some(user_id), Some(date..=date))
        .into_iter()
        .filter_map(|r| serde_json::from_value(r.body).ok())
        .collect()
}

pub fn record_alert(store: &MemoryStore, user_id: &str, alert: &AlertEvent) -> Result<u64, MemoryError> {
    let body = serde_json::to_value(alert).expect("alert serializes");
    store.put(Collection::Alerts, user_id, Some(alert.at.date()), body)
}

pub fn alerts_on(store: &MemoryStore, user_id: &str, date: NaiveDate) -> Vec<AlertEvent> {
    store
        .scan(Collection::Alerts, Some(user_id), Some(date..=date))
        .into_iter()
        .filter_map(|r| serde_json::from_value(r.body).ok())
        .collect()
}

pub fn save_report(store: &MemoryStore, report: &DailyReport) -> Result<u64, MemoryError> {
    let body = serde_json::to_value(report).expect("report serializes");
    store.put(Collection::Reports, &report.user_id, Some(report.date), body)
}

/// Session records carry `session_id`, `query`, `status` and `steps` in
/// their body; the record date is the day the session started.
pub fn session_record(
    session_id: &str,
    query: &str,
    status: &str,
    steps: usize,
    started: NaiveDateTime,
    trajectory: Value,
) -> Value {
    json!({
        "session_id": session_id,
        "query": query,
        "status": status,
        "steps": steps,
        "started": started,
        "trajectory": trajectory,
    })
}

/// Gathers one user's records for `date`.
pub fn collect_day(store: &MemoryStore, user_id: &str, date: NaiveDate) -> DayData {
    let sessions = store
        .scan(Collection::Sessions, Some(user_id), Some(date..=date))
        .into_iter()
        .filter_map(|r| {
            Some(SessionSummary {
                session_id: r.body.get("session_id")?.as_str()?.to_string(),
                query: r.body.get("query")?.as_str()?.to_string(),
                status: r.body.get("status")?.as_str()?.to_string(),
                steps: r.body.get("steps")?.as_u64()? as usize,
            })
        })
        .collect();
    DayData {
        user_id: user_id.to_string(),
        date: Some(date),
        vitals: vitals_on(store, user_id, date),
        alerts: alerts_on(store, user_id, date),
        sessions,
        appointments: store
            .appointment_history(user_id)
            .into_iter()
            .filter(|a| a.date == date)
            .collect(),
        reminders: reminders_for(store, Some(user_id))
            .into_iter()
            .map(|s| s.reminder)
            .filter(|r| r.fire_at.date() == date)
            .collect(),
    }
}
