use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::prescription::MedicationDirective;
use crate::memory::{Collection, MemoryError, MemoryStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReminderStatus {
    Pending,
    Fired,
    Dismissed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reminder {
    pub user_id: String,
    pub medicine_name: String,
    #[serde(default)]
    pub dose: String,
    pub fire_at: NaiveDateTime,
    pub status: ReminderStatus,
}

/// Stored reminder together with its record id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredReminder {
    pub id: u64,
    #[serde(flatten)]
    pub reminder: Reminder,
}

/// One pending reminder per dose per day, days `start..start + duration`.
pub fn directives_to_reminders(
    user_id: &str,
    ds: &[MedicationDirective],
    start: NaiveDate,
) -> Vec<Reminder> {
    let mut out = Vec::new();
    for d in ds {
        for day in 0..d.duration_days {
            let date = start + Duration::days(i64::from(day));
            for t in &d.times {
                out.push(Reminder {
                    user_id: user_id.to_string(),
                    medicine_name: d.medicine_name.clone(),
                    dose: d.dose.clone(),
                    fire_at: date.and_time(*t),
                    status: ReminderStatus::Pending,
                });
            }
        }
    }
    out.sort_by(|a, b| a.fire_at.cmp(&b.fire_at).then_with(|| a.medicine_name.cmp(&b.medicine_name)));
    out
}

fn decode(id: u64, body: &serde_json::Value) -> Option<StoredReminder> {
    serde_json::from_value(body.clone()).ok().map(|reminder| StoredReminder { id, reminder })
}

pub fn schedule_reminders(store: &MemoryStore, rs: &[Reminder]) -> Result<Vec<u64>, MemoryError> {
    rs.iter()
        .map(|r| {
            let body = serde_json::to_value(r).expect("reminder serializes");
            store.put(Collection::Reminders, &r.user_id, Some(r.fire_at.date()), body)
        })
        .collect()
}

pub fn reminders_for(store: &MemoryStore, user_id: Option<&str>) -> Vec<StoredReminder> {
    store
        .scan(Collection::Reminders, user_id, None)
        .iter()
        .filter_map(|r| decode(r.id, &r.body))
        .collect()
}

/// Pending reminders with `fire_at <= now`, flipped to fired under one write
/// lock so concurrent polls never return the same reminder twice.
pub fn due_reminders(
    now: NaiveDateTime,
    store: &MemoryStore,
    user_id: Option<&str>,
) -> Result<Vec<StoredReminder>, MemoryError> {
    let changed = store.modify_where(Collection::Reminders, user_id, |rec| {
        let mut r: Reminder = serde_json::from_value(rec.body.clone()).ok()?;
        if r.status != ReminderStatus::Pending || r.fire_at > now {
            return None;
        }
        r.status = ReminderStatus::Fired;
        Some(serde_json::to_value(r).expect("reminder serializes"))
    })?;
    Ok(changed.iter().filter_map(|r| decode(r.id, &r.body)).collect())
}

/// Marks a pending or fired reminder dismissed. Returns false when the id
/// is not a reminder or is already dismissed.
pub fn dismiss_reminder(store: &MemoryStore, id: u64) -> Result<bool, MemoryError> {
    let Some(rec) = store.get(id).filter(|r| r.collection == Collection::Reminders) else {
        return Ok(false);
    };
    let Some(mut s) = decode(rec.id, &rec.body) else { return Ok(false) };
    if s.reminder.status == ReminderStatus::Dismissed {
        return Ok(false);
    }
    s.reminder.status = ReminderStatus::Dismissed;
    store.update(id, serde_json::to_value(&s.reminder).expect("reminder serializes"))?;
    Ok(true)
}
