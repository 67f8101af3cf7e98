//! Single-file, append-only long-term store.
//!
//! Every write appends one JSON line to a journal; opening a store replays
//! the journal. Records in immutable collections never change after the
//! write is acknowledged; reminders, sessions and profiles accept body
//! updates, which are journaled as separate lines.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::entities::{symptom_keys, EntityExtractor, RuleBasedExtractor};
use crate::calendar::{format_date, Slot};
use crate::trajectory::format_timestamp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("symptoms must not be empty")]
    EmptySymptoms,
    #[error("record {0} not found")]
    NotFound(u64),
    #[error("records in `{0:?}` are immutable")]
    Immutable(Collection),
    #[error("record id {0} already exists")]
    DuplicateId(u64),
    #[error("corrupt record at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for MemoryError {
    fn from(e: std::io::Error) -> Self {
        MemoryError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collection {
    Profiles,
    Symptoms,
    Appointments,
    Reports,
    Reminders,
    Vitals,
    Alerts,
    Sessions,
}

impl Collection {
    pub fn is_mutable(self) -> bool {
        matches!(self, Collection::Profiles | Collection::Reminders | Collection::Sessions)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: u64,
    pub collection: Collection,
    pub user_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    pub body: Value,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum JournalEntry {
    Put { record: Record },
    Update { id: u64, body: Value },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PastComplaint {
    pub date: NaiveDate,
    pub symptoms: String,
}

impl PastComplaint {
    pub fn to_observation(&self) -> Value {
        json!({"date": format_date(self.date), "symptoms": self.symptoms})
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppointmentRecord {
    pub specialist_id: String,
    pub symptoms: String,
    pub date: NaiveDate,
    pub time: crate::calendar::TimeRange,
}

impl AppointmentRecord {
    pub fn slot(&self) -> Slot {
        Slot::new(self.date, self.time)
    }
}

#[derive(Default)]
struct Tables {
    next_id: u64,
    records: BTreeMap<u64, Record>,
    users: BTreeSet<String>,
    journal: Option<BufWriter<File>>,
}

impl Tables {
    fn apply(&mut self, entry: JournalEntry) -> Result<(), MemoryError> {
        match entry {
            JournalEntry::Put { record } => {
                if self.records.contains_key(&record.id) {
                    return Err(MemoryError::DuplicateId(record.id));
                }
                if record.collection == Collection::Profiles {
                    self.users.insert(record.user_id.clone());
                }
                self.next_id = self.next_id.max(record.id + 1);
                self.records.insert(record.id, record);
            }
            JournalEntry::Update { id, body } => {
                let rec = self.records.get_mut(&id).ok_or(MemoryError::NotFound(id))?;
                if !rec.collection.is_mutable() {
                    return Err(MemoryError::Immutable(rec.collection));
                }
                rec.body = body;
            }
        }
        Ok(())
    }

    fn append(&mut self, entry: &JournalEntry) -> Result<(), MemoryError> {
        if let Some(j) = self.journal.as_mut() {
            serde_json::to_writer(&mut *j, entry).map_err(|e| MemoryError::Io(e.to_string()))?;
            j.write_all(b"\n")?;
            j.flush()?;
        }
        Ok(())
    }

    fn put(
        &mut self,
        collection: Collection,
        user_id: &str,
        date: Option<NaiveDate>,
        body: Value,
    ) -> Result<u64, MemoryError> {
        let record = Record {
            id: self.next_id,
            collection,
            user_id: user_id.to_string(),
            date,
            body,
        };
        let id = record.id;
        let entry = JournalEntry::Put { record };
        self.append(&entry)?;
        self.apply(entry)?;
        Ok(id)
    }

    fn update(&mut self, id: u64, body: Value) -> Result<(), MemoryError> {
        let rec = self.records.get(&id).ok_or(MemoryError::NotFound(id))?;
        if !rec.collection.is_mutable() {
            return Err(MemoryError::Immutable(rec.collection));
        }
        let entry = JournalEntry::Update { id, body };
        self.append(&entry)?;
        self.apply(entry)
    }
}

/// Cheap-to-clone handle; clones share the same underlying store. Many
/// readers may proceed concurrently; writes are serialized.
#[derive(Clone)]
pub struct MemoryStore {
    tables: Arc<RwLock<Tables>>,
    path: Option<Arc<PathBuf>>,
}

impl std::fmt::Debug for MemoryStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MemoryStore")
            .field("path", &self.path)
            .field("records", &self.read().records.len())
            .finish()
    }
}

impl Default for MemoryStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl MemoryStore {
    pub fn in_memory() -> Self {
        Self {
            tables: Arc::new(RwLock::new(Tables::default())),
            path: None,
        }
    }

    /// Opens (or creates) a journal file and replays it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, MemoryError> {
        let path = path.as_ref().to_path_buf();
        let mut tables = Tables::default();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: JournalEntry =
                    serde_json::from_str(&line).map_err(|e| MemoryError::Corrupt {
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                tables.apply(entry).map_err(|e| MemoryError::Corrupt {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        tables.journal = Some(BufWriter::new(file));
        Ok(Self {
            tables: Arc::new(RwLock::new(tables)),
            path: Some(Arc::new(path)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref().map(PathBuf::as_path)
    }

    fn read(&self) -> RwLockReadGuard<'_, Tables> {
        self.tables.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Tables> {
        self.tables.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Independent in-memory copy of the current contents.
    pub fn fork(&self) -> MemoryStore {
        let t = self.read();
        let copy = Tables {
            next_id: t.next_id,
            records: t.records.clone(),
            users: t.users.clone(),
            journal: None,
        };
        MemoryStore {
            tables: Arc::new(RwLock::new(copy)),
            path: None,
        }
    }

    pub fn records(&self) -> Vec<Record> {
        self.read().records.values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.read().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.read().records.is_empty()
    }

    pub fn put(
        &self,
        collection: Collection,
        user_id: &str,
        date: Option<NaiveDate>,
        body: Value,
    ) -> Result<u64, MemoryError> {
        self.write().put(collection, user_id, date, body)
    }

    pub fn update(&self, id: u64, body: Value) -> Result<(), MemoryError> {
        self.write().update(id, body)
    }

    pub fn get(&self, id: u64) -> Option<Record> {
        self.read().records.get(&id).cloned()
    }

    /// Records of one collection in id order, optionally restricted to a
    /// user and an inclusive date range.
    pub fn scan(
        &self,
        collection: Collection,
        user_id: Option<&str>,
        dates: Option<RangeInclusive<NaiveDate>>,
    ) -> Vec<Record> {
        self.read()
            .records
            .values()
            .filter(|r| r.collection == collection)
            .filter(|r| user_id.is_none_or(|u| r.user_id == u))
            .filter(|r| match (&dates, r.date) {
                (None, _) => true,
                (Some(range), Some(d)) => range.contains(&d),
                (Some(_), None) => false,
            })
            .cloned()
            .collect()
    }

    /// Applies `f` to every matching mutable record under one write lock and
    /// returns the records `f` changed (after the change).
    pub fn modify_where<F>(
        &self,
        collection: Collection,
        user_id: Option<&str>,
        mut f: F,
    ) -> Result<Vec<Record>, MemoryError>
    where
        F: FnMut(&Record) -> Option<Value>,
    {
        if !collection.is_mutable() {
            return Err(MemoryError::Immutable(collection));
        }
        let mut t = self.write();
        let updates: Vec<(u64, Value)> = t
            .records
            .values()
            .filter(|r| r.collection == collection)
            .filter(|r| user_id.is_none_or(|u| r.user_id == u))
            .filter_map(|r| f(r).map(|b| (r.id, b)))
            .collect();
        let mut changed = Vec::with_capacity(updates.len());
        for (id, body) in updates {
            t.update(id, body)?;
            changed.push(t.records[&id].clone());
        }
        Ok(changed)
    }

    pub fn has_user(&self, user_id: &str) -> bool {
        self.read().users.contains(user_id)
    }

    pub fn users(&self) -> Vec<String> {
        self.read().users.iter().cloned().collect()
    }

    /// Registers or replaces a user profile.
    pub fn upsert_profile(&self, user_id: &str, profile: Value) -> Result<u64, MemoryError> {
        let mut t = self.write();
        let existing = t
            .records
            .values()
            .find(|r| r.collection == Collection::Profiles && r.user_id == user_id)
            .map(|r| r.id);
        match existing {
            Some(id) => {
                t.update(id, profile)?;
                Ok(id)
            }
            None => t.put(Collection::Profiles, user_id, None, profile),
        }
    }

    pub fn profile(&self, user_id: &str) -> Option<Value> {
        self.scan(Collection::Profiles, Some(user_id), None)
            .into_iter()
            .next()
            .map(|r| r.body)
    }

    fn require_user(&self, user_id: &str) -> Result<(), MemoryError> {
        if self.has_user(user_id) {
            Ok(())
        } else {
            Err(MemoryError::UnknownUser(user_id.to_string()))
        }
    }

    pub fn store_symptom_record(
        &self,
        user_id: &str,
        symptoms: &str,
        timestamp: NaiveDateTime,
    ) -> Result<u64, MemoryError> {
        self.require_user(user_id)?;
        if symptoms.trim().is_empty() {
            return Err(MemoryError::EmptySymptoms);
        }
        self.put(
            Collection::Symptoms,
            user_id,
            Some(timestamp.date()),
            json!({"symptoms": symptoms, "timestamp": format_timestamp(&timestamp)}),
        )
    }

    /// Past complaint seeded with only a date (fixtures and imports).
    pub fn store_past_complaint(
        &self,
        user_id: &str,
        complaint: &PastComplaint,
    ) -> Result<u64, MemoryError> {
        self.require_user(user_id)?;
        if complaint.symptoms.trim().is_empty() {
            return Err(MemoryError::EmptySymptoms);
        }
        self.put(
            Collection::Symptoms,
            user_id,
            Some(complaint.date),
            json!({"symptoms": complaint.symptoms}),
        )
    }

    pub fn symptom_records(&self, user_id: &str) -> Vec<(u64, PastComplaint)> {
        self.scan(Collection::Symptoms, Some(user_id), None)
            .into_iter()
            .filter_map(|r| {
                let symptoms = r.body.get("symptoms")?.as_str()?.to_string();
                Some((r.id, PastComplaint { date: r.date?, symptoms }))
            })
            .collect()
    }

    pub fn query_past_complaints(
        &self,
        user_id: &str,
        symptoms: &str,
        dates: Option<RangeInclusive<NaiveDate>>,
    ) -> Vec<PastComplaint> {
        self.query_past_complaints_with(&RuleBasedExtractor::default(), user_id, symptoms, dates)
    }

    /// Records sharing at least one symptom entity with the query (or, when
    /// the query has none, one content word), ranked by overlap count and
    /// then recency.
    pub fn query_past_complaints_with(
        &self,
        extractor: &dyn EntityExtractor,
        user_id: &str,
        symptoms: &str,
        dates: Option<RangeInclusive<NaiveDate>>,
    ) -> Vec<PastComplaint> {
        let query_keys = symptom_keys(extractor, symptoms);
        let use_words = query_keys.is_empty();
        let query_keys = if use_words {
            super::entities::content_words(symptoms)
        } else {
            query_keys
        };
        if query_keys.is_empty() {
            return Vec::new();
        }
        let mut scored: Vec<(usize, NaiveDate, u64, PastComplaint)> = self
            .symptom_records(user_id)
            .into_iter()
            .filter(|(_, c)| dates.as_ref().is_none_or(|r| r.contains(&c.date)))
            .filter_map(|(id, c)| {
                let keys = if use_words {
                    super::entities::content_words(&c.symptoms)
                } else {
                    symptom_keys(extractor, &c.symptoms)
                };
                let overlap = keys.intersection(&query_keys).count();
                (overlap > 0).then_some((overlap, c.date, id, c))
            })
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2)));
        scored.into_iter().map(|(.., c)| c).collect()
    }

    pub fn save_appointment(
        &self,
        user_id: &str,
        appt: &AppointmentRecord,
    ) -> Result<u64, MemoryError> {
        self.require_user(user_id)?;
        let body = serde_json::to_value(appt).map_err(|e| MemoryError::Io(e.to_string()))?;
        self.put(Collection::Appointments, user_id, Some(appt.date), body)
    }

    pub fn appointment_history(&self, user_id: &str) -> Vec<AppointmentRecord> {
        self.scan(Collection::Appointments, Some(user_id), None)
            .into_iter()
            .filter_map(|r| serde_json::from_value(r.body).ok())
            .collect()
    }

    /// Line-delimited dump of every record.
    pub fn export_lines(&self) -> String {
        let mut out = String::new();
        for r in self.read().records.values() {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    /// Loads records produced by [`export_lines`](Self::export_lines),
    /// keeping their ids. Returns the number of records imported.
    pub fn import_lines(&self, text: &str) -> Result<usize, MemoryError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: Record = serde_json::from_str(line).map_err(|e| MemoryError::Corrupt {
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(r);
        }
        let mut t = self.write();
        if let Some(r) = records.iter().find(|r| t.records.contains_key(&r.id)) {
            return Err(MemoryError::DuplicateId(r.id));
        }
        let n = records.len();
        for record in records {
            let entry = JournalEntry::Put { record };
            t.append(&entry)?;
            t.apply(entry)?;
        }
        Ok(n)
    }
}
