//! Deterministic simulated backends for every registered tool.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::registry::{load_default_registry, ToolRegistry};
use super::validate::{normalize_call, validate_call};
use super::{SmsGateway, ToolError};
use crate::calendar::{format_date, parse_date, Slot, TimeRange};
use crate::memory::{AppointmentRecord, MemoryError, MemoryStore, PastComplaint};
use crate::trajectory::{parse_timestamp, ToolCall, Trajectory};

pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Self {
        Self { latitude, longitude }
    }

    fn from_value(v: &Value) -> Option<Self> {
        Some(Self {
            latitude: v.get("latitude")?.as_f64()?,
            longitude: v.get("longitude")?.as_f64()?,
        })
    }

    pub fn to_value(self) -> Value {
        json!({"latitude": self.latitude, "longitude": self.longitude})
    }

    /// Great-circle distance in kilometres.
    pub fn distance_km(self, other: GeoPoint) -> f64 {
        let (la1, la2) = (self.latitude.to_radians(), other.latitude.to_radians());
        let dla = la2 - la1;
        let dlo = (other.longitude - self.longitude).to_radians();
        let a = (dla / 2.0).sin().powi(2) + la1.cos() * la2.cos() * (dlo / 2.0).sin().powi(2);
        2.0 * 6371.0 * a.sqrt().min(1.0).asin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phone_no: Option<String>,
    pub location: GeoPoint,
    #[serde(default)]
    pub emergency_contacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Specialist {
    pub specialist_id: String,
    pub name: String,
    pub specialization: String,
    pub slots: Vec<Slot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ambulance {
    pub ambulance_id: String,
    pub phone_no: String,
    pub location: GeoPoint,
}

impl Ambulance {
    fn to_value(&self) -> Value {
        json!({"ambulance_id": self.ambulance_id, "phone_no": self.phone_no})
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageEntry {
    pub user_id: String,
    pub phone_no: String,
    pub text: String,
    pub at: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotificationEntry {
    pub user_id: String,
    pub message: String,
    pub at: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Booking {
    pub user_id: String,
    pub specialist_id: String,
    pub slot: Slot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallContext {
    /// The session's user; tools without a `user_id` parameter act for them.
    pub user_id: String,
    pub now: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecOutcome {
    /// The `result` payload of the observation.
    Observation(Value),
    /// `get_input_from_user` parked a question; the session must suspend.
    AwaitUser { question: String },
}

pub struct World {
    registry: ToolRegistry,
    users: BTreeMap<String, UserProfile>,
    specialists: BTreeMap<String, Specialist>,
    ambulances: BTreeMap<String, Ambulance>,
    assignments: BTreeMap<String, String>,
    bookings: Vec<Booking>,
    messages: Vec<MessageEntry>,
    notifications: Vec<NotificationEntry>,
    pending_questions: BTreeMap<String, String>,
    scripted_answers: VecDeque<Value>,
    clock: NaiveDateTime,
    memory: MemoryStore,
    sms: Option<Arc<dyn SmsGateway>>,
    top_k: usize,
}

impl fmt::Debug for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("World")
            .field("users", &self.users.len())
            .field("specialists", &self.specialists.len())
            .field("ambulances", &self.ambulances.len())
            .field("bookings", &self.bookings.len())
            .field("messages", &self.messages.len())
            .field("clock", &self.clock)
            .finish()
    }
}

/// Deep copy: the clone gets its own fork of the memory store.
impl Clone for World {
    fn clone(&self) -> Self {
        Self {
            registry: self.registry.clone(),
            users: self.users.clone(),
            specialists: self.specialists.clone(),
            ambulances: self.ambulances.clone(),
            assignments: self.assignments.clone(),
            bookings: self.bookings.clone(),
            messages: self.messages.clone(),
            notifications: self.notifications.clone(),
            pending_questions: self.pending_questions.clone(),
            scripted_answers: self.scripted_answers.clone(),
            clock: self.clock,
            memory: self.memory.fork(),
            sms: self.sms.clone(),
            top_k: self.top_k,
        }
    }
}

const PLACEHOLDER_CONTACT: &str = "+15550000001";

impl World {
    pub fn new(clock: NaiveDateTime, memory: MemoryStore) -> Self {
        Self {
            registry: load_default_registry(),
            users: BTreeMap::new(),
            specialists: BTreeMap::new(),
            ambulances: BTreeMap::new(),
            assignments: BTreeMap::new(),
            bookings: Vec::new(),
            messages: Vec::new(),
            notifications: Vec::new(),
            pending_questions: BTreeMap::new(),
            scripted_answers: VecDeque::new(),
            clock,
            memory,
            sms: None,
            top_k: DEFAULT_TOP_K,
        }
    }

    pub fn with_sms(mut self, sms: Arc<dyn SmsGateway>) -> Self {
        self.sms = Some(sms);
        self
    }

    pub fn with_registry(mut self, registry: ToolRegistry) -> Self {
        self.registry = registry;
        self
    }

    pub fn registry(&self) -> &ToolRegistry {
        &self.registry
    }

    pub fn memory(&self) -> &MemoryStore {
        &self.memory
    }

    pub fn clock(&self) -> NaiveDateTime {
        self.clock
    }

    pub fn set_clock(&mut self, now: NaiveDateTime) {
        self.clock = now;
    }

    pub fn set_top_k(&mut self, k: usize) {
        self.top_k = k.max(1);
    }

    /// Registers a user here and in the long-term store.
    pub fn add_user(&mut self, profile: UserProfile) -> Result<(), MemoryError> {
        let body = json!({
            "user_id": profile.user_id,
            "name": profile.name,
            "phone_no": profile.phone_no,
            "emergency_contacts": profile.emergency_contacts,
        });
        self.memory.upsert_profile(&profile.user_id, body)?;
        self.users.insert(profile.user_id.clone(), profile);
        Ok(())
    }

    pub fn user(&self, user_id: &str) -> Option<&UserProfile> {
        self.users.get(user_id)
    }

    pub fn users(&self) -> impl Iterator<Item = &UserProfile> {
        self.users.values()
    }

    /// Adds a specialist, or merges slots into an existing one.
    pub fn add_specialist(&mut self, s: Specialist) {
        match self.specialists.get_mut(&s.specialist_id) {
            Some(existing) => {
                for slot in s.slots {
                    if !existing.slots.contains(&slot) {
                        existing.slots.push(slot);
                    }
                }
            }
            None => {
                self.specialists.insert(s.specialist_id.clone(), s);
            }
        }
    }

    pub fn add_ambulance(&mut self, a: Ambulance) {
        self.ambulances.insert(a.ambulance_id.clone(), a);
    }

    pub fn assign_ambulance(&mut self, user_id: &str, ambulance_id: &str) {
        self.assignments.insert(user_id.to_string(), ambulance_id.to_string());
    }

    pub fn assigned_ambulance(&self, user_id: &str) -> Option<&Ambulance> {
        self.assignments.get(user_id).and_then(|id| self.ambulances.get(id))
    }

    /// Ends the user's active SOS; the ambulance becomes available again.
    pub fn release_ambulance(&mut self, user_id: &str) -> Option<Ambulance> {
        let id = self.assignments.remove(user_id)?;
        self.ambulances.get(&id).cloned()
    }

    pub fn bookings(&self) -> &[Booking] {
        &self.bookings
    }

    pub fn messages(&self) -> &[MessageEntry] {
        &self.messages
    }

    pub fn notifications(&self) -> &[NotificationEntry] {
        &self.notifications
    }

    pub fn pending_question(&self, user_id: &str) -> Option<&str> {
        self.pending_questions.get(user_id).map(String::as_str)
    }

    /// Clears the parked question; returns it if there was one.
    pub fn take_pending_question(&mut self, user_id: &str) -> Option<String> {
        self.pending_questions.remove(user_id)
    }

    /// Queues an answer consumed by the next `get_input_from_user`, which
    /// then returns immediately instead of suspending.
    pub fn push_user_answer(&mut self, answer: impl Into<Value>) {
        self.scripted_answers.push_back(answer.into());
    }

    pub fn execute(&mut self, call: &ToolCall, ctx: &CallContext) -> Result<ExecOutcome, ToolError> {
        if self.registry.lookup(&call.tool).is_none() {
            return Err(ToolError::UnknownTool(call.tool.clone()));
        }
        let report = validate_call(call, &self.registry);
        if !report.is_valid() {
            return Err(ToolError::invalid(&call.tool, report.describe()));
        }
        let call = normalize_call(call, &self.registry);
        let obs = |v: Value| Ok(ExecOutcome::Observation(v));
        let tool = call.tool.as_str();
        match tool {
            "get_location" => {
                let user = self.known_user(tool, &ctx.user_id)?;
                obs(user.location.to_value())
            }
            "search_ambulance" => self.search_ambulance(&call, ctx).map(ExecOutcome::Observation),
            "get_assigned_ambulance" => {
                let uid = str_param(&call, "user_id")?;
                self.known_user(tool, uid)?;
                let amb = self
                    .assigned_ambulance(uid)
                    .ok_or_else(|| ToolError::invalid(tool, format!("no active SOS for user {uid}")))?;
                obs(amb.to_value())
            }
            "send_message" => self.send_message(&call, ctx).map(ExecOutcome::Observation),
            "get_available_specialists" => {
                self.search_specialists(&call, ctx).map(ExecOutcome::Observation)
            }
            "confirm_appointment" => self.confirm_appointment(&call).map(ExecOutcome::Observation),
            "save_appointment_history" => {
                let uid = str_param(&call, "user_id")?;
                self.known_user(tool, uid)?;
                let slot = slot_param(&call)?;
                let record = AppointmentRecord {
                    specialist_id: str_param(&call, "specialist_id")?.to_string(),
                    symptoms: str_param(&call, "symptoms")?.to_string(),
                    date: slot.date,
                    time: slot.time,
                };
                self.memory
                    .save_appointment(uid, &record)
                    .map_err(|e| ToolError::invalid(tool, e.to_string()))?;
                obs(Value::Bool(true))
            }
            "get_appointment_history" => {
                let uid = str_param(&call, "user_id")?;
                self.known_user(tool, uid)?;
                let list = self
                    .memory
                    .appointment_history(uid)
                    .into_iter()
                    .map(|a| {
                        json!({
                            "specialist_id": a.specialist_id,
                            "symptoms": a.symptoms,
                            "date": format_date(a.date),
                            "time": a.time.to_string(),
                        })
                    })
                    .collect();
                obs(Value::Array(list))
            }
            "retrieve_past_complaints" => {
                let uid = str_param(&call, "user_id")?;
                self.known_user(tool, uid)?;
                let range = match call.param("date_range") {
                    None | Some(Value::Null) => None,
                    Some(v) => Some(date_range(v).ok_or_else(|| {
                        ToolError::invalid(tool, "date_range needs `start` and `end` dates")
                    })?),
                };
                let found = self
                    .memory
                    .query_past_complaints(uid, str_param(&call, "symptoms")?, range);
                obs(Value::Array(
                    found.iter().take(self.top_k).map(PastComplaint::to_observation).collect(),
                ))
            }
            "store_symptoms" => {
                let uid = str_param(&call, "user_id")?;
                self.known_user(tool, uid)?;
                let raw = call.param_str("timestamp").unwrap_or_default();
                let ts = parse_timestamp(raw)
                    .or_else(|| parse_date(raw).and_then(|d| d.and_hms_opt(0, 0, 0)))
                    .ok_or_else(|| ToolError::invalid(tool, format!("bad timestamp `{raw}`")))?;
                self.memory
                    .store_symptom_record(uid, str_param(&call, "symptoms")?, ts)
                    .map_err(|e| ToolError::invalid(tool, e.to_string()))?;
                obs(Value::Bool(true))
            }
            "follow_up_with_user" => {
                let uid = str_param(&call, "user_id")?;
                self.known_user(tool, uid)?;
                let method = call
                    .param_str("preferred_contact_method")
                    .unwrap_or("app notification");
                let when = ctx.now + Duration::days(3);
                obs(json!({
                    "user_id": uid,
                    "method": method,
                    "scheduled_for": format_date(when.date()),
                    "next_steps": format!(
                        "Check in on: {}",
                        str_param(&call, "current_symptoms")?
                    ),
                }))
            }
            "notify_user" => {
                let uid = str_param(&call, "user_id")?;
                self.known_user(tool, uid)?;
                self.notifications.push(NotificationEntry {
                    user_id: uid.to_string(),
                    message: str_param(&call, "message")?.to_string(),
                    at: ctx.now,
                });
                obs(Value::Bool(true))
            }
            "get_input_from_user" => {
                let uid = str_param(&call, "user_id")?;
                self.known_user(tool, uid)?;
                let question = str_param(&call, "questions")?.to_string();
                match self.scripted_answers.pop_front() {
                    Some(answer) => obs(answer),
                    None => {
                        self.pending_questions.insert(uid.to_string(), question.clone());
                        Ok(ExecOutcome::AwaitUser { question })
                    }
                }
            }
            other => Err(ToolError::UnknownTool(other.to_string())),
        }
    }

    fn known_user(&self, tool: &str, user_id: &str) -> Result<&UserProfile, ToolError> {
        self.users
            .get(user_id)
            .ok_or_else(|| ToolError::invalid(tool, format!("unknown user {user_id}")))
    }

    fn search_ambulance(&mut self, call: &ToolCall, ctx: &CallContext) -> Result<Value, ToolError> {
        let tool = "search_ambulance";
        self.known_user(tool, &ctx.user_id)?;
        if let Some(a) = self.assigned_ambulance(&ctx.user_id) {
            return Ok(a.to_value());
        }
        let here = call
            .param("location")
            .and_then(GeoPoint::from_value)
            .ok_or_else(|| ToolError::invalid(tool, "location needs numeric latitude and longitude"))?;
        let taken: Vec<&String> = self.assignments.values().collect();
        let best = self
            .ambulances
            .values()
            .filter(|a| !taken.contains(&&a.ambulance_id))
            .min_by(|a, b| {
                a.location
                    .distance_km(here)
                    .total_cmp(&b.location.distance_km(here))
                    .then_with(|| a.ambulance_id.cmp(&b.ambulance_id))
            })
            .cloned()
            .ok_or_else(|| ToolError::invalid(tool, "no ambulance available"))?;
        self.assign_ambulance(&ctx.user_id, &best.ambulance_id);
        Ok(best.to_value())
    }

    fn send_message(&mut self, call: &ToolCall, ctx: &CallContext) -> Result<Value, ToolError> {
        let tool = "send_message";
        let text = str_param(call, "text")?.to_string();
        let mut recipients: Vec<String> = call.param_str("phone_no").map(str::to_string).into_iter().collect();
        if call.param("to_emergency_contacts").and_then(Value::as_bool) == Some(true) {
            let user = self.known_user(tool, &ctx.user_id)?;
            if user.emergency_contacts.is_empty() {
                return Err(ToolError::invalid(tool, "user has no emergency contacts"));
            }
            recipients.extend(user.emergency_contacts.iter().cloned());
        }
        if recipients.is_empty() {
            return Err(ToolError::invalid(tool, "no recipient: give phone_no or to_emergency_contacts"));
        }
        let mut all_delivered = true;
        for phone_no in recipients {
            if let Some(sms) = &self.sms {
                match sms.send(&phone_no, &text) {
                    Ok(ack) => all_delivered &= ack.delivered,
                    Err(e) => {
                        tracing::warn!(%phone_no, error = %e, "sms delivery failed");
                        all_delivered = false;
                    }
                }
            }
            self.messages.push(MessageEntry {
                user_id: ctx.user_id.clone(),
                phone_no,
                text: text.clone(),
                at: ctx.now,
            });
        }
        Ok(Value::Bool(all_delivered))
    }

    fn search_specialists(&self, call: &ToolCall, ctx: &CallContext) -> Result<Value, ToolError> {
        let wanted = str_param(call, "specialization")?.trim().to_lowercase();
        let schedule = match call.param("user_schedule") {
            None | Some(Value::Null) => Schedule::default(),
            Some(v) => Schedule::from_value(v).ok_or_else(|| {
                ToolError::invalid("get_available_specialists", "unreadable user_schedule")
            })?,
        };
        let best = self
            .specialists
            .values()
            .filter(|s| s.specialization.trim().to_lowercase() == wanted)
            .flat_map(|s| s.slots.iter().map(move |slot| (slot, s)))
            .filter(|(slot, s)| {
                let starts = slot.date.and_time(slot.time.start);
                starts > ctx.now && schedule.admits(slot) && !self.is_booked(&s.specialist_id, slot)
            })
            .min_by(|(a, sa), (b, sb)| {
                (a.date, a.time.start, &sa.specialist_id).cmp(&(b.date, b.time.start, &sb.specialist_id))
            });
        Ok(match best {
            Some((slot, s)) => json!({
                "specialist_id": s.specialist_id,
                "name": s.name,
                "available_slot": {"date": format_date(slot.date), "time": slot.time.to_string()},
            }),
            None => Value::Object(Map::new()),
        })
    }

    fn is_booked(&self, specialist_id: &str, slot: &Slot) -> bool {
        self.bookings
            .iter()
            .any(|b| b.specialist_id == specialist_id && b.slot == *slot)
    }

    fn confirm_appointment(&mut self, call: &ToolCall) -> Result<Value, ToolError> {
        let tool = "confirm_appointment";
        let uid = str_param(call, "user_id")?;
        self.known_user(tool, uid)?;
        let sid = str_param(call, "specialist_id")?;
        let spec = self
            .specialists
            .get(sid)
            .ok_or_else(|| ToolError::invalid(tool, format!("unknown specialist {sid}")))?;
        let slot = slot_param(call)?;
        if !spec.slots.contains(&slot) {
            return Err(ToolError::invalid(tool, format!("{sid} has no slot {}", slot.to_call_format())));
        }
        if self.is_booked(sid, &slot) {
            return Err(ToolError::invalid(tool, format!("slot {} is already booked", slot.to_call_format())));
        }
        self.bookings.push(Booking { user_id: uid.to_string(), specialist_id: sid.to_string(), slot });
        Ok(Value::Bool(true))
    }

    /// Seeds a world so that replaying `t`'s calls reproduces its
    /// observations: the user, their location, matching specialists,
    /// ambulances, past complaints and the user's answers.
    pub fn from_trajectory(t: &Trajectory) -> World {
        let details = t.user_details().expect("trajectory starts with a system state");
        let uid = details.user_id.to_string();
        let mut world = World::new(details.timestamp, MemoryStore::in_memory());
        let mut location = GeoPoint::new(0.0, 0.0);
        let mut complaints: Vec<PastComplaint> = Vec::new();

        for (call, result) in t.call_observations() {
            let Some(result) = result else { continue };
            match call.tool.as_str() {
                "get_location" => {
                    if let Some(p) = GeoPoint::from_value(result) {
                        location = p;
                    }
                }
                "search_ambulance" | "get_assigned_ambulance" => {
                    let (Some(id), Some(phone)) = (
                        result.get("ambulance_id").and_then(Value::as_str),
                        result.get("phone_no").and_then(Value::as_str),
                    ) else {
                        continue;
                    };
                    let at = call
                        .param("location")
                        .and_then(GeoPoint::from_value)
                        .unwrap_or(location);
                    world.add_ambulance(Ambulance {
                        ambulance_id: id.into(),
                        phone_no: phone.into(),
                        location: at,
                    });
                    if call.tool == "get_assigned_ambulance" {
                        world.assign_ambulance(&uid, id);
                    }
                }
                "get_available_specialists" => {
                    let slot = result.get("available_slot").and_then(|s| {
                        let date = parse_date(s.get("date")?.as_str()?)?;
                        let time: TimeRange = s.get("time")?.as_str()?.parse().ok()?;
                        Some(Slot::new(date, time))
                    });
                    if let (Some(id), Some(name), Some(slot)) = (
                        result.get("specialist_id").and_then(Value::as_str),
                        result.get("name").and_then(Value::as_str),
                        slot,
                    ) {
                        world.add_specialist(Specialist {
                            specialist_id: id.into(),
                            name: name.into(),
                            specialization: call.param_str("specialization").unwrap_or("general").into(),
                            slots: vec![slot],
                        });
                    }
                }
                "retrieve_past_complaints" => {
                    for item in result.as_array().into_iter().flatten() {
                        let c = item.get("date").and_then(Value::as_str).and_then(parse_date).zip(
                            item.get("symptoms").and_then(Value::as_str),
                        );
                        if let Some((date, symptoms)) = c {
                            let c = PastComplaint { date, symptoms: symptoms.into() };
                            if !complaints.contains(&c) {
                                complaints.push(c);
                            }
                        }
                    }
                }
                "get_input_from_user" => world.push_user_answer(result.clone()),
                _ => {}
            }
        }

        world.add_user(UserProfile {
            user_id: uid.clone(),
            name: details.name.clone(),
            phone_no: None,
            location,
            emergency_contacts: vec![PLACEHOLDER_CONTACT.into()],
        })
        .expect("in-memory store");
        for c in &complaints {
            world.memory.store_past_complaint(&uid, c).expect("seed complaint");
        }
        world
    }
}

fn str_param<'a>(call: &'a ToolCall, name: &str) -> Result<&'a str, ToolError> {
    call.param_str(name)
        .ok_or_else(|| ToolError::invalid(&call.tool, format!("`{name}` must be a string")))
}

fn slot_param(call: &ToolCall) -> Result<Slot, ToolError> {
    let raw = str_param(call, "appointment_time_date")?;
    Slot::parse_call_format(raw)
        .ok_or_else(|| ToolError::invalid(&call.tool, format!("unreadable appointment_time_date `{raw}`")))
}

fn date_range(v: &Value) -> Option<std::ops::RangeInclusive<NaiveDate>> {
    let get = |a: &str, b: &str| v.get(a).or_else(|| v.get(b)).and_then(Value::as_str).and_then(parse_date);
    let start = get("start", "from")?;
    let end = get("end", "to")?;
    Some(start..=end)
}

/// Optional constraints a caller may attach to a specialist search.
#[derive(Debug, Default)]
struct Schedule {
    date: Option<NaiveDate>,
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
    time: Option<TimeRange>,
}

impl Schedule {
    fn from_value(v: &Value) -> Option<Self> {
        let obj = v.as_object()?;
        let date = |k: &str| match obj.get(k) {
            None => Some(None),
            Some(x) => x.as_str().and_then(parse_date).map(Some),
        };
        let time = match obj.get("time") {
            None => None,
            Some(x) => Some(x.as_str()?.parse().ok()?),
        };
        Some(Self { date: date("date")?, from: date("from")?, to: date("to")?, time })
    }

    fn admits(&self, slot: &Slot) -> bool {
        self.date.is_none_or(|d| slot.date == d)
            && self.from.is_none_or(|d| slot.date >= d)
            && self.to.is_none_or(|d| slot.date <= d)
            && self.time.is_none_or(|t| t.contains(&slot.time))
    }
}
