//! The engine behind the HTTP layer. Every method is synchronous and may
//! block on the policy backend; the router runs them off the async runtime.
//!
//! Locks are taken in one order: user, then session, then world. A session
//! waiting for an answer holds none of them.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use chrono::NaiveDate;
use medagent_core::agent::{AgentError, Limits, Outcome, PolicyBackend, Session};
use medagent_core::health::{
    self, check_vitals, collect_day, directives_to_reminders, due_reminders, generate_report,
    parse_prescription, reminders_for, schedule_reminders, soft_sos_query, Abnormality, AlertEvent,
    DailyReport, Metric, MetricStats, ParsedPrescription, StoredReminder, VitalsMonitor, VitalsSample,
};
use medagent_core::memory::{Collection, MemoryStore};
use medagent_core::toolbox::{CallContext, MessageEntry, NotificationEntry, ToolRegistry, World};
use medagent_core::trajectory::{ParseOptions, ToolCall, Trajectory, UserDetails, UserId};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::clock::Clock;
use crate::error::GatewayError;
use crate::session::{
    events, last_notification, record_status, LogEvent, SessionHandle, SessionInfo, SessionKind,
    SessionStatus,
};

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Which backend drives which kind of session. Everything goes to the
/// default unless overridden.
#[derive(Clone)]
pub struct Policies {
    default: Arc<dyn PolicyBackend>,
    overrides: BTreeMap<SessionKind, Arc<dyn PolicyBackend>>,
}

impl Policies {
    pub fn new(default: Arc<dyn PolicyBackend>) -> Self {
        Self { default, overrides: BTreeMap::new() }
    }

    pub fn with(mut self, kind: SessionKind, policy: Arc<dyn PolicyBackend>) -> Self {
        self.overrides.insert(kind, policy);
        self
    }

    pub fn for_kind(&self, kind: SessionKind) -> &dyn PolicyBackend {
        self.overrides.get(&kind).unwrap_or(&self.default).as_ref()
    }
}

pub struct ServiceOptions {
    pub limits: Limits,
    pub monitor: VitalsMonitor,
    /// Writes the narrative paragraph of daily reports, when set.
    pub report_backend: Option<Arc<dyn PolicyBackend>>,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self { limits: Limits::default(), monitor: VitalsMonitor::default(), report_backend: None }
    }
}

/// A session behind its own lock. Routing and polling read `view`, which
/// is republished each time the session stops, so they never wait on a
/// running session.
struct Slot {
    user_id: String,
    kind: SessionKind,
    view: Mutex<View>,
    entry: Mutex<Entry>,
}

#[derive(Default)]
struct View {
    status: Option<SessionStatus>,
    query: String,
    question: Option<String>,
    notification: Option<String>,
    error: Option<String>,
    log: Vec<LogEvent>,
}

struct Entry {
    session: Session,
    record: Option<u64>,
}

impl Slot {
    fn new(user_id: &str, kind: SessionKind, entry: Entry, status: SessionStatus, error: Option<String>, reg: &ToolRegistry) -> Self {
        let slot = Self { user_id: user_id.to_string(), kind, view: Mutex::default(), entry: Mutex::new(entry) };
        {
            let e = lock(&slot.entry);
            slot.publish(&e.session, status, error, reg);
        }
        slot
    }

    fn status(&self) -> SessionStatus {
        lock(&self.view).status.unwrap_or(SessionStatus::Running)
    }

    fn publish(&self, session: &Session, status: SessionStatus, error: Option<String>, reg: &ToolRegistry) {
        let t = session.trajectory();
        let mut v = lock(&self.view);
        let known = v.log.len();
        v.log.extend(events(t, known));
        v.status = Some(status);
        v.query = t.query().unwrap_or_default().to_string();
        v.question = session.awaiting().map(str::to_string);
        v.notification = last_notification(t, reg);
        v.error = error;
    }

    fn handle(&self, session_id: &str, from: usize) -> SessionHandle {
        let v = lock(&self.view);
        SessionHandle {
            session_id: session_id.to_string(),
            user_id: self.user_id.clone(),
            kind: self.kind,
            status: v.status.unwrap_or(SessionStatus::Running),
            question: v.question.clone(),
            notification: v.notification.clone(),
            error: v.error.clone(),
            events: v.log.iter().skip(from).cloned().collect(),
            log_len: v.log.len(),
        }
    }
}

/// Vitals as posted; the timestamp defaults to the service clock.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VitalsInput {
    #[serde(default)]
    pub timestamp: Option<chrono::NaiveDateTime>,
    pub heart_rate: u32,
    pub oxygen: u32,
    #[serde(default)]
    pub sleep: Option<health::SleepMinutes>,
    #[serde(default)]
    pub blood_pressure: Option<health::BloodPressure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VitalsOutcome {
    /// Out-of-range metrics; empty means normal.
    pub verdict: Vec<Abnormality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_sos: Option<SessionHandle>,
    /// Today's readings so far, per metric.
    pub summary: BTreeMap<String, MetricStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SosKind {
    HardStart,
    HardEnd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrescriptionOutcome {
    #[serde(flatten)]
    pub parsed: ParsedPrescription,
    pub reminders_created: usize,
}

pub struct Service {
    world: Mutex<World>,
    store: MemoryStore,
    registry: ToolRegistry,
    policies: Policies,
    clock: Arc<dyn Clock>,
    opts: ServiceOptions,
    sessions: RwLock<BTreeMap<String, Arc<Slot>>>,
    users: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    next_id: AtomicU64,
}

impl Service {
    /// Takes over `world`, whose memory store becomes the service store.
    /// Sessions persisted in the store are reloaded; those that were waiting
    /// for an answer can be resumed.
    pub fn new(world: World, policies: Policies, clock: Arc<dyn Clock>, opts: ServiceOptions) -> Self {
        let store = world.memory().clone();
        let registry = world.registry().clone();
        let svc = Self {
            world: Mutex::new(world),
            store,
            registry,
            policies,
            clock,
            opts,
            sessions: RwLock::new(BTreeMap::new()),
            users: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        };
        svc.rehydrate();
        svc
    }

    fn rehydrate(&self) {
        let mut max_id = 0;
        let mut sessions = self.sessions.write().unwrap_or_else(|e| e.into_inner());
        for rec in self.store.scan(Collection::Sessions, None, None) {
            let b = &rec.body;
            let Some(id) = b.get("session_id").and_then(Value::as_str) else { continue };
            max_id = max_id.max(id.trim_start_matches('S').parse::<u64>().unwrap_or(0));
            let restored = b
                .get("trajectory")
                .and_then(|t| Trajectory::from_value(t, ParseOptions::default()).ok())
                .and_then(|t| Session::rehydrate(id, t, self.registry.clone(), self.opts.limits));
            let Some(session) = restored else {
                tracing::warn!(session = id, "persisted session could not be restored");
                continue;
            };
            let status = match b.get("status").and_then(Value::as_str) {
                Some("suspended") if session.awaiting().is_some() => SessionStatus::AwaitingUser,
                Some("completed") => SessionStatus::Completed,
                _ => SessionStatus::Failed,
            };
            let kind = b
                .get("kind")
                .and_then(Value::as_str)
                .and_then(SessionKind::parse)
                .unwrap_or(SessionKind::Chat);
            let error = b.get("error").and_then(Value::as_str).map(str::to_string);
            let entry = Entry { session, record: Some(rec.id) };
            let slot = Slot::new(&rec.user_id, kind, entry, status, error, &self.registry);
            sessions.insert(id.to_string(), Arc::new(slot));
        }
        self.next_id.store(max_id + 1, Ordering::SeqCst);
    }

    pub fn store(&self) -> &MemoryStore {
        &self.store
    }

    pub fn registry(&self) -> &ToolRegistry {
        &self.registry
    }

    pub fn now(&self) -> chrono::NaiveDateTime {
        self.clock.now()
    }

    /// Runs `f` against the world under its lock.
    pub fn with_world<R>(&self, f: impl FnOnce(&mut World) -> R) -> R {
        f(&mut lock(&self.world))
    }

    fn user_name(&self, user_id: &str) -> Result<String, GatewayError> {
        lock(&self.world)
            .user(user_id)
            .map(|u| u.name.clone())
            .ok_or_else(|| GatewayError::UnknownUser(user_id.to_string()))
    }

    fn user_lock(&self, user_id: &str) -> Arc<Mutex<()>> {
        lock(&self.users).entry(user_id.to_string()).or_default().clone()
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, GatewayError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| GatewayError::UnknownSession(id.to_string()))
    }

    fn awaiting_chat(&self, user_id: &str) -> Option<Arc<Slot>> {
        let sessions = self.sessions.read().unwrap_or_else(|e| e.into_inner());
        sessions
            .values()
            .rev()
            .find(|s| s.user_id == user_id && s.kind == SessionKind::Chat && s.status() == SessionStatus::AwaitingUser)
            .cloned()
    }

    /// A message from the user. It answers the pending question of the
    /// named session, or else of the user's waiting chat session; with
    /// neither, it opens a new session.
    pub fn chat(&self, user_id: &str, text: &str, session_id: Option<&str>) -> Result<SessionHandle, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::BadRequest("text must not be empty".into()));
        }
        self.user_name(user_id)?;
        let user = self.user_lock(user_id);
        let _serial = lock(&user);
        let target = match session_id {
            Some(id) => {
                let slot = self.slot(id)?;
                if slot.user_id != user_id {
                    return Err(GatewayError::UnknownSession(id.to_string()));
                }
                Some(slot)
            }
            None => self.awaiting_chat(user_id),
        };
        match target {
            Some(slot) => self.answer(&slot, text),
            None => self.open(user_id, SessionKind::Chat, text),
        }
    }

    fn answer(&self, slot: &Slot, text: &str) -> Result<SessionHandle, GatewayError> {
        let mut e = lock(&slot.entry);
        if slot.status() != SessionStatus::AwaitingUser {
            return Err(GatewayError::NotAwaiting(e.session.id().to_string()));
        }
        let before = e.session.trajectory().len();
        let policy = self.policies.for_kind(slot.kind);
        let result = {
            let mut world = lock(&self.world);
            world.set_clock(self.clock.now());
            e.session.resume(Value::String(text.to_string()), &mut world, policy)
        };
        let outcome = match result {
            Ok(o) => o,
            Err(AgentError::NotAwaitingUser | AgentError::SessionFinished) => {
                return Err(GatewayError::NotAwaiting(e.session.id().to_string()))
            }
            Err(other) => Outcome::Failed { error: other.to_string() },
        };
        self.settle(slot, &mut e, outcome, before)
    }

    /// Opens a session of `kind` for the user with `query` as its first
    /// message and runs it until it stops.
    pub fn open(&self, user_id: &str, kind: SessionKind, query: &str) -> Result<SessionHandle, GatewayError> {
        let name = self.user_name(user_id)?;
        let uid = UserId::parse(user_id).map_err(|e| GatewayError::BadRequest(e.to_string()))?;
        let id = format!("S{:06}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let details = UserDetails::new(uid, name, self.clock.now());
        let session = Session::new(id.clone(), details, query, self.registry.clone(), self.opts.limits);
        let entry = Entry { session, record: None };
        let slot = Arc::new(Slot::new(user_id, kind, entry, SessionStatus::Running, None, &self.registry));
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, slot.clone());
        let mut e = lock(&slot.entry);
        let policy = self.policies.for_kind(kind);
        let result = {
            let mut world = lock(&self.world);
            world.set_clock(self.clock.now());
            e.session.run(&mut world, policy)
        };
        let outcome = result.unwrap_or_else(|err| Outcome::Failed { error: err.to_string() });
        self.settle(&slot, &mut e, outcome, 0)
    }

    fn settle(&self, slot: &Slot, e: &mut Entry, outcome: Outcome, before: usize) -> Result<SessionHandle, GatewayError> {
        let status = SessionStatus::of(&outcome);
        let error = match &outcome {
            Outcome::Failed { error } => Some(error.clone()),
            Outcome::Exhausted { steps } => Some(format!("step budget exhausted after {steps} planner steps")),
            _ => None,
        };
        if let Err(err) = self.persist(slot, e, &outcome, error.as_deref()) {
            tracing::error!(error = %err, session = e.session.id(), "session record not written");
        }
        slot.publish(&e.session, status, error, &self.registry);
        let handle = slot.handle(e.session.id(), before);
        if status == SessionStatus::Failed {
            return Err(GatewayError::SessionFailed(Box::new(handle)));
        }
        Ok(handle)
    }

    fn persist(&self, slot: &Slot, e: &mut Entry, outcome: &Outcome, error: Option<&str>) -> Result<(), medagent_core::memory::MemoryError> {
        let t = e.session.trajectory();
        let mut body = health::session_record(
            e.session.id(),
            t.query().unwrap_or_default(),
            record_status(outcome),
            t.count(medagent_core::StateKind::Planner),
            e.session.context().details.timestamp,
            t.to_value(),
        );
        body["kind"] = slot.kind.as_str().into();
        if let Some(err) = error {
            body["error"] = err.into();
        }
        match e.record {
            Some(id) => self.store.update(id, body),
            None => {
                let date = e.session.context().details.timestamp.date();
                e.record = Some(self.store.put(Collection::Sessions, &slot.user_id, Some(date), body)?);
                Ok(())
            }
        }
    }

    /// The session with its log from index `from` on.
    pub fn session_log(&self, id: &str, from: usize) -> Result<SessionHandle, GatewayError> {
        Ok(self.slot(id)?.handle(id, from))
    }

    pub fn trajectory(&self, id: &str) -> Result<Trajectory, GatewayError> {
        let slot = self.slot(id)?;
        let t = lock(&slot.entry).session.trajectory().clone();
        Ok(t)
    }

    pub fn sessions(&self, user_id: Option<&str>) -> Vec<SessionInfo> {
        let sessions = self.sessions.read().unwrap_or_else(|e| e.into_inner());
        sessions
            .iter()
            .filter(|(_, s)| user_id.is_none_or(|u| u == s.user_id))
            .map(|(id, s)| {
                let v = lock(&s.view);
                SessionInfo {
                    session_id: id.clone(),
                    user_id: s.user_id.clone(),
                    kind: s.kind,
                    status: v.status.unwrap_or(SessionStatus::Running),
                    query: v.query.clone(),
                    question: v.question.clone(),
                    log_len: v.log.len(),
                }
            })
            .collect()
    }

    /// Stores the sample and checks it. Abnormal readings open a soft-SOS
    /// session, at most once per metric within the monitor's cool-down.
    pub fn vitals(&self, user_id: &str, input: VitalsInput) -> Result<VitalsOutcome, GatewayError> {
        self.user_name(user_id)?;
        let sample = VitalsSample {
            timestamp: input.timestamp.unwrap_or_else(|| self.clock.now()),
            heart_rate: input.heart_rate,
            oxygen: input.oxygen,
            sleep: input.sleep,
            blood_pressure: input.blood_pressure,
        };
        sample.validate().map_err(|e| GatewayError::BadRequest(e.to_string()))?;
        health::record_vitals(&self.store, user_id, &sample).map_err(internal)?;
        let decision = self.opts.monitor.ingest(user_id, &sample);
        let mut soft_sos = None;
        if decision.soft_sos() {
            let query = soft_sos_query(&sample);
            let alert = AlertEvent { at: sample.timestamp, metrics: decision.triggered.clone(), query: query.clone() };
            health::record_alert(&self.store, user_id, &alert).map_err(internal)?;
            soft_sos = Some(match self.open(user_id, SessionKind::SoftSos, &query) {
                Ok(h) => h,
                Err(GatewayError::SessionFailed(h)) => *h,
                Err(other) => return Err(other),
            });
        }
        let day = health::vitals_on(&self.store, user_id, sample.timestamp.date());
        let summary = Metric::ALL
            .into_iter()
            .map(|m| {
                let values: Vec<u32> = day.iter().filter_map(|s| s.value(m)).collect();
                (m.as_str().to_string(), MetricStats::from_values(&values))
            })
            .collect();
        debug_assert_eq!(decision.abnormal, check_vitals(&sample, self.opts.monitor.thresholds()));
        Ok(VitalsOutcome { verdict: decision.abnormal, soft_sos, summary })
    }

    pub fn sos(&self, user_id: &str, kind: SosKind) -> Result<SessionHandle, GatewayError> {
        self.user_name(user_id)?;
        let user = self.user_lock(user_id);
        let _serial = lock(&user);
        match kind {
            SosKind::HardStart => self.open(user_id, SessionKind::HardSosStart, "Hard SOS triggered"),
            SosKind::HardEnd => {
                if lock(&self.world).assigned_ambulance(user_id).is_none() {
                    return Err(GatewayError::NoActiveSos(user_id.to_string()));
                }
                let handle = self.open(user_id, SessionKind::HardSosEnd, "End SOS triggered")?;
                if handle.status == SessionStatus::Completed {
                    lock(&self.world).release_ambulance(user_id);
                }
                Ok(handle)
            }
        }
    }

    /// Parses the prescription and schedules its reminders from today.
    pub fn prescription(&self, user_id: &str, text: &str) -> Result<PrescriptionOutcome, GatewayError> {
        self.user_name(user_id)?;
        let parsed = parse_prescription(text).map_err(|_| GatewayError::EmptyPrescription)?;
        let reminders = directives_to_reminders(user_id, &parsed.directives, self.clock.now().date());
        schedule_reminders(&self.store, &reminders).map_err(internal)?;
        Ok(PrescriptionOutcome { parsed, reminders_created: reminders.len() })
    }

    pub fn reminders(&self, user_id: &str) -> Result<Vec<StoredReminder>, GatewayError> {
        self.user_name(user_id)?;
        Ok(reminders_for(&self.store, Some(user_id)))
    }

    /// The template report for one day; a day without records yields a
    /// report with zeroed statistics.
    pub fn report(&self, user_id: &str, date: Option<NaiveDate>) -> Result<DailyReport, GatewayError> {
        self.user_name(user_id)?;
        let date = date.unwrap_or_else(|| self.clock.now().date());
        let day = collect_day(&self.store, user_id, date);
        Ok(generate_report(&day, date, self.opts.report_backend.as_deref()))
    }

    /// One scheduler pass: fires every due reminder once and tells its
    /// user through `notify_user`.
    pub fn tick(&self) -> Vec<StoredReminder> {
        let now = self.clock.now();
        let fired = match due_reminders(now, &self.store, None) {
            Ok(f) => f,
            Err(e) => {
                tracing::error!(error = %e, "reminder tick failed");
                return Vec::new();
            }
        };
        let mut world = lock(&self.world);
        for r in &fired {
            let r = &r.reminder;
            let call = ToolCall::new("notify_user")
                .with("user_id", r.user_id.as_str())
                .with("message", format!("Time to take {} ({}).", r.medicine_name, r.dose));
            let ctx = CallContext { user_id: r.user_id.clone(), now };
            if let Err(e) = world.execute(&call, &ctx) {
                tracing::warn!(error = %e, user = %r.user_id, "reminder notification failed");
            }
        }
        fired
    }

    pub fn messages(&self) -> Vec<MessageEntry> {
        lock(&self.world).messages().to_vec()
    }

    pub fn notifications(&self, user_id: Option<&str>) -> Vec<NotificationEntry> {
        lock(&self.world)
            .notifications()
            .iter()
            .filter(|n| user_id.is_none_or(|u| u == n.user_id))
            .cloned()
            .collect()
    }
}

fn internal(e: impl std::fmt::Display) -> GatewayError {
    GatewayError::Internal(e.to_string())
}
