use medagent_core::agent::Outcome;
use medagent_core::toolbox::{normalize_call, ToolRegistry};
use medagent_core::trajectory::{State, Trajectory};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionKind {
    Chat,
    SoftSos,
    HardSosStart,
    HardSosEnd,
}

impl SessionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionKind::Chat => "chat",
            SessionKind::SoftSos => "soft_sos",
            SessionKind::HardSosStart => "hard_sos_start",
            SessionKind::HardSosEnd => "hard_sos_end",
        }
    }

    /// SOS sessions are recognized by the wording of their opening message.
    pub fn of_query(q: &str) -> Self {
        let q = q.trim_start();
        if q.starts_with("Hard SOS triggered") {
            SessionKind::HardSosStart
        } else if q.starts_with("End SOS triggered") {
            SessionKind::HardSosEnd
        } else if q.starts_with("Soft SOS triggered") {
            SessionKind::SoftSos
        } else {
            SessionKind::Chat
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [SessionKind::Chat, SessionKind::SoftSos, SessionKind::HardSosStart, SessionKind::HardSosEnd]
            .into_iter()
            .find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Running,
    AwaitingUser,
    Completed,
    Failed,
}

impl SessionStatus {
    pub fn of(outcome: &Outcome) -> Self {
        match outcome {
            Outcome::Completed => SessionStatus::Completed,
            Outcome::Suspended { .. } => SessionStatus::AwaitingUser,
            Outcome::Exhausted { .. } | Outcome::Failed { .. } => SessionStatus::Failed,
        }
    }
}

/// Status word kept in the persisted session record.
pub fn record_status(outcome: &Outcome) -> &'static str {
    match outcome {
        Outcome::Completed => "completed",
        Outcome::Suspended { .. } => "suspended",
        Outcome::Exhausted { .. } => "exhausted",
        Outcome::Failed { .. } => "failed",
    }
}

/// One state of the agent log, in trajectory document form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub index: usize,
    pub from: String,
    pub value: Value,
}

impl LogEvent {
    pub fn of(index: usize, state: &State) -> Self {
        let mut doc = state.to_value();
        Self {
            index,
            from: state.kind().as_str().to_string(),
            value: doc.get_mut("value").map(Value::take).unwrap_or(Value::Null),
        }
    }
}

pub fn events(t: &Trajectory, from: usize) -> Vec<LogEvent> {
    t.states.iter().enumerate().skip(from).map(|(i, s)| LogEvent::of(i, s)).collect()
}

/// What a request returns about the session it touched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHandle {
    pub session_id: String,
    pub user_id: String,
    pub kind: SessionKind,
    pub status: SessionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    /// The last message sent to the user through `notify_user`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notification: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Log events appended by this request.
    pub events: Vec<LogEvent>,
    /// Length of the whole log; poll from here for later events.
    pub log_len: usize,
}

/// Session list entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub user_id: String,
    pub kind: SessionKind,
    pub status: SessionStatus,
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    pub log_len: usize,
}

pub fn last_notification(t: &Trajectory, registry: &ToolRegistry) -> Option<String> {
    t.calls()
        .filter(|c| c.tool == "notify_user")
        .last()
        .and_then(|c| normalize_call(c, registry).param_str("message").map(str::to_string))
}
