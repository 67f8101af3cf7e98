//! The planner/caller loop.
//!
//! Each step renders a prompt from the tools and the interleaved history,
//! asks a [`PolicyBackend`] for a tagged planner step, then for a tagged tool
//! call, executes the call against the [`World`](crate::toolbox::World) and
//! appends the observation. The loop ends at `<END>`, when a tool needs the
//! user's answer, or when the step budget runs out.

mod http;
pub mod prompt;
pub mod rules;
mod scripted;
mod session;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpPolicy;
pub use prompt::{build_caller_prompt, build_planner_prompt, PromptConfig};
pub use rules::RulePolicy;
pub use scripted::{answer_text, ScriptedPolicy};
pub use session::{
    call_step, plan_step, run_session, Limits, Outcome, Session, SessionContext, SessionRun,
};

use crate::toolbox::ValidationReport;
use crate::trajectory::ToolCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Planner,
    Caller,
    /// Free-text narrative for daily health reports.
    Report,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Planner => "planner",
            Role::Caller => "caller",
            Role::Report => "report",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("policy backend timed out")]
    Timeout,
    #[error("policy backend failed: {0}")]
    Backend(String),
}

/// Text completion for one role. Implementations are shared across
/// concurrently running sessions.
pub trait PolicyBackend: Send + Sync {
    fn complete(&self, prompt: &str, role: Role) -> Result<String, PolicyError>;
}

impl<P: PolicyBackend + ?Sized> PolicyBackend for std::sync::Arc<P> {
    fn complete(&self, prompt: &str, role: Role) -> Result<String, PolicyError> {
        (**self).complete(prompt, role)
    }
}

impl<P: PolicyBackend + ?Sized> PolicyBackend for &P {
    fn complete(&self, prompt: &str, role: Role) -> Result<String, PolicyError> {
        (**self).complete(prompt, role)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("prompt needs {chars} characters but the context budget is {budget}")]
    ContextOverflow { chars: usize, budget: usize },
    #[error("policy backend timed out")]
    PolicyTimeout,
    #[error("policy backend failed: {0}")]
    Backend(String),
    #[error("{role} output could not be parsed after {attempts} attempts: {last}")]
    UnparseableOutput { role: Role, attempts: usize, last: String },
    #[error("step budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("invalid tool call after a corrective retry: {}", report.describe())]
    InvalidCallAfterRetry { call: ToolCall, report: ValidationReport },
    #[error("session is not waiting for user input")]
    NotAwaitingUser,
    #[error("session has already finished")]
    SessionFinished,
}

impl From<PolicyError> for AgentError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Timeout => AgentError::PolicyTimeout,
            PolicyError::Backend(m) => AgentError::Backend(m),
        }
    }
}
