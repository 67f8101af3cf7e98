use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompt::{build_caller_prompt, build_planner_prompt, corrective_prompt, PromptConfig};
use super::{AgentError, PolicyBackend, Role};
use crate::memory::ShortTermMemory;
use crate::toolbox::{validate_call, CallContext, ExecOutcome, ToolRegistry, World};
use crate::trajectory::{
    parse_caller_output, parse_planner_output, PlannerStep, State, StateKind, ToolCall,
    Trajectory, UserDetails,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Maximum planner states per episode, `<END>` included.
    pub step_budget: usize,
    /// Extra attempts when an output does not parse.
    pub parse_retries: usize,
    pub prompt: PromptConfig,
}

impl Default for Limits {
    fn default() -> Self {
        Self { step_budget: 20, parse_retries: 2, prompt: PromptConfig::default() }
    }
}

impl Limits {
    pub fn with_step_budget(mut self, n: usize) -> Self {
        self.step_budget = n.max(1);
        self
    }
}

#[derive(Debug, Clone)]
pub struct SessionContext {
    pub details: UserDetails,
    pub registry: ToolRegistry,
    pub trajectory: Trajectory,
    pub step_budget: usize,
    pub clock: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// A `get_input_from_user` call is parked; resume with the answer.
    Suspended { question: String },
    /// The step budget ran out before `<END>`.
    Exhausted { steps: usize },
    /// The partial trajectory is kept; `error` says why it stopped.
    Failed { error: String },
}

impl Outcome {
    pub fn is_final(&self) -> bool {
        !matches!(self, Outcome::Suspended { .. })
    }
}

#[derive(Debug, Clone)]
pub struct SessionRun {
    pub trajectory: Trajectory,
    pub outcome: Outcome,
}

pub fn plan_step(
    ctx: &SessionContext,
    policy: &dyn PolicyBackend,
    limits: &Limits,
) -> Result<PlannerStep, AgentError> {
    if ctx.trajectory.count(StateKind::Planner) >= ctx.step_budget {
        return Err(AgentError::BudgetExhausted(ctx.step_budget));
    }
    let prompt = build_planner_prompt(&ctx.registry, &ctx.trajectory.states, &limits.prompt)?;
    let mut last = String::new();
    for _ in 0..=limits.parse_retries {
        let out = policy.complete(&prompt, Role::Planner)?;
        match parse_planner_output(&out) {
            Ok(step) => return Ok(step),
            Err(e) => {
                tracing::debug!(error = %e, "unparseable planner output");
                last = format!("{e}: {out}");
            }
        }
    }
    Err(AgentError::UnparseableOutput {
        role: Role::Planner,
        attempts: limits.parse_retries + 1,
        last,
    })
}

fn ask_call(prompt: &str, policy: &dyn PolicyBackend, limits: &Limits) -> Result<ToolCall, AgentError> {
    let mut last = String::new();
    for _ in 0..=limits.parse_retries {
        let out = policy.complete(prompt, Role::Caller)?;
        match parse_caller_output(&out) {
            Ok(call) => return Ok(call),
            Err(e) => {
                tracing::debug!(error = %e, "unparseable caller output");
                last = format!("{e}: {out}");
            }
        }
    }
    Err(AgentError::UnparseableOutput {
        role: Role::Caller,
        attempts: limits.parse_retries + 1,
        last,
    })
}

/// Asks for the call implementing the last planner action. A call that
/// fails validation gets one corrective re-prompt carrying the report.
/// The call is returned as emitted; aliases are resolved by the world.
pub fn call_step(
    ctx: &SessionContext,
    policy: &dyn PolicyBackend,
    limits: &Limits,
) -> Result<ToolCall, AgentError> {
    let prompt = build_caller_prompt(&ctx.registry, &ctx.trajectory.states, &limits.prompt)?;
    let call = ask_call(&prompt, policy, limits)?;
    let report = validate_call(&call, &ctx.registry);
    if report.is_valid() {
        return Ok(call);
    }
    tracing::debug!(report = %report.describe(), "re-prompting caller");
    let retry = limits.prompt.check(corrective_prompt(&prompt, &report.describe()))?;
    let call = ask_call(&retry, policy, limits)?;
    let report = validate_call(&call, &ctx.registry);
    if report.is_valid() {
        Ok(call)
    } else {
        Err(AgentError::InvalidCallAfterRetry { call, report })
    }
}

/// One episode, resumable across user answers.
#[derive(Debug, Clone)]
pub struct Session {
    ctx: SessionContext,
    limits: Limits,
    stm: ShortTermMemory,
    awaiting: Option<String>,
    outcome: Option<Outcome>,
    /// The one synthetic error observation granted after a bad call.
    degraded: bool,
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        details: UserDetails,
        query: impl Into<String>,
        registry: ToolRegistry,
        limits: Limits,
    ) -> Self {
        let clock = details.timestamp;
        let mut trajectory = Trajectory::new(details.clone());
        trajectory.push(State::user(query));
        Self::from_parts(id.into(), details, trajectory, registry, limits, clock)
    }

    /// Rebuilds a session from a persisted trajectory. A trailing
    /// `get_input_from_user` call means the session is waiting for an answer.
    pub fn rehydrate(
        id: impl Into<String>,
        trajectory: Trajectory,
        registry: ToolRegistry,
        limits: Limits,
    ) -> Option<Self> {
        let details = trajectory.user_details()?.clone();
        let clock = details.timestamp;
        let mut s = Self::from_parts(id.into(), details, trajectory, registry, limits, clock);
        let last = s.ctx.trajectory.states.last().cloned();
        if let Some(call) = last.as_ref().and_then(State::as_caller) {
            if call.tool == "get_input_from_user" {
                s.awaiting = Some(call.param_str("questions").unwrap_or_default().to_string());
            }
        }
        if s.ctx.trajectory.is_complete() {
            s.outcome = Some(Outcome::Completed);
        }
        Some(s)
    }

    fn from_parts(
        id: String,
        details: UserDetails,
        trajectory: Trajectory,
        registry: ToolRegistry,
        limits: Limits,
        clock: NaiveDateTime,
    ) -> Self {
        let mut stm = ShortTermMemory::new(id);
        for s in &trajectory.states {
            stm.observe(s);
        }
        Self {
            ctx: SessionContext {
                details,
                registry,
                trajectory,
                step_budget: limits.step_budget.max(1),
                clock,
            },
            limits,
            stm,
            awaiting: None,
            outcome: None,
            degraded: false,
        }
    }

    pub fn id(&self) -> &str {
        &self.stm.session_id
    }

    pub fn context(&self) -> &SessionContext {
        &self.ctx
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.ctx.trajectory
    }

    pub fn short_term(&self) -> &ShortTermMemory {
        &self.stm
    }

    pub fn awaiting(&self) -> Option<&str> {
        self.awaiting.as_deref()
    }

    /// Final outcome, once the session has stopped for good.
    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    fn push(&mut self, state: State) {
        self.stm.observe(&state);
        self.ctx.trajectory.push(state);
    }

    fn finish(&mut self, outcome: Outcome) -> Outcome {
        self.outcome = Some(outcome.clone());
        outcome
    }

    /// Drives the loop until `<END>`, a parked question, the budget, or an
    /// error.
    pub fn run(&mut self, world: &mut World, policy: &dyn PolicyBackend) -> Result<Outcome, AgentError> {
        if self.outcome.is_some() {
            return Err(AgentError::SessionFinished);
        }
        if let Some(q) = &self.awaiting {
            return Ok(Outcome::Suspended { question: q.clone() });
        }
        Ok(self.advance(world, policy))
    }

    /// Feeds the user's answer as the observation of the parked question.
    pub fn resume(
        &mut self,
        answer: impl Into<Value>,
        world: &mut World,
        policy: &dyn PolicyBackend,
    ) -> Result<Outcome, AgentError> {
        if self.outcome.is_some() {
            return Err(AgentError::SessionFinished);
        }
        if self.awaiting.take().is_none() {
            return Err(AgentError::NotAwaitingUser);
        }
        world.take_pending_question(self.ctx.details.user_id.as_str());
        self.push(State::observation(answer.into()));
        Ok(self.advance(world, policy))
    }

    fn advance(&mut self, world: &mut World, policy: &dyn PolicyBackend) -> Outcome {
        loop {
            let steps = self.ctx.trajectory.count(StateKind::Planner);
            if steps >= self.ctx.step_budget {
                return self.finish(Outcome::Exhausted { steps });
            }
            let step = match plan_step(&self.ctx, policy, &self.limits) {
                Ok(s) => s,
                Err(e) => return self.finish(Outcome::Failed { error: e.to_string() }),
            };
            let terminal = step.is_terminal();
            self.push(State::planner(step));
            if terminal {
                return self.finish(Outcome::Completed);
            }

            let call = match call_step(&self.ctx, policy, &self.limits) {
                Ok(c) => c,
                Err(AgentError::InvalidCallAfterRetry { call, report }) if !self.degraded => {
                    self.degraded = true;
                    self.push(State::caller(call));
                    self.push(State::observation(json!({"error": report.describe()})));
                    continue;
                }
                Err(e) => return self.finish(Outcome::Failed { error: e.to_string() }),
            };
            self.push(State::caller(call.clone()));

            let cctx = CallContext {
                user_id: self.ctx.details.user_id.to_string(),
                now: world.clock(),
            };
            match world.execute(&call, &cctx) {
                Ok(ExecOutcome::Observation(v)) => self.push(State::observation(v)),
                Ok(ExecOutcome::AwaitUser { question }) => {
                    self.awaiting = Some(question.clone());
                    return Outcome::Suspended { question };
                }
                Err(e) => {
                    tracing::info!(error = %e, "tool call rejected by the world");
                    self.push(State::observation(json!({"error": e.to_string()})));
                }
            }
        }
    }
}

pub fn run_session(
    query: &str,
    user: UserDetails,
    world: &mut World,
    registry: &ToolRegistry,
    policy: &dyn PolicyBackend,
    limits: Limits,
) -> SessionRun {
    let mut session = Session::new("run", user, query, registry.clone(), limits);
    let outcome = session
        .run(world, policy)
        .unwrap_or_else(|e| Outcome::Failed { error: e.to_string() });
    SessionRun { trajectory: session.ctx.trajectory, outcome }
}
