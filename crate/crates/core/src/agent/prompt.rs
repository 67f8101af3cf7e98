//! Prompt templates shared by the live loop and training-sample rendering.
//!
//! Layout, one section per `### ` header:
//!
//! ```text
//! ### role: planner
//! <instruction>
//! ### user
//! {"user_id": ..., "name": ..., "timestamp": ...}
//! ### tools
//! {one tool spec per line, in premise order}
//! ### history
//! {one state per line; the last line is the latest state}
//! ```

use serde_json::Value;

use super::{AgentError, Role};
use crate::toolbox::ToolRegistry;
use crate::trajectory::{State, TrajectoryError};

pub const TEMPLATE_VERSION: &str = "medagent-prompt/1";

const PLANNER_INSTRUCTION: &str = "Decide the next single action from the tools and the interaction so far. \
Reply exactly as <reason>why</reason><action>what to do next</action>. \
When the task is complete reply with <END> as the action.";

const CALLER_INSTRUCTION: &str = "Turn the last planner action into one tool call. \
Reply exactly as <tool>tool_name</tool><parameters>{json object}</parameters>.";

const REPORT_INSTRUCTION: &str = "Write a short, plain-language summary of the day for the user. \
Do not diagnose or recommend treatment.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptConfig {
    pub context_tokens: usize,
    pub chars_per_token: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self { context_tokens: 4096, chars_per_token: 4 }
    }
}

impl PromptConfig {
    pub fn budget_chars(&self) -> usize {
        self.context_tokens.saturating_mul(self.chars_per_token)
    }

    pub fn check(&self, prompt: String) -> Result<String, AgentError> {
        let chars = prompt.chars().count();
        let budget = self.budget_chars();
        if chars > budget {
            Err(AgentError::ContextOverflow { chars, budget })
        } else {
            Ok(prompt)
        }
    }
}

fn instruction(role: Role) -> &'static str {
    match role {
        Role::Planner => PLANNER_INSTRUCTION,
        Role::Caller => CALLER_INSTRUCTION,
        Role::Report => REPORT_INSTRUCTION,
    }
}

/// Deterministic render of `states` for `role`. No budget check.
pub fn render_prompt(role: Role, registry: &ToolRegistry, states: &[State]) -> String {
    let details = states
        .first()
        .and_then(|s| match &s.payload {
            crate::trajectory::Payload::System(d) => Some(d.to_value()),
            _ => None,
        })
        .unwrap_or(Value::Object(Default::default()));
    let tools: Vec<String> = registry.tools().iter().map(|t| t.to_document().to_string()).collect();
    let history: Vec<String> = states.iter().map(|s| s.to_value().to_string()).collect();
    render_prompt_parts(role, &details.to_string(), tools.iter().map(String::as_str), history.iter().map(String::as_str))
}

/// Same layout as [`render_prompt`] from pieces serialized up front, for
/// callers that render many prompts over one episode.
pub fn render_prompt_parts<'a>(
    role: Role,
    user: &str,
    tool_docs: impl IntoIterator<Item = &'a str>,
    history: impl IntoIterator<Item = &'a str>,
) -> String {
    let mut out = String::with_capacity(8192);
    out.push_str("### role: ");
    out.push_str(role.as_str());
    out.push('\n');
    out.push_str(instruction(role));
    out.push_str("\n### user\n");
    out.push_str(user);
    out.push_str("\n### tools\n");
    for doc in tool_docs {
        out.push_str(doc);
        out.push('\n');
    }
    out.push_str("### history");
    for s in history {
        out.push('\n');
        out.push_str(s);
    }
    out
}

/// Prompt asking for a report narrative over `summary`.
pub fn render_report_prompt(summary: &Value) -> String {
    format!(
        "### role: report\n{}\n### data\n{}",
        instruction(Role::Report),
        summary
    )
}

/// Appends the validator's complaint so the caller can fix its call.
pub fn corrective_prompt(base: &str, report: &str) -> String {
    format!("{base}\n### correction\nThe previous call was rejected: {report}. Reply with a corrected call.")
}

pub fn build_planner_prompt(
    registry: &ToolRegistry,
    states: &[State],
    cfg: &PromptConfig,
) -> Result<String, AgentError> {
    cfg.check(render_prompt(Role::Planner, registry, states))
}

pub fn build_caller_prompt(
    registry: &ToolRegistry,
    states: &[State],
    cfg: &PromptConfig,
) -> Result<String, AgentError> {
    cfg.check(render_prompt(Role::Caller, registry, states))
}

pub fn prompt_role(prompt: &str) -> Option<Role> {
    match prompt.lines().next()?.strip_prefix("### role: ")? {
        "planner" => Some(Role::Planner),
        "caller" => Some(Role::Caller),
        "report" => Some(Role::Report),
        _ => None,
    }
}

fn section<'a>(prompt: &'a str, name: &str) -> impl Iterator<Item = &'a str> {
    let header = format!("### {name}");
    prompt
        .lines()
        .skip_while(move |l| *l != header)
        .skip(1)
        .take_while(|l| !l.starts_with("### "))
        .filter(|l| !l.trim().is_empty())
}

/// Recovers the history section of a rendered prompt.
pub fn parse_history(prompt: &str) -> Result<Vec<State>, TrajectoryError> {
    section(prompt, "history")
        .enumerate()
        .map(|(i, line)| {
            let v: Value = serde_json::from_str(line)
                .map_err(|e| TrajectoryError::MalformedDocument(e.to_string()))?;
            State::from_value(i, &v)
        })
        .collect()
}

/// Tool names in the order the prompt lists them.
pub fn parse_tool_names(prompt: &str) -> Vec<String> {
    section(prompt, "tools")
        .filter_map(|l| serde_json::from_str::<Value>(l).ok())
        .filter_map(|v| v.get("Name").and_then(Value::as_str).map(str::to_string))
        .collect()
}
