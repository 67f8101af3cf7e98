use super::prompt::{parse_history, prompt_role};
use super::{PolicyBackend, PolicyError, Role};
use crate::goldens::Family;
use crate::trajectory::{
    render_caller_output, render_planner_output, PlannerStep, State, StateKind, ToolCall,
    Trajectory,
};

/// Replays a recorded episode. Position is derived from the history inside
/// the prompt (the k-th planner prompt gets the script's k-th planner step),
/// so the policy holds no cursor and survives suspension and restarts.
///
/// Branches switch scripts when an answer from the user starts with the
/// branch trigger, compared case-insensitively.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    main: Trajectory,
    branches: Vec<(String, Trajectory)>,
}

impl ScriptedPolicy {
    pub fn new(script: Trajectory) -> Self {
        Self { main: script, branches: Vec::new() }
    }

    pub fn for_family(family: Family) -> Self {
        Self::new(family.golden())
    }

    pub fn with_branch(mut self, trigger: impl Into<String>, script: Trajectory) -> Self {
        self.branches.push((trigger.into().to_lowercase(), script));
        self
    }

    fn script_for(&self, history: &[State]) -> &Trajectory {
        let mut chosen = &self.main;
        for s in history {
            let Some(text) = s.as_observation().and_then(answer_text) else { continue };
            let text = text.trim().to_lowercase();
            if let Some((_, script)) = self.branches.iter().find(|(t, _)| text.starts_with(t.as_str())) {
                chosen = script;
            }
        }
        chosen
    }

    pub fn next_step(&self, history: &[State]) -> Option<PlannerStep> {
        let k = history.iter().filter(|s| s.kind() == StateKind::Planner).count();
        self.script_for(history).planner_steps().nth(k).cloned()
    }

    pub fn next_call(&self, history: &[State]) -> Option<ToolCall> {
        let k = history.iter().filter(|s| s.kind() == StateKind::Caller).count();
        self.script_for(history).calls().nth(k).cloned()
    }
}

/// Free-text user answer carried by an observation, either a bare string
/// or `{"user": "..."}`.
pub fn answer_text(v: &serde_json::Value) -> Option<&str> {
    v.as_str().or_else(|| v.get("user").and_then(serde_json::Value::as_str))
}

impl PolicyBackend for ScriptedPolicy {
    fn complete(&self, prompt: &str, role: Role) -> Result<String, PolicyError> {
        let history = parse_history(prompt).map_err(|e| PolicyError::Backend(e.to_string()))?;
        let role = prompt_role(prompt).unwrap_or(role);
        let out = match role {
            Role::Planner => self.next_step(&history).map(|s| render_planner_output(&s)),
            Role::Caller => self.next_call(&history).map(|c| render_caller_output(&c)),
            Role::Report => None,
        };
        out.ok_or_else(|| PolicyError::Backend(format!("script has no further {role} output")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::prompt::render_prompt;
    use crate::toolbox::load_default_registry;

    #[test]
    fn first_planner_output_matches_golden() {
        let t = Family::General.golden();
        let policy = ScriptedPolicy::new(t.clone());
        let p = render_prompt(Role::Planner, &load_default_registry(), &t.states[..2]);
        let out = policy.complete(&p, Role::Planner).unwrap();
        assert!(out.contains(
            "<action>Check for past similar complaints using the retrieve_past_complaints tool.</action>"
        ));
    }

    #[test]
    fn branch_switches_on_answer() {
        let main = Family::General.golden();
        let alt = Family::Negative.golden();
        let policy = ScriptedPolicy::new(main.clone()).with_branch("no", alt.clone());
        let mut history = main.states[..10].to_vec();
        history.push(State::observation(serde_json::json!("No, not at this time.")));
        assert_eq!(policy.next_step(&history), alt.planner_steps().nth(3).cloned());
        history.pop();
        history.push(State::observation(serde_json::json!("Yes, please")));
        assert_eq!(policy.next_step(&history), main.planner_steps().nth(3).cloned());
    }
}
