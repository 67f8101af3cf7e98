use serde::{Deserialize, Serialize};

use crate::trajectory::State;

/// Per-session scratch context. Lives only as long as the episode; nothing
/// here reaches the long-term store on its own.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShortTermMemory {
    pub session_id: String,
    pub current_symptoms: Option<String>,
    pub open_question: Option<String>,
    #[serde(skip)]
    pub turns: Vec<State>,
}

impl ShortTermMemory {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self { session_id: session_id.into(), ..Default::default() }
    }

    /// Records a state. Symptoms and pending questions are picked up from
    /// the tool calls that carry them; `<END>` clears everything.
    pub fn observe(&mut self, state: &State) {
        if let Some(call) = state.as_caller() {
            if let Some(s) = call.param_str("symptoms").filter(|_| call.tool != "notify_user") {
                self.current_symptoms = Some(s.to_string());
            }
            if call.tool == "get_input_from_user" {
                self.open_question = call.param_str("questions").map(str::to_string);
            }
        }
        if state.as_observation().is_some() {
            self.open_question = None;
        }
        if state.as_planner().is_some_and(|p| p.is_terminal()) {
            self.clear();
            return;
        }
        self.turns.push(state.clone());
    }

    pub fn clear(&mut self) {
        self.current_symptoms = None;
        self.open_question = None;
        self.turns.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.current_symptoms.is_none() && self.open_question.is_none() && self.turns.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goldens::Family;

    #[test]
    fn cleared_at_end() {
        let t = Family::General.golden();
        let mut stm = ShortTermMemory::new("s1");
        let mut saw_question = false;
        for s in &t.states[..t.states.len() - 1] {
            stm.observe(s);
            saw_question |= stm.open_question.is_some();
        }
        assert!(saw_question);
        assert_eq!(
            stm.current_symptoms.as_deref(),
            Some("fatigue, chills, body aches, sore throat")
        );
        stm.observe(t.states.last().unwrap());
        assert!(stm.is_empty());
    }
}
