//! Splits episodes into supervised samples: one planner sample per planner
//! state and one caller sample per caller state. Each sample sees the
//! history strictly before its target and a freshly permuted tool list, so
//! a model cannot lean on tool order.

use medagent_core::agent::prompt::render_prompt_parts;
use medagent_core::agent::Role;
use medagent_core::toolbox::{shuffled_order, ToolRegistry};
use medagent_core::trajectory::{render_caller_output, render_planner_output, Payload, Trajectory};
use serde::{Deserialize, Serialize};

use crate::generate::family_of;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    pub input: String,
    pub output: String,
}

pub fn sample_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(index as u64)
}

/// Sample `k` of an episode uses `reg.shuffled(sample_seed(seed, k))`.
pub fn interleave(t: &Trajectory, reg: &ToolRegistry, seed: u64) -> Vec<TrainingSample> {
    let family = family_of(t).map(|f| f.as_str().to_string());
    // serialize every piece once; prompts differ only in order and length
    let docs: Vec<String> = reg.tools().iter().map(|d| d.to_document().to_string()).collect();
    let history: Vec<String> = t.states.iter().map(|s| s.to_value().to_string()).collect();
    let user = t.user_details().map_or_else(|| "{}".to_string(), |d| d.to_value().to_string());
    t.states
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let (role, output) = match &s.payload {
                Payload::Planner(p) => (Role::Planner, render_planner_output(p)),
                Payload::Caller(c) => (Role::Caller, render_caller_output(c)),
                _ => return None,
            };
            let order = shuffled_order(docs.len(), sample_seed(seed, i));
            let input = render_prompt_parts(
                role,
                &user,
                order.iter().map(|k| docs[*k].as_str()),
                history[..i].iter().map(String::as_str),
            );
            Some(TrainingSample { role, family: family.clone(), input, output })
        })
        .collect()
}
