//! Re-runs a recorded episode through the service with a scripted policy
//! and a world seeded from the episode, then diffs the result against it.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use medagent_core::agent::ScriptedPolicy;
use medagent_core::toolbox::World;
use medagent_core::trajectory::{parse_trajectory, Trajectory};
use serde::Serialize;
use serde_json::Value;

use crate::clock::ManualClock;
use crate::error::GatewayError;
use crate::service::{Policies, Service, ServiceOptions, SosKind};
use crate::session::{SessionKind, SessionStatus};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub index: usize,
    /// The recorded state, or `None` past the end of the recording.
    pub expected: Option<Value>,
    pub actual: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub status: SessionStatus,
    pub states: usize,
    pub divergence: Option<Divergence>,
}

impl ReplayReport {
    pub fn is_identical(&self) -> bool {
        self.divergence.is_none() && self.status == SessionStatus::Completed
    }
}

impl fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<Value>| v.as_ref().map_or("(none)".to_string(), Value::to_string);
        match &self.divergence {
            None if self.status == SessionStatus::Completed => write!(f, "identical ({} states)", self.states),
            None => write!(f, "states match but the session ended {:?}", self.status),
            Some(d) => write!(
                f,
                "diverges at state {}\n  expected: {}\n  actual:   {}",
                d.index,
                show(&d.expected),
                show(&d.actual)
            ),
        }
    }
}

pub fn replay_trajectory(t: &Trajectory) -> Result<ReplayReport, GatewayError> {
    let details = t
        .user_details()
        .ok_or_else(|| GatewayError::BadRequest("episode has no system state".into()))?;
    let query = t.query().ok_or_else(|| GatewayError::BadRequest("episode has no user query".into()))?;
    let uid = details.user_id.to_string();
    let svc = Service::new(
        World::from_trajectory(t),
        Policies::new(Arc::new(ScriptedPolicy::new(t.clone()))),
        Arc::new(ManualClock::new(details.timestamp)),
        ServiceOptions::default(),
    );
    let ran = match SessionKind::of_query(query) {
        SessionKind::Chat => svc.chat(&uid, query, None),
        SessionKind::HardSosStart => svc.sos(&uid, SosKind::HardStart),
        SessionKind::HardSosEnd => svc.sos(&uid, SosKind::HardEnd),
        SessionKind::SoftSos => svc.open(&uid, SessionKind::SoftSos, query),
    };
    let handle = match ran {
        Ok(h) => h,
        Err(GatewayError::SessionFailed(h)) => *h,
        Err(e) => return Err(e),
    };
    let got = svc.trajectory(&handle.session_id)?;
    let n = got.states.len().max(t.states.len());
    let divergence = (0..n)
        .find(|&i| got.states.get(i) != t.states.get(i))
        .map(|i| Divergence {
            index: i,
            expected: t.states.get(i).map(|s| s.to_value()),
            actual: got.states.get(i).map(|s| s.to_value()),
        });
    Ok(ReplayReport { status: handle.status, states: got.states.len(), divergence })
}

pub fn replay_file(path: &Path) -> anyhow::Result<ReplayReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let t = parse_trajectory(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(replay_trajectory(&t)?)
}
