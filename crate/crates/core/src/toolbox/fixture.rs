//! Declarative world fixtures.
//!
//! ```json
//! {
//!   "clock": "2024-09-02T10:57:00",
//!   "users": [{"user_id": "JICC571413", "name": "Sakura Tominaga",
//!              "location": {"latitude": 35.6, "longitude": 139.7},
//!              "emergency_contacts": ["+15550000001"],
//!              "past_complaints": [{"date": "2024-06-02", "symptoms": "slight fever"}]}],
//!   "specialists": [{"specialist_id": "AECJ317777", "name": "Dr. Diego Arroyo",
//!                    "specialization": "general physician",
//!                    "slots": [{"date": "2024-11-30", "time": "11:00-11:30"}]}],
//!   "ambulances": [{"ambulance_id": "AMBpF0E", "phone_no": "+146910850030",
//!                   "location": {"latitude": 23.5, "longitude": 139.7}}],
//!   "assignments": {"EORZ618635": "AMBUaTg"}
//! }
//! ```

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::world::{Ambulance, GeoPoint, Specialist, UserProfile, World};
use super::ToolboxError;
use crate::calendar::Slot;
use crate::memory::{MemoryStore, PastComplaint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFixture {
    pub user_id: String,
    pub name: String,
    #[serde(default)]
    pub phone_no: Option<String>,
    pub location: GeoPoint,
    #[serde(default)]
    pub emergency_contacts: Vec<String>,
    #[serde(default)]
    pub past_complaints: Vec<PastComplaint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialistFixture {
    pub specialist_id: String,
    pub name: String,
    pub specialization: String,
    pub slots: Vec<Slot>,
}

pub type AmbulanceFixture = Ambulance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldFixture {
    pub clock: NaiveDateTime,
    #[serde(default)]
    pub users: Vec<UserFixture>,
    #[serde(default)]
    pub specialists: Vec<SpecialistFixture>,
    #[serde(default)]
    pub ambulances: Vec<AmbulanceFixture>,
    #[serde(default)]
    pub assignments: BTreeMap<String, String>,
}

impl WorldFixture {
    pub fn parse(text: &str) -> Result<Self, ToolboxError> {
        serde_json::from_str(text).map_err(|e| ToolboxError::InvalidFixture(e.to_string()))
    }

    /// Builds a world whose long-term data lives in `memory`. Users already
    /// known to the store keep their history; fixture complaints are only
    /// added for users the store has not seen.
    pub fn build(&self, memory: MemoryStore) -> Result<World, ToolboxError> {
        let bad = |m: String| ToolboxError::InvalidFixture(m);
        let mut world = World::new(self.clock, memory.clone());
        for u in &self.users {
            if !crate::trajectory::is_user_id(&u.user_id) {
                return Err(bad(format!("`{}` is not a user id", u.user_id)));
            }
            let fresh = !memory.has_user(&u.user_id);
            world
                .add_user(UserProfile {
                    user_id: u.user_id.clone(),
                    name: u.name.clone(),
                    phone_no: u.phone_no.clone(),
                    location: u.location,
                    emergency_contacts: u.emergency_contacts.clone(),
                })
                .map_err(|e| bad(e.to_string()))?;
            if fresh {
                for c in &u.past_complaints {
                    memory.store_past_complaint(&u.user_id, c).map_err(|e| bad(e.to_string()))?;
                }
            }
        }
        for s in &self.specialists {
            world.add_specialist(Specialist {
                specialist_id: s.specialist_id.clone(),
                name: s.name.clone(),
                specialization: s.specialization.clone(),
                slots: s.slots.clone(),
            });
        }
        for a in &self.ambulances {
            world.add_ambulance(a.clone());
        }
        for (user, amb) in &self.assignments {
            if world.user(user).is_none() {
                return Err(bad(format!("assignment for unknown user {user}")));
            }
            if !self.ambulances.iter().any(|a| &a.ambulance_id == amb) {
                return Err(bad(format!("assignment to unknown ambulance {amb}")));
            }
            world.assign_ambulance(user, amb);
        }
        Ok(world)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolbox::{CallContext, ExecOutcome};
    use crate::trajectory::ToolCall;
    use serde_json::json;

    const FIXTURE: &str = r#"{
      "clock": "2024-09-02T10:57:00",
      "users": [{"user_id": "JICC571413", "name": "Sakura Tominaga",
                 "location": {"latitude": 35.6, "longitude": 139.7},
                 "emergency_contacts": ["+15550000001"],
                 "past_complaints": [{"date": "2024-06-02", "symptoms": "mild body aches, slight fever"}]}],
      "specialists": [{"specialist_id": "AECJ317777", "name": "Dr. Diego Arroyo (General Physician)",
                       "specialization": "general physician",
                       "slots": [{"date": "2024-11-30", "time": "11:00-11:30"}]}],
      "ambulances": [{"ambulance_id": "AMBpF0E", "phone_no": "+146910850030",
                      "location": {"latitude": 35.61, "longitude": 139.71}}]
    }"#;

    #[test]
    fn fixture_builds_a_working_world() {
        let f = WorldFixture::parse(FIXTURE).unwrap();
        let mut w = f.build(MemoryStore::in_memory()).unwrap();
        let ctx = CallContext { user_id: "JICC571413".into(), now: f.clock };
        let got = w
            .execute(
                &ToolCall::new("retrieve_past_complaints")
                    .with("user_id", "JICC571413")
                    .with("symptoms", "fatigue, chills, body aches, sore throat"),
                &ctx,
            )
            .unwrap();
        assert_eq!(
            got,
            ExecOutcome::Observation(json!([{"date": "2024-06-02", "symptoms": "mild body aches, slight fever"}]))
        );
    }

    #[test]
    fn dangling_assignment_is_rejected() {
        let mut f = WorldFixture::parse(FIXTURE).unwrap();
        f.assignments.insert("JICC571413".into(), "AMBnope".into());
        assert!(matches!(f.build(MemoryStore::in_memory()), Err(ToolboxError::InvalidFixture(_))));
    }
}
