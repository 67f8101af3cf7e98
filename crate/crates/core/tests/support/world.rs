//! A small world fixture and one well-formed call per registered tool.

use medagent_core::memory::MemoryStore;
use medagent_core::toolbox::{World, WorldFixture};
use medagent_core::trajectory::ToolCall;
use serde_json::{json, Value};

pub const FIXTURE: &str = r#"{
  "clock": "2024-09-02T10:57:00",
  "users": [
    {"user_id": "JICC571413", "name": "Sakura Tominaga",
     "location": {"latitude": 35.6895, "longitude": 139.6917},
     "emergency_contacts": ["+15550000001", "+15550000002"],
     "past_complaints": [{"date": "2024-06-02", "symptoms": "mild body aches, slight fever"}]},
    {"user_id": "EORZ618635", "name": "Jonas Weber",
     "location": {"latitude": 23.5326, "longitude": 139.7524},
     "emergency_contacts": ["+15550000003"]}
  ],
  "specialists": [
    {"specialist_id": "AECJ317777", "name": "Dr. Diego Arroyo (General Physician)",
     "specialization": "general physician",
     "slots": [{"date": "2024-11-30", "time": "11:00-11:30"}, {"date": "2024-12-02", "time": "09:00-09:30"}]}
  ],
  "ambulances": [
    {"ambulance_id": "AMBpF0E", "phone_no": "+146910850030", "location": {"latitude": 23.53, "longitude": 139.75}},
    {"ambulance_id": "AMBzz01", "phone_no": "+146910850031", "location": {"latitude": 40.0, "longitude": 100.0}}
  ]
}"#;

pub fn world() -> World {
    WorldFixture::parse(FIXTURE).unwrap().build(MemoryStore::in_memory()).unwrap()
}

/// Whether `v` has the declared return type.
pub fn shaped_as(declared: &str, v: &Value) -> bool {
    match declared {
        "boolean" => v.is_boolean(),
        "string" => v.is_string(),
        "array" => v.is_array(),
        "object" | "dictionary" => v.is_object(),
        _ => false,
    }
}

/// Calls for every tool except `get_input_from_user`, in an order that
/// succeeds against [`world`] for user `u`.
pub fn conformance_calls(u: &str) -> Vec<ToolCall> {
    vec![
        ToolCall::new("get_location"),
        ToolCall::new("search_ambulance").with("location", json!({"latitude": 23.5326, "longitude": 139.7524})),
        ToolCall::new("get_assigned_ambulance").with("user_id", u),
        ToolCall::new("send_message").with("phone_no", "+146910850030").with("text", "Ambulance needed at location"),
        ToolCall::new("get_available_specialists").with("symptoms", "fever").with("specialization", "general physician"),
        ToolCall::new("confirm_appointment")
            .with("user_id", u)
            .with("specialist_id", "AECJ317777")
            .with("appointment_time_date", "11:00-11:30, 30/11/2024"),
        ToolCall::new("save_appointment_history")
            .with("user_id", u)
            .with("specialist_id", "AECJ317777")
            .with("symptoms", "fever")
            .with("appointment_time_date", "11:00-11:30, 30/11/2024"),
        ToolCall::new("get_appointment_history").with("user_id", u),
        ToolCall::new("retrieve_past_complaints").with("user_id", u).with("symptoms", "body aches"),
        ToolCall::new("follow_up_with_user").with("user_id", u).with("current_symptoms", "fever"),
        ToolCall::new("notify_user").with("user_id", u).with("message", "done"),
        ToolCall::new("store_symptoms").with("user_id", u).with("symptoms", "fever").with("timestamp", "2024-09-02T10:57:00"),
    ]
}
