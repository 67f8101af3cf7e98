//! Runtime for an on-device, multi-agent health assistant.
//!
//! The [`agent`] loop alternates a planner (reason + action) and a caller
//! (concrete tool call) over the simulated tool world in [`toolbox`].
//! [`health`] covers vitals monitoring, prescription reminders and daily
//! reports; [`memory`] holds short-term session context and the persistent
//! long-term store.

pub mod agent;
pub mod calendar;
pub mod catalog;
pub mod goldens;
pub mod health;
pub mod memory;
pub mod toolbox;
pub mod trajectory;

pub use trajectory::{
    parse_trajectory, serialize_trajectory, PlannerStep, State, StateKind, ToolCall, Trajectory,
    UserDetails, UserId,
};
