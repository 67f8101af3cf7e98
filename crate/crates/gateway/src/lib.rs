//! Service layer for the health assistant: chat sessions that suspend on
//! questions to the user, vitals ingestion with soft-SOS alerts, hard-SOS
//! control, prescription reminders and daily reports, over plain
//! request/response HTTP.

pub mod cli;
pub mod clock;
pub mod config;
pub mod error;
pub mod http;
pub mod replay;
pub mod service;
pub mod session;
pub mod sms;

pub use clock::{Clock, ManualClock, OffsetClock, SystemClock};
pub use config::{Config, SmsMode};
pub use error::GatewayError;
pub use http::router;
pub use replay::{replay_file, replay_trajectory, Divergence, ReplayReport};
pub use service::{
    Policies, PrescriptionOutcome, Service, ServiceOptions, SosKind, VitalsInput, VitalsOutcome,
};
pub use session::{LogEvent, SessionHandle, SessionInfo, SessionKind, SessionStatus};
