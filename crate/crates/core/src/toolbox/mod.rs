//! Tool registry, call validation and the simulated world that executes
//! every registered tool.

mod fixture;
mod registry;
mod validate;
mod world;

use thiserror::Error;

pub use fixture::{AmbulanceFixture, SpecialistFixture, UserFixture, WorldFixture};
pub use registry::{
    load_default_registry, shuffle_tools, shuffled_order, ParamSpec, ParamType, ReturnSpec, ToolRegistry, ToolSpec,
};
pub use validate::{normalize_call, validate_call, TypeMismatch, ValidationReport};
pub use world::{
    Ambulance, CallContext, ExecOutcome, GeoPoint, MessageEntry, NotificationEntry, Specialist,
    UserProfile, World,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToolboxError {
    #[error("invalid tool registry: {0}")]
    InvalidRegistry(String),
    #[error("invalid world fixture: {0}")]
    InvalidFixture(String),
}

/// Reasons the world refuses a call. Awaiting user input is not an error;
/// see [`ExecOutcome::AwaitUser`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToolError {
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("invalid call to `{tool}`: {message}")]
    InvalidCall { tool: String, message: String },
}

impl ToolError {
    pub(crate) fn invalid(tool: &str, message: impl Into<String>) -> Self {
        ToolError::InvalidCall { tool: tool.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryAck {
    pub delivered: bool,
    pub reference: Option<String>,
}

/// Outbound SMS. The world always records messages in its own log; a
/// configured gateway additionally delivers them.
pub trait SmsGateway: Send + Sync {
    fn send(&self, phone_no: &str, text: &str) -> Result<DeliveryAck, String>;
}

/// Acknowledges everything and sends nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct MockSms;

impl SmsGateway for MockSms {
    fn send(&self, _phone_no: &str, _text: &str) -> Result<DeliveryAck, String> {
        Ok(DeliveryAck { delivered: true, reference: None })
    }
}
