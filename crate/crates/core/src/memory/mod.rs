//! Short-term session context and the persistent long-term store.

pub mod entities;
mod stm;
mod store;

pub use entities::{
    default_extractor, extract_entities_rule_based, symptom_keys, Entity, EntityExtractor,
    EntityLabel, RuleBasedExtractor,
};
pub use stm::ShortTermMemory;
pub use store::{AppointmentRecord, Collection, MemoryError, MemoryStore, PastComplaint, Record};
