use chrono::NaiveDate;
use medagent_core::catalog::{diseases, Disease};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_WINDOW_DAYS: i64 = 90;

const FIRST_NAMES: &[&str] = &[
    "Sakura", "Juan", "Leah", "Jace", "Amara", "Noah", "Priya", "Mateo", "Ingrid", "Kofi", "Elena", "Hiro",
    "Fatima", "Lucas", "Zara", "Omar", "Mei", "Diego", "Anika", "Tomas", "Nadia", "Felix", "Ayesha", "Liam",
    "Sofia", "Ravi", "Chloe", "Emeka", "Yuki", "Marta", "Idris", "Hana", "Pablo", "Greta", "Arjun", "Lena",
    "Samir", "Rosa", "Kenji", "Alma",
];

const LAST_NAMES: &[&str] = &[
    "Tominaga", "Martinez", "Lima", "Cardoso", "Okafor", "Schmidt", "Patel", "Rossi", "Nakamura", "Haddad",
    "Novak", "Silva", "Andersen", "Mensah", "Kowalski", "Fernandes", "Ibrahim", "Larsen", "Moreau", "Chen",
    "Duarte", "Varga", "Osei", "Lindqvist", "Rahman", "Costa", "Petrov", "Abe", "Herrera", "Nyberg", "Sato",
    "Quinn", "Delgado", "Mwangi", "Yilmaz", "Brennan", "Castillo", "Horvat", "Iyer", "Keller",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("temporal window must be positive, got {0}")]
    Window(i64),
    #[error("{0} pool is empty")]
    EmptyPool(&'static str),
    #[error("date range is empty")]
    DateRange,
}

/// Knobs shared by generation and enhancement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnhancementConfig {
    pub seed: u64,
    pub first_names: Vec<String>,
    pub last_names: Vec<String>,
    /// Appointments fall within `(query date, query date + window_days]`.
    pub window_days: i64,
    /// Oldest past complaint, in days before the query.
    pub history_days: i64,
    /// Query dates are drawn from this inclusive range.
    pub earliest: NaiveDate,
    pub latest: NaiveDate,
}

impl Default for EnhancementConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            first_names: FIRST_NAMES.iter().map(|s| s.to_string()).collect(),
            last_names: LAST_NAMES.iter().map(|s| s.to_string()).collect(),
            window_days: DEFAULT_WINDOW_DAYS,
            history_days: 730,
            earliest: NaiveDate::from_ymd_opt(2023, 1, 1).expect("valid date"),
            latest: NaiveDate::from_ymd_opt(2025, 12, 31).expect("valid date"),
        }
    }
}

impl EnhancementConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window_days <= 0 {
            return Err(ConfigError::Window(self.window_days));
        }
        if self.first_names.is_empty() {
            return Err(ConfigError::EmptyPool("first name"));
        }
        if self.last_names.is_empty() {
            return Err(ConfigError::EmptyPool("last name"));
        }
        if self.earliest > self.latest || self.history_days < 1 {
            return Err(ConfigError::DateRange);
        }
        if diseases().is_empty() {
            return Err(ConfigError::EmptyPool("disease"));
        }
        Ok(())
    }

    pub fn diseases(&self) -> &'static [Disease] {
        diseases()
    }
}
