//! Vitals samples, threshold checks and soft-SOS triggering.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use chrono::{Duration, NaiveDateTime};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SleepMinutes {
    pub deep: u32,
    pub light: u32,
    pub rem: u32,
    pub awake: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BloodPressure {
    pub systolic: u32,
    pub diastolic: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalsSample {
    pub timestamp: NaiveDateTime,
    /// Beats per minute.
    pub heart_rate: u32,
    /// SpO2 percentage.
    pub oxygen: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sleep: Option<SleepMinutes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blood_pressure: Option<BloodPressure>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VitalsError {
    #[error("heart_rate must be positive")]
    HeartRate,
    #[error("oxygen must be in (0, 100]")]
    Oxygen,
    #[error("blood pressure must be positive with systolic above diastolic")]
    BloodPressure,
    #[error("threshold for {0} has min >= max")]
    Thresholds(Metric),
}

impl VitalsSample {
    pub fn validate(&self) -> Result<(), VitalsError> {
        if self.heart_rate == 0 {
            return Err(VitalsError::HeartRate);
        }
        if self.oxygen == 0 || self.oxygen > 100 {
            return Err(VitalsError::Oxygen);
        }
        if let Some(bp) = self.blood_pressure {
            if bp.diastolic == 0 || bp.systolic <= bp.diastolic {
                return Err(VitalsError::BloodPressure);
            }
        }
        Ok(())
    }

    pub fn value(&self, m: Metric) -> Option<u32> {
        match m {
            Metric::HeartRate => Some(self.heart_rate),
            Metric::Oxygen => Some(self.oxygen),
            Metric::Systolic => self.blood_pressure.map(|b| b.systolic),
            Metric::Diastolic => self.blood_pressure.map(|b| b.diastolic),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    HeartRate,
    Oxygen,
    Systolic,
    Diastolic,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::HeartRate, Metric::Oxygen, Metric::Systolic, Metric::Diastolic];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::HeartRate => "heart_rate",
            Metric::Oxygen => "oxygen",
            Metric::Systolic => "systolic",
            Metric::Diastolic => "diastolic",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive normal range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub min: u32,
    pub max: u32,
}

impl Range {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: u32) -> bool {
        self.min <= v && v <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VitalsThresholds {
    pub heart_rate: Range,
    pub oxygen: Range,
    pub systolic: Range,
    pub diastolic: Range,
}

impl Default for VitalsThresholds {
    fn default() -> Self {
        Self {
            heart_rate: Range::new(60, 100),
            oxygen: Range::new(95, 100),
            systolic: Range::new(90, 140),
            diastolic: Range::new(60, 90),
        }
    }
}

impl VitalsThresholds {
    pub fn range(&self, m: Metric) -> Range {
        match m {
            Metric::HeartRate => self.heart_rate,
            Metric::Oxygen => self.oxygen,
            Metric::Systolic => self.systolic,
            Metric::Diastolic => self.diastolic,
        }
    }

    pub fn validate(&self) -> Result<(), VitalsError> {
        match Metric::ALL.into_iter().find(|m| self.range(*m).min >= self.range(*m).max) {
            Some(m) => Err(VitalsError::Thresholds(m)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abnormality {
    pub metric: Metric,
    pub value: u32,
    pub normal: Range,
}

/// Out-of-range metrics, in [`Metric::ALL`] order. Empty means normal.
pub fn check_vitals(s: &VitalsSample, t: &VitalsThresholds) -> Vec<Abnormality> {
    Metric::ALL
        .into_iter()
        .filter_map(|m| {
            let value = s.value(m)?;
            let normal = t.range(m);
            (!normal.contains(value)).then_some(Abnormality { metric: m, value, normal })
        })
        .collect()
}

/// User message that opens a soft-SOS episode, e.g.
/// `Soft SOS triggered. Abnormal Vitals: {'oxygen': 85, 'heart_rate': 41}`.
pub fn soft_sos_query(s: &VitalsSample) -> String {
    let mut parts = vec![
        format!("'oxygen': {}", s.oxygen),
        format!("'heart_rate': {}", s.heart_rate),
    ];
    if let Some(bp) = s.blood_pressure {
        parts.push(format!("'blood_pressure': ({}, {})", bp.systolic, bp.diastolic));
    }
    if let Some(sl) = s.sleep {
        parts.push(format!(
            "'sleep': {{'deep': {}, 'light': {}, 'rem': {}, 'awake': {}}}",
            sl.deep, sl.light, sl.rem, sl.awake
        ));
    }
    format!("Soft SOS triggered. Abnormal Vitals: {{{}}}", parts.join(", "))
}

/// The readings quoted in a soft-SOS query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QuotedVitals {
    pub heart_rate: Option<u32>,
    pub oxygen: Option<u32>,
    pub blood_pressure: Option<BloodPressure>,
}

pub fn parse_soft_sos_query(q: &str) -> QuotedVitals {
    static RE: OnceLock<[Regex; 3]> = OnceLock::new();
    let [hr, o2, bp] = RE.get_or_init(|| {
        [
            Regex::new(r"'heart_rate':\s*(\d+)").expect("static pattern"),
            Regex::new(r"'oxygen':\s*(\d+)").expect("static pattern"),
            Regex::new(r"'blood_pressure':\s*\((\d+),\s*(\d+)\)").expect("static pattern"),
        ]
    });
    let grab = |re: &Regex| re.captures(q).and_then(|c| c.get(1)?.as_str().parse::<u32>().ok());
    let bp = bp.captures(q).and_then(|c| {
        Some(BloodPressure {
            systolic: c.get(1)?.as_str().parse().ok()?,
            diastolic: c.get(2)?.as_str().parse().ok()?,
        })
    });
    QuotedVitals { heart_rate: grab(hr), oxygen: grab(o2), blood_pressure: bp }
}

/// Alert text shown to the user; readings that are unknown are omitted.
pub fn soft_sos_alert(v: &QuotedVitals) -> String {
    let mut msg = String::from(
        "Soft SOS triggered. Abnormal vitals detected.\nIf you are feeling unwell, contact emergency services or book an appointment.\n\nYour Vitals-",
    );
    if let Some(hr) = v.heart_rate {
        msg.push_str(&format!("\nHeart Rate: {hr} bps"));
    }
    if let Some(o2) = v.oxygen {
        msg.push_str(&format!("\nOxygen: {o2}"));
    }
    if let Some(bp) = v.blood_pressure {
        msg.push_str(&format!("\nBlood Pressure: {}/{}", bp.systolic, bp.diastolic));
    }
    msg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorDecision {
    pub abnormal: Vec<Abnormality>,
    /// Metrics that fired this time (not cooling down).
    pub triggered: Vec<Metric>,
}

impl MonitorDecision {
    pub fn soft_sos(&self) -> bool {
        !self.triggered.is_empty()
    }
}

/// Decides when abnormal readings raise a soft SOS: at most once per
/// metric per user within the cool-down window. Decisions for one user are
/// serialized.
#[derive(Debug)]
pub struct VitalsMonitor {
    thresholds: VitalsThresholds,
    cooldown: Duration,
    last_fired: Mutex<HashMap<(String, Metric), NaiveDateTime>>,
}

impl Default for VitalsMonitor {
    fn default() -> Self {
        Self::new(VitalsThresholds::default(), Duration::minutes(30))
    }
}

impl VitalsMonitor {
    pub fn new(thresholds: VitalsThresholds, cooldown: Duration) -> Self {
        Self { thresholds, cooldown, last_fired: Mutex::new(HashMap::new()) }
    }

    pub fn thresholds(&self) -> &VitalsThresholds {
        &self.thresholds
    }

    pub fn ingest(&self, user_id: &str, s: &VitalsSample) -> MonitorDecision {
        let abnormal = check_vitals(s, &self.thresholds);
        let mut last = self.last_fired.lock().unwrap_or_else(|e| e.into_inner());
        let mut triggered = Vec::new();
        for a in &abnormal {
            let key = (user_id.to_string(), a.metric);
            let cooling = last
                .get(&key)
                .is_some_and(|t| s.timestamp >= *t && s.timestamp - *t < self.cooldown);
            if !cooling {
                last.insert(key, s.timestamp);
                triggered.push(a.metric);
            }
        }
        MonitorDecision { abnormal, triggered }
    }
}
