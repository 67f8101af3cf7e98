//! Date and time formats shared by tools, data generation and evaluation.
//!
//! Canonical storage is `YYYY-MM-DD` for dates and `HH:MM-HH:MM` for slots.
//! Tool calls carry `appointment_time_date` as `HH:MM-HH:MM, DD/MM/YYYY`;
//! `DD/MM/YY` and ISO dates are accepted on ingest.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    let parts: Vec<&str> = s.split('/').collect();
    if parts.len() != 3 || parts.iter().any(|p| p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit())) {
        return None;
    }
    let day: u32 = parts[0].parse().ok()?;
    let month: u32 = parts[1].parse().ok()?;
    let year: i32 = match parts[2].len() {
        4 => parts[2].parse().ok()?,
        2 => 2000 + parts[2].parse::<i32>().ok()?,
        _ => return None,
    };
    NaiveDate::from_ymd_opt(year, month, day)
}

pub fn format_date(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

pub fn format_date_dmy(d: NaiveDate) -> String {
    d.format("%d/%m/%Y").to_string()
}

fn parse_hhmm(s: &str) -> Option<NaiveTime> {
    let s = s.trim();
    let (h, m) = s.split_once(':')?;
    if h.len() != 2 || m.len() != 2 {
        return None;
    }
    NaiveTime::from_hms_opt(h.parse().ok()?, m.parse().ok()?, 0)
}

/// A half-open appointment window such as `11:00-11:30`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TimeRange {
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl TimeRange {
    pub fn new(start: NaiveTime, end: NaiveTime) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, other: &TimeRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn minutes(&self) -> i64 {
        (self.end - self.start).num_minutes()
    }
}

impl fmt::Display for TimeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start.format("%H:%M"), self.end.format("%H:%M"))
    }
}

impl FromStr for TimeRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| format!("`{s}` is not HH:MM-HH:MM"))?;
        let start = parse_hhmm(a).ok_or_else(|| format!("bad start time in `{s}`"))?;
        let end = parse_hhmm(b).ok_or_else(|| format!("bad end time in `{s}`"))?;
        if end <= start {
            return Err(format!("`{s}` ends before it starts"));
        }
        Ok(Self { start, end })
    }
}

impl TryFrom<String> for TimeRange {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TimeRange> for String {
    fn from(t: TimeRange) -> Self {
        t.to_string()
    }
}

/// A dated appointment window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub date: NaiveDate,
    pub time: TimeRange,
}

impl Slot {
    pub fn new(date: NaiveDate, time: TimeRange) -> Self {
        Self { date, time }
    }

    /// The `appointment_time_date` rendering used in tool calls.
    pub fn to_call_format(&self) -> String {
        format!("{}, {}", self.time, format_date_dmy(self.date))
    }

    /// Parses `HH:MM-HH:MM, DD/MM/YYYY`, `HH:MM-HH:MM, DD/MM/YY`,
    /// `HH:MM-HH:MM, YYYY-MM-DD`, or the date-first variants.
    pub fn parse_call_format(s: &str) -> Option<Slot> {
        let s = s.trim();
        let (a, b) = s
            .split_once(',')
            .or_else(|| s.split_once(' '))?;
        let (a, b) = (a.trim(), b.trim());
        if let (Ok(time), Some(date)) = (a.parse::<TimeRange>(), parse_date(b)) {
            return Some(Slot { date, time });
        }
        if let (Some(date), Ok(time)) = (parse_date(a), b.parse::<TimeRange>()) {
            return Some(Slot { date, time });
        }
        None
    }
}

pub fn ordinal_suffix(day: u32) -> &'static str {
    match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

/// `November 30th`
pub fn spoken_date(d: NaiveDate) -> String {
    format!("{} {}{}", d.format("%B"), d.day(), ordinal_suffix(d.day()))
}

/// `11:00 AM`, `4:00 PM`
pub fn spoken_time(t: NaiveTime) -> String {
    let (pm, hour) = t.hour12();
    format!("{}:{:02} {}", hour, t.minute(), if pm { "PM" } else { "AM" })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn appointment_formats_normalize_to_one_slot() {
        let want = Slot::new(d(2024, 11, 30), "11:00-11:30".parse().unwrap());
        for s in [
            "11:00-11:30, 30/11/2024",
            "11:00-11:30, 30/11/24",
            "11:00-11:30, 2024-11-30",
            "30/11/2024, 11:00-11:30",
        ] {
            assert_eq!(Slot::parse_call_format(s), Some(want), "{s}");
        }
        assert_eq!(want.to_call_format(), "11:00-11:30, 30/11/2024");
        assert_eq!(Slot::parse_call_format("tomorrow morning"), None);
        assert_eq!(Slot::parse_call_format("11:30-11:00, 30/11/2024"), None);
    }

    #[test]
    fn spoken_forms() {
        assert_eq!(spoken_date(d(2024, 11, 30)), "November 30th");
        assert_eq!(spoken_date(d(2024, 10, 22)), "October 22nd");
        assert_eq!(spoken_date(d(2024, 10, 11)), "October 11th");
        assert_eq!(spoken_date(d(2024, 10, 21)), "October 21st");
        assert_eq!(spoken_time(NaiveTime::from_hms_opt(11, 0, 0).unwrap()), "11:00 AM");
        assert_eq!(spoken_time(NaiveTime::from_hms_opt(16, 0, 0).unwrap()), "4:00 PM");
        assert_eq!(spoken_time(NaiveTime::from_hms_opt(12, 30, 0).unwrap()), "12:30 PM");
    }

    #[test]
    fn date_forms() {
        assert_eq!(parse_date("2024-06-02"), Some(d(2024, 6, 2)));
        assert_eq!(parse_date("02/06/2024"), Some(d(2024, 6, 2)));
        assert_eq!(parse_date("02/06/24"), Some(d(2024, 6, 2)));
        assert_eq!(parse_date("31/02/2024"), None);
        assert_eq!(parse_date("2/6/2024x"), None);
    }
}
