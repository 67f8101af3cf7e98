//! Line-oriented prescription grammar.
//!
//! Each line is `<name> [<dose>] <frequency> [<times>] <duration>` in any
//! order after the name, e.g. `Paracetamol 500mg, twice daily after meals,
//! 5 days`. Lines that do not yield a name, a frequency and a duration go
//! to the remainder list.

use std::sync::OnceLock;

use chrono::NaiveTime;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedicationDirective {
    pub medicine_name: String,
    pub dose: String,
    pub times: Vec<NaiveTime>,
    pub frequency: u32,
    pub duration_days: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParsedPrescription {
    pub directives: Vec<MedicationDirective>,
    /// Lines the grammar could not read, verbatim.
    pub unparsed: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrescriptionError {
    #[error("prescription is empty")]
    EmptyPrescription,
}

struct Grammar {
    bullet: Regex,
    dose: Regex,
    n_times: Regex,
    every_hours: Regex,
    duration: Regex,
    clock_12: Regex,
    clock_24: Regex,
    name_stop: Regex,
}

const UNITS: &str = r"mg|mcg|µg|g|ml|iu|units?|tablets?|tabs?|capsules?|caps?|puffs?|drops?|tsp|teaspoons?";

fn grammar() -> &'static Grammar {
    static CELL: OnceLock<Grammar> = OnceLock::new();
    CELL.get_or_init(|| Grammar {
        bullet: Regex::new(r"^\s*(?:[-*•]|\d+[.)])\s*").unwrap(),
        dose: Regex::new(&format!(r"(?i)\b(\d+(?:\.\d+)?)\s?({UNITS})\b")).unwrap(),
        n_times: Regex::new(r"(?i)\b(\d+|one|two|three|four|five|six)\s+times\s+(?:a|per|each)\s+day\b").unwrap(),
        every_hours: Regex::new(r"(?i)\bevery\s+(\d+)\s*(?:hours?|hrs?|h)\b").unwrap(),
        duration: Regex::new(
            r"(?i)\b(\d+|a|an|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|fourteen|thirty)\s*(days?|weeks?|months?)\b",
        )
        .unwrap(),
        clock_12: Regex::new(r"(?i)\b(\d{1,2})(?::(\d{2}))?\s*([ap])\.?m\.?(?:\W|$)").unwrap(),
        clock_24: Regex::new(r"\b([01]\d|2[0-3]):([0-5]\d)\b").unwrap(),
        name_stop: Regex::new(
            r"(?i)\b(?:once|twice|thrice|daily|every|at|in|for|before|after|with|od|bd|bid|tid|tds|qid|qd|one|two|three|four|five|six)\b|\b\d",
        )
        .unwrap(),
    })
}

fn number_word(s: &str) -> Option<u32> {
    let n = match s.to_lowercase().as_str() {
        "a" | "an" | "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        "ten" => 10,
        "eleven" => 11,
        "twelve" => 12,
        "fourteen" => 14,
        "thirty" => 30,
        other => return other.parse().ok(),
    };
    Some(n)
}

fn has(line: &str, words: &[&str]) -> bool {
    words.iter().any(|w| {
        Regex::new(&format!(r"(?i)\b{}\b", regex::escape(w)))
            .expect("keyword pattern")
            .is_match(line)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frequency {
    PerDay(u32),
    EveryHours(u32),
    Night,
    Morning,
}

fn frequency(line: &str) -> Option<Frequency> {
    let g = grammar();
    if let Some(c) = g.n_times.captures(line) {
        return number_word(&c[1]).filter(|n| *n >= 1).map(Frequency::PerDay);
    }
    if has(line, &["four times", "qid"]) {
        return Some(Frequency::PerDay(4));
    }
    if has(line, &["thrice", "three times", "tid", "tds"]) {
        return Some(Frequency::PerDay(3));
    }
    if has(line, &["twice", "two times", "bd", "bid"]) {
        return Some(Frequency::PerDay(2));
    }
    if let Some(c) = g.every_hours.captures(line) {
        let h: u32 = c[1].parse().ok()?;
        return (1..=24).contains(&h).then_some(Frequency::EveryHours(h)).filter(|_| 24 % h == 0);
    }
    let morning = has(line, &["in the morning", "every morning"]);
    let night = has(line, &["at bedtime", "at night", "before bed", "every night"]);
    if morning && (night || has(line, &["evening"])) {
        return Some(Frequency::PerDay(2));
    }
    if has(line, &["once", "daily", "od", "qd", "every day", "once a day"]) {
        return Some(if night {
            Frequency::Night
        } else if morning {
            Frequency::Morning
        } else {
            Frequency::PerDay(1)
        });
    }
    if night {
        return Some(Frequency::Night);
    }
    if morning {
        return Some(Frequency::Morning);
    }
    None
}

fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).expect("valid clock time")
}

/// Default schedule: doses spread evenly between 08:00 and 20:00.
fn default_times(f: Frequency) -> Vec<NaiveTime> {
    match f {
        Frequency::Night => vec![hm(21, 0)],
        Frequency::Morning | Frequency::PerDay(1) => vec![hm(8, 0)],
        Frequency::PerDay(n) => (0..n)
            .map(|i| {
                let minutes = 8 * 60 + i * 720 / (n - 1);
                hm(minutes / 60, minutes % 60)
            })
            .collect(),
        Frequency::EveryHours(h) => {
            let mut v: Vec<NaiveTime> = (0..24 / h).map(|i| hm((8 + i * h) % 24, 0)).collect();
            v.sort();
            v
        }
    }
}

fn explicit_times(line: &str) -> Vec<NaiveTime> {
    let g = grammar();
    let mut out = Vec::new();
    for c in g.clock_12.captures_iter(line) {
        let h: u32 = c[1].parse().unwrap_or(99);
        let m: u32 = c.get(2).map_or(0, |m| m.as_str().parse().unwrap_or(99));
        if !(1..=12).contains(&h) || m > 59 {
            continue;
        }
        let pm = c[3].eq_ignore_ascii_case("p");
        let h24 = match (h, pm) {
            (12, false) => 0,
            (12, true) => 12,
            (h, true) => h + 12,
            (h, false) => h,
        };
        out.push(hm(h24, m));
    }
    for c in g.clock_24.captures_iter(line) {
        out.push(hm(c[1].parse().unwrap(), c[2].parse().unwrap()));
    }
    out.sort();
    out.dedup();
    out
}

fn duration_days(line: &str) -> Option<u32> {
    // "a day" is part of a frequency ("three times a day"), not a duration
    let c = grammar().duration.captures_iter(line).find(|c| {
        let per_day = matches!(c[1].to_lowercase().as_str(), "a" | "an") && c[2].to_lowercase() == "day";
        !per_day
    })?;
    let n = number_word(&c[1])?;
    let unit = c[2].to_lowercase();
    let days = if unit.starts_with("week") {
        n * 7
    } else if unit.starts_with("month") {
        n * 30
    } else {
        n
    };
    (days >= 1).then_some(days)
}

fn medicine_name(line: &str) -> Option<String> {
    let g = grammar();
    let mut rest = line.trim();
    for verb in ["take ", "Take ", "TAKE "] {
        if let Some(r) = rest.strip_prefix(verb) {
            rest = r.trim_start();
        }
    }
    let end = g.name_stop.find(rest).map_or(rest.len(), |m| m.start());
    let name = rest[..end]
        .trim()
        .trim_end_matches(|c: char| !c.is_alphanumeric())
        .trim();
    let words = name.split_whitespace().count();
    let starts_alpha = name.chars().next().is_some_and(char::is_alphabetic);
    (starts_alpha && (1..=4).contains(&words)).then(|| name.to_string())
}

pub fn parse_line(raw: &str) -> Option<MedicationDirective> {
    let g = grammar();
    let line = g.bullet.replace(raw, "");
    let line = line.replace(['—', '–'], " - ");
    let name = medicine_name(&line)?;
    let dose = g
        .dose
        .captures(&line)
        .map(|c| format!("{} {}", &c[1], c[2].to_lowercase()))
        .unwrap_or_default();
    let explicit = explicit_times(&line);
    let (frequency, times) = match frequency(&line) {
        Some(f) => {
            let defaults = default_times(f);
            if explicit.is_empty() {
                (defaults.len() as u32, defaults)
            } else if explicit.len() == defaults.len() {
                (explicit.len() as u32, explicit)
            } else {
                return None;
            }
        }
        None if !explicit.is_empty() => (explicit.len() as u32, explicit),
        None => return None,
    };
    let duration_days = duration_days(&line)?;
    Some(MedicationDirective { medicine_name: name, dose, times, frequency, duration_days })
}

pub fn parse_prescription(text: &str) -> Result<ParsedPrescription, PrescriptionError> {
    if text.trim().is_empty() {
        return Err(PrescriptionError::EmptyPrescription);
    }
    let mut out = ParsedPrescription::default();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match parse_line(line) {
            Some(d) => out.directives.push(d),
            None => out.unparsed.push(line.trim().to_string()),
        }
    }
    Ok(out)
}
