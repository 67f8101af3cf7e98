//! Entity randomization.
//!
//! Every identifier, person name, phone number, date and time in an episode
//! is replaced by a fresh value. The same original always maps to the same
//! replacement within one episode, so cross-references survive: the slot the
//! planner offers is still the slot the caller books, the ambulance phone
//! still matches its search result, and so on. Relative structure is kept
//! too. Past dates stay in the past, appointments stay inside the booking
//! window and in their original order, and a slot keeps its length.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::OnceLock;

use chrono::{Datelike, Duration, NaiveDate, NaiveTime, Timelike};
use medagent_core::calendar::spoken_date;
use medagent_core::calendar::spoken_time;
use medagent_core::trajectory::{ParseOptions, Trajectory, TrajectoryError};
use rand::seq::index::sample;
use rand::Rng;
use regex::{Captures, Regex};
use serde_json::Value;
use thiserror::Error;

use crate::config::EnhancementConfig;
use crate::generate::{random_name, random_phone, random_user_id};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityClass {
    Id,
    Name,
    Phone,
    Date,
    Time,
}

#[derive(Debug, Error)]
pub enum EnhanceError {
    #[error("episode has no {0:?} entity to randomize")]
    PatternMiss(EntityClass),
    #[error("spoken date `{0}` does not match any date in the episode")]
    UnresolvedSpokenDate(String),
    #[error("episode has no system state")]
    NoSystemState,
    #[error("enhanced episode no longer parses: {0}")]
    Reparse(#[from] TrajectoryError),
}

/// Original to replacement, per entity class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Replacements {
    pub ids: BTreeMap<String, String>,
    pub names: BTreeMap<String, String>,
    pub phones: BTreeMap<String, String>,
    pub dates: BTreeMap<NaiveDate, NaiveDate>,
    pub times: BTreeMap<NaiveTime, NaiveTime>,
}

const MONTHS: &str = "January|February|March|April|May|June|July|August|September|October|November|December";

fn entity_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            concat!(
                r"(?P<iso>\b\d{{4}}-\d{{2}}-\d{{2}})",
                r"|(?P<dmy>\b\d{{2}}/\d{{2}}/\d{{4}}\b)",
                r"|(?P<spoken_date>\b(?:{months}) \d{{1,2}}(?:st|nd|rd|th)\b)",
                r"|(?P<spoken_time>\b\d{{1,2}}:\d{{2}} (?:AM|PM)\b)",
                r"|(?P<range>\d{{2}}:\d{{2}}-\d{{2}}:\d{{2}})",
                r"|(?P<time>\d{{2}}:\d{{2}})",
                r"|(?P<id>\b[A-Z]{{4}}\d{{6}}\b)",
                r"|(?P<phone>\+\d{{9,13}})",
            ),
            months = MONTHS
        ))
        .expect("entity pattern")
    })
}

fn doctor_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"Dr\. ([A-Z][a-z]+(?: [A-Z][a-z]+)+)").expect("doctor pattern"))
}

fn hm(s: &str) -> Option<NaiveTime> {
    NaiveTime::parse_from_str(s, "%H:%M").ok()
}

fn parse_spoken_time(s: &str) -> Option<NaiveTime> {
    NaiveTime::parse_from_str(s, "%I:%M %p").ok()
}

fn parse_spoken_date(s: &str) -> Option<(u32, u32)> {
    let (month, day) = s.split_once(' ')?;
    let m = MONTHS.split('|').position(|x| x == month)? as u32 + 1;
    let d: u32 = day.trim_end_matches(char::is_alphabetic).parse().ok()?;
    Some((m, d))
}

fn strings(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) => out.push(s.clone()),
        Value::Array(a) => a.iter().for_each(|x| strings(x, out)),
        Value::Object(o) => o.values().for_each(|x| strings(x, out)),
        _ => {}
    }
}

fn rewrite(v: &mut Value, f: &dyn Fn(&str) -> String) {
    match v {
        Value::String(s) => *s = f(s),
        Value::Array(a) => a.iter_mut().for_each(|x| rewrite(x, f)),
        Value::Object(o) => o.values_mut().for_each(|x| rewrite(x, f)),
        _ => {}
    }
}

/// What an episode mentions, before any replacement.
#[derive(Debug, Default)]
struct Found {
    names: BTreeSet<String>,
    ids: BTreeSet<String>,
    phones: BTreeSet<String>,
    dates: BTreeSet<NaiveDate>,
    spoken_dates: BTreeSet<(u32, u32)>,
    slot_times: BTreeSet<NaiveTime>,
    other_times: BTreeSet<NaiveTime>,
}

fn scan(texts: &[String], system_name: &str) -> Found {
    let mut f = Found::default();
    f.names.insert(system_name.to_string());
    for s in texts {
        for c in doctor_re().captures_iter(s) {
            f.names.insert(c[1].to_string());
        }
        for c in entity_re().captures_iter(s) {
            if let Some(m) = c.name("iso") {
                f.dates.extend(NaiveDate::parse_from_str(m.as_str(), "%Y-%m-%d").ok());
            } else if let Some(m) = c.name("dmy") {
                f.dates.extend(NaiveDate::parse_from_str(m.as_str(), "%d/%m/%Y").ok());
            } else if let Some(m) = c.name("spoken_date") {
                f.spoken_dates.extend(parse_spoken_date(m.as_str()));
            } else if let Some(m) = c.name("spoken_time") {
                f.other_times.extend(parse_spoken_time(m.as_str()));
            } else if let Some(m) = c.name("range") {
                let (a, b) = m.as_str().split_once('-').expect("range has a dash");
                f.slot_times.extend(hm(a).into_iter().chain(hm(b)));
            } else if let Some(m) = c.name("time") {
                f.other_times.extend(hm(m.as_str()));
            } else if let Some(m) = c.name("id") {
                f.ids.insert(m.as_str().to_string());
            } else if let Some(m) = c.name("phone") {
                f.phones.insert(m.as_str().to_string());
            }
        }
    }
    // a spoken slot start belongs to the slot, not to the free points
    let slot_times = f.slot_times.clone();
    f.other_times.retain(|t| !slot_times.contains(t));
    f
}

/// Sorted distinct offsets in `1..=max`, `k` of them.
fn offsets(rng: &mut impl Rng, max: i64, k: usize) -> Vec<i64> {
    let max = max.max(k as i64);
    let mut o: Vec<i64> = sample(rng, max as usize, k).into_iter().map(|i| i as i64 + 1).collect();
    o.sort_unstable();
    o
}

fn map_dates(
    rng: &mut impl Rng,
    cfg: &EnhancementConfig,
    today: NaiveDate,
    dates: &BTreeSet<NaiveDate>,
) -> BTreeMap<NaiveDate, NaiveDate> {
    let new_today = {
        let span = (cfg.latest - cfg.earliest).num_days().max(0);
        cfg.earliest + Duration::days(rng.gen_range(0..=span))
    };
    let past: Vec<NaiveDate> = dates.iter().copied().filter(|d| *d < today).collect();
    let future: Vec<NaiveDate> = dates.iter().copied().filter(|d| *d > today).collect();
    let mut out = BTreeMap::new();
    out.insert(today, new_today);
    // the oldest past date gets the largest offset
    let back = offsets(rng, cfg.history_days, past.len());
    for (d, o) in past.iter().zip(back.iter().rev()) {
        out.insert(*d, new_today - Duration::days(*o));
    }
    let ahead = offsets(rng, cfg.window_days, future.len());
    for (d, o) in future.iter().zip(&ahead) {
        out.insert(*d, new_today + Duration::days(*o));
    }
    out
}

const EARLIEST_SLOT: u32 = 7 * 60;
const LATEST_SLOT: u32 = 20 * 60;

fn minutes(t: NaiveTime) -> i64 {
    i64::from(t.hour() * 60 + t.minute())
}

fn at_minutes(m: i64) -> NaiveTime {
    NaiveTime::from_hms_opt((m / 60) as u32, (m % 60) as u32, 0).expect("minutes within a day")
}

fn map_times(
    rng: &mut impl Rng,
    slot: &BTreeSet<NaiveTime>,
    other: &BTreeSet<NaiveTime>,
) -> BTreeMap<NaiveTime, NaiveTime> {
    let mut out = BTreeMap::new();
    if let (Some(lo), Some(hi)) = (slot.first(), slot.last()) {
        // one shift for every slot boundary keeps lengths and order
        let (lo, hi) = (minutes(*lo), minutes(*hi));
        let shifts: Vec<i64> = (-48..=48)
            .map(|k| k * 30)
            .filter(|s| *s != 0 && lo + s >= i64::from(EARLIEST_SLOT) && hi + s <= i64::from(LATEST_SLOT))
            .collect();
        let shift = if shifts.is_empty() { 0 } else { shifts[rng.gen_range(0..shifts.len())] };
        for t in slot {
            out.insert(*t, at_minutes(minutes(*t) + shift));
        }
    }
    let mut used: HashSet<NaiveTime> = out.values().copied().collect();
    for t in other {
        let fresh = loop {
            let c = at_minutes(rng.gen_range(6 * 60..22 * 60));
            if used.insert(c) {
                break c;
            }
        };
        out.insert(*t, fresh);
    }
    out
}

fn fresh<T: Eq + std::hash::Hash + Clone>(
    used: &mut HashSet<T>,
    mut make: impl FnMut() -> T,
) -> T {
    loop {
        let c = make();
        if used.insert(c.clone()) {
            return c;
        }
    }
}

pub fn enhance(t: &Trajectory, cfg: &EnhancementConfig, rng: &mut impl Rng) -> Result<Trajectory, EnhanceError> {
    enhance_detailed(t, cfg, rng).map(|(t, _)| t)
}

pub fn enhance_detailed(
    t: &Trajectory,
    cfg: &EnhancementConfig,
    rng: &mut impl Rng,
) -> Result<(Trajectory, Replacements), EnhanceError> {
    let details = t.user_details().ok_or(EnhanceError::NoSystemState)?;
    let today = details.timestamp.date();
    let mut doc = t.to_value();
    let mut texts = Vec::new();
    strings(&doc, &mut texts);
    let found = scan(&texts, &details.name);

    if found.ids.is_empty() {
        return Err(EnhanceError::PatternMiss(EntityClass::Id));
    }
    if found.names.iter().all(|n| n.is_empty()) {
        return Err(EnhanceError::PatternMiss(EntityClass::Name));
    }
    if found.dates.is_empty() {
        return Err(EnhanceError::PatternMiss(EntityClass::Date));
    }
    if found.slot_times.is_empty() && found.other_times.is_empty() {
        return Err(EnhanceError::PatternMiss(EntityClass::Time));
    }

    let mut r = Replacements::default();
    let mut used: HashSet<String> = found.ids.iter().chain(&found.names).chain(&found.phones).cloned().collect();
    for id in &found.ids {
        r.ids.insert(id.clone(), fresh(&mut used, || random_user_id(rng)));
    }
    for name in found.names.iter().filter(|n| !n.is_empty()) {
        r.names.insert(name.clone(), fresh(&mut used, || random_name(rng, cfg)));
    }
    for phone in &found.phones {
        let digits = phone.len() - 1;
        r.phones.insert(phone.clone(), fresh(&mut used, || random_phone(rng, digits)));
    }
    r.dates = map_dates(rng, cfg, today, &found.dates);
    r.times = map_times(rng, &found.slot_times, &found.other_times);

    // spoken dates carry no year; resolve them against the dated mentions,
    // preferring upcoming dates since that is what gets offered
    let mut spoken: HashMap<(u32, u32), NaiveDate> = HashMap::new();
    for &(m, d) in &found.spoken_dates {
        let hit = found
            .dates
            .iter()
            .filter(|x| x.month() == m && x.day() == d)
            .max_by_key(|x| (**x >= today, std::cmp::Reverse(**x)));
        match hit {
            Some(x) => spoken.insert((m, d), r.dates[x]),
            None => return Err(EnhanceError::UnresolvedSpokenDate(format!("{m}/{d}"))),
        };
    }

    let names_re = (!r.names.is_empty()).then(|| {
        let mut names: Vec<&String> = r.names.keys().collect();
        names.sort_by_key(|n| std::cmp::Reverse(n.len()));
        let alt: Vec<String> = names.iter().map(|n| regex::escape(n)).collect();
        Regex::new(&alt.join("|")).expect("escaped names")
    });

    let replace = |s: &str| -> String {
        let s = match &names_re {
            Some(re) => re.replace_all(s, |c: &Captures| r.names[&c[0]].clone()).into_owned(),
            None => s.to_string(),
        };
        entity_re()
            .replace_all(&s, |c: &Captures| {
                let whole = c[0].to_string();
                if c.name("iso").is_some() {
                    NaiveDate::parse_from_str(&whole, "%Y-%m-%d")
                        .ok()
                        .and_then(|d| r.dates.get(&d))
                        .map_or(whole, |d| d.format("%Y-%m-%d").to_string())
                } else if c.name("dmy").is_some() {
                    NaiveDate::parse_from_str(&whole, "%d/%m/%Y")
                        .ok()
                        .and_then(|d| r.dates.get(&d))
                        .map_or(whole, |d| d.format("%d/%m/%Y").to_string())
                } else if c.name("spoken_date").is_some() {
                    parse_spoken_date(&whole).and_then(|k| spoken.get(&k)).map_or(whole, |d| spoken_date(*d))
                } else if c.name("spoken_time").is_some() {
                    parse_spoken_time(&whole).and_then(|t| r.times.get(&t)).map_or(whole, |t| spoken_time(*t))
                } else if c.name("range").is_some() {
                    let (a, b) = whole.split_once('-').expect("range has a dash");
                    match (hm(a).and_then(|t| r.times.get(&t)), hm(b).and_then(|t| r.times.get(&t))) {
                        (Some(a), Some(b)) => format!("{}-{}", a.format("%H:%M"), b.format("%H:%M")),
                        _ => whole,
                    }
                } else if c.name("time").is_some() {
                    hm(&whole).and_then(|t| r.times.get(&t)).map_or(whole, |t| t.format("%H:%M").to_string())
                } else if c.name("id").is_some() {
                    r.ids.get(&whole).cloned().unwrap_or(whole)
                } else {
                    r.phones.get(&whole).cloned().unwrap_or(whole)
                }
            })
            .into_owned()
    };
    rewrite(&mut doc, &replace);
    let out = Trajectory::from_value(&doc, ParseOptions::STRICT)?;
    Ok((out, r))
}

/// Distinct entity mentions per class, as the enhancer sees them.
pub fn count_entities(t: &Trajectory) -> BTreeMap<EntityClass, usize> {
    let mut texts = Vec::new();
    strings(&t.to_value(), &mut texts);
    let name = t.user_details().map(|d| d.name.clone()).unwrap_or_default();
    let f = scan(&texts, &name);
    let mut out = BTreeMap::new();
    out.insert(EntityClass::Id, f.ids.len());
    out.insert(EntityClass::Name, f.names.iter().filter(|n| !n.is_empty()).count());
    out.insert(EntityClass::Phone, f.phones.len());
    out.insert(EntityClass::Date, f.dates.len());
    out.insert(EntityClass::Time, f.slot_times.len() + f.other_times.len());
    out
}
