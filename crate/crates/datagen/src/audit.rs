//! Independent check of an enhanced episode against its source. It walks
//! both documents in parallel, pulls entity-looking tokens out of each
//! string pair and demands a bijection per class: the same original always
//! becomes the same replacement, and distinct originals stay distinct.

use std::collections::HashMap;
use std::sync::OnceLock;

use medagent_core::trajectory::Trajectory;
use regex::Regex;
use serde_json::Value;

fn token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(concat!(
            r"(?P<date>\d{4}-\d{2}-\d{2}|\d{2}/\d{2}/\d{4})",
            r"|(?P<spoken>(?:Jan|Febr)uary \d+\w\w|(?:March|April|May|June|July|August) \d+\w\w",
            r"|(?:September|October|November|December) \d+\w\w)",
            r"|(?P<time>\d{1,2}:\d{2}(?: [AP]M)?)",
            r"|(?P<id>[A-Z]{4}\d{6})",
            r"|(?P<phone>\+\d+)",
        ))
        .expect("audit pattern")
    })
}

fn tokens<'a>(s: &'a str, names: &[&str]) -> Vec<(&'static str, String)> {
    let mut out: Vec<(usize, &'static str, String)> = Vec::new();
    for c in token_re().captures_iter(s) {
        for class in ["date", "spoken", "time", "id", "phone"] {
            if let Some(m) = c.name(class) {
                out.push((m.start(), class, m.as_str().to_string()));
            }
        }
    }
    for n in names {
        for (at, _) in s.match_indices(n) {
            out.push((at, "name", n.to_string()));
        }
    }
    out.sort_by_key(|(at, ..)| *at);
    out.into_iter().map(|(_, c, t)| (c, t)).collect()
}

fn doctor_names(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) => {
            for part in s.split("Dr. ").skip(1) {
                let name: Vec<&str> = part
                    .split(' ')
                    .take_while(|w| w.chars().next().is_some_and(char::is_uppercase) && w.chars().all(char::is_alphabetic))
                    .collect();
                if name.len() >= 2 {
                    out.push(name.join(" "));
                }
            }
        }
        Value::Array(a) => a.iter().for_each(|x| doctor_names(x, out)),
        Value::Object(o) => o.values().for_each(|x| doctor_names(x, out)),
        _ => {}
    }
}

fn names(t: &Trajectory) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(d) = t.user_details() {
        out.push(d.name.clone());
    }
    doctor_names(&t.to_value(), &mut out);
    out.sort_by_key(|n| std::cmp::Reverse(n.len()));
    out.dedup();
    out
}

fn walk<'a>(a: &'a Value, b: &'a Value, path: &str, out: &mut Vec<(String, &'a str, &'a str)>) -> Result<(), String> {
    match (a, b) {
        (Value::String(x), Value::String(y)) => out.push((path.to_string(), x, y)),
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                walk(p, q, &format!("{path}[{i}]"), out)?;
            }
        }
        (Value::Object(x), Value::Object(y)) if x.keys().eq(y.keys()) => {
            for (k, p) in x {
                walk(p, &y[k], &format!("{path}.{k}"), out)?;
            }
        }
        (x, y) if std::mem::discriminant(x) == std::mem::discriminant(y) && !x.is_array() && !x.is_object() => {
            if x != y {
                return Err(format!("{path}: non-text value changed from {x} to {y}"));
            }
        }
        _ => return Err(format!("{path}: document shape changed")),
    }
    Ok(())
}

/// Ok when `enhanced` is a consistent entity-for-entity rewrite of
/// `original`; otherwise the first inconsistency found.
pub fn entity_consistency(original: &Trajectory, enhanced: &Trajectory) -> Result<(), String> {
    let (a, b) = (original.to_value(), enhanced.to_value());
    let mut pairs = Vec::new();
    walk(&a, &b, "$", &mut pairs)?;
    let (na, nb) = (names(original), names(enhanced));
    let na: Vec<&str> = na.iter().map(String::as_str).collect();
    let nb: Vec<&str> = nb.iter().map(String::as_str).collect();
    let mut forward: HashMap<(&str, String), String> = HashMap::new();
    let mut backward: HashMap<(&str, String), String> = HashMap::new();
    for (path, x, y) in pairs {
        let (tx, ty) = (tokens(x, &na), tokens(y, &nb));
        if tx.len() != ty.len() {
            return Err(format!("{path}: {} entities became {} in `{y}`", tx.len(), ty.len()));
        }
        for ((cx, vx), (cy, vy)) in tx.into_iter().zip(ty) {
            if cx != cy {
                return Err(format!("{path}: {cx} `{vx}` became {cy} `{vy}`"));
            }
            if let Some(prev) = forward.insert((cx, vx.clone()), vy.clone()) {
                if prev != vy {
                    return Err(format!("{path}: {cx} `{vx}` maps to both `{prev}` and `{vy}`"));
                }
            }
            if let Some(prev) = backward.insert((cx, vy.clone()), vx.clone()) {
                if prev != vx {
                    return Err(format!("{path}: `{prev}` and `{vx}` both became `{vy}`"));
                }
            }
        }
    }
    Ok(())
}
