//! Rule-based entity extraction used for symptom retrieval.
//!
//! Symptoms come from a lexicon built out of the disease catalog; dates and
//! times from their standard formats; people from `Dr.` titles; medicines
//! from a small name list plus `<name> <dose>` patterns.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::catalog::symptom_vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityLabel {
    Symptom,
    Date,
    Time,
    Person,
    Medicine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub surface: String,
    pub label: EntityLabel,
    /// Byte offsets into the input.
    pub start: usize,
    pub end: usize,
}

pub trait EntityExtractor: Send + Sync {
    /// Entities in order of appearance. Must be deterministic.
    fn extract(&self, text: &str) -> Vec<Entity>;
}

const EXTRA_SYMPTOMS: &[&str] = &[
    "aches",
    "body pain",
    "cold",
    "diarrhea",
    "dizziness",
    "fatigued",
    "feverish",
    "nausea",
    "pain",
    "runny nose",
    "sneezing",
    "tired",
    "vomiting",
];

const MEDICINES: &[&str] = &[
    "amlodipine",
    "amoxicillin",
    "aspirin",
    "atorvastatin",
    "azithromycin",
    "cetirizine",
    "ibuprofen",
    "insulin",
    "levothyroxine",
    "lisinopril",
    "metformin",
    "omeprazole",
    "paracetamol",
    "salbutamol",
    "vitamin d",
];

const STOP_WORDS: &[&str] = &[
    "a", "about", "am", "an", "and", "are", "as", "at", "be", "been", "being", "but", "by",
    "day", "feel", "feeling", "for", "from", "get", "had", "has", "have", "i", "in", "is", "it",
    "its", "ive", "just", "me", "mild", "more", "my", "of", "on", "or", "really", "severe",
    "slight", "some", "that", "the", "this", "to", "very", "was", "with",
];

#[derive(Debug, Clone, PartialEq, Eq)]
struct Token {
    stem: String,
    start: usize,
    end: usize,
}

/// Light plural folding: `aches` -> `ache`, but `loss`, `virus`, `arthritis`
/// stay put.
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    if w.len() > 3 && w.ends_with('s') && !["ss", "us", "is"].iter().any(|s| w.ends_with(s)) {
        w[..w.len() - 1].to_string()
    } else {
        w
    }
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() || c == '\'' {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            push_token(&mut out, text, s, i);
        }
    }
    if let Some(s) = start {
        push_token(&mut out, text, s, text.len());
    }
    out
}

fn push_token(out: &mut Vec<Token>, text: &str, start: usize, end: usize) {
    let word: String = text[start..end].chars().filter(|c| *c != '\'').collect();
    if !word.is_empty() {
        out.push(Token { stem: stem(&word), start, end });
    }
}

fn phrase_key(phrase: &str) -> Vec<String> {
    tokenize(phrase).into_iter().map(|t| t.stem).collect()
}

/// Stemmed content words, stop words removed.
pub fn content_words(text: &str) -> BTreeSet<String> {
    tokenize(text)
        .into_iter()
        .map(|t| t.stem)
        .filter(|w| !STOP_WORDS.contains(&w.as_str()) && !w.chars().all(|c| c.is_ascii_digit()))
        .collect()
}

struct Patterns {
    date: Regex,
    spoken_date: Regex,
    time: Regex,
    person: Regex,
    dosed: Regex,
}

fn patterns() -> &'static Patterns {
    static CELL: OnceLock<Patterns> = OnceLock::new();
    CELL.get_or_init(|| Patterns {
        date: Regex::new(r"\d{4}-\d{2}-\d{2}|\d{2}/\d{2}/\d{4}").unwrap(),
        spoken_date: Regex::new(
            r"(?i)\b(January|February|March|April|May|June|July|August|September|October|November|December)\s+\d{1,2}(st|nd|rd|th)?\b",
        )
        .unwrap(),
        time: Regex::new(r"(?i)\d{1,2}:\d{2}(\s?-\s?\d{2}:\d{2}|\s?[ap]m)?").unwrap(),
        person: Regex::new(r"Dr\.\s+[A-Z][a-z]+(\s+[A-Z][a-z]+)*").unwrap(),
        dosed: Regex::new(r"(?i)\b([a-z][a-z-]+)\s+\d+(\.\d+)?\s?(mg|mcg|g|ml|iu)\b").unwrap(),
    })
}

fn digit_at(text: &str, i: usize) -> bool {
    text.as_bytes().get(i).is_some_and(u8::is_ascii_digit)
}

/// Dictionary and pattern extractor. The symptom lexicon is matched
/// longest-first over stemmed tokens.
pub struct RuleBasedExtractor {
    symptoms: Vec<Vec<String>>,
    medicines: Vec<Vec<String>>,
}

impl Default for RuleBasedExtractor {
    fn default() -> Self {
        Self::with_lexicon(symptom_vocabulary().iter().copied().chain(EXTRA_SYMPTOMS.iter().copied()))
    }
}

impl RuleBasedExtractor {
    pub fn with_lexicon<'a>(symptoms: impl IntoIterator<Item = &'a str>) -> Self {
        let mut symptoms: Vec<Vec<String>> = symptoms.into_iter().map(phrase_key).collect();
        symptoms.retain(|k| !k.is_empty());
        // longest first so "chest pain" wins over "pain"
        symptoms.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        symptoms.dedup();
        let mut medicines: Vec<Vec<String>> = MEDICINES.iter().map(|m| phrase_key(m)).collect();
        medicines.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        Self { symptoms, medicines }
    }

    /// Lexicon entries found as contiguous runs inside `key`.
    fn sub_phrases(&self, key: &[String]) -> Vec<Vec<String>> {
        self.symptoms
            .iter()
            .filter(|lex| lex.len() <= key.len() && key.windows(lex.len()).any(|w| w == lex.as_slice()))
            .cloned()
            .collect()
    }

    fn lexicon_matches(
        lexicon: &[Vec<String>],
        tokens: &[Token],
        label: EntityLabel,
        text: &str,
        out: &mut Vec<Entity>,
    ) {
        let mut i = 0;
        while i < tokens.len() {
            let hit = lexicon.iter().find(|lex| {
                i + lex.len() <= tokens.len()
                    && tokens[i..i + lex.len()].iter().zip(lex.iter()).all(|(t, w)| &t.stem == w)
            });
            match hit {
                Some(lex) => {
                    let (start, end) = (tokens[i].start, tokens[i + lex.len() - 1].end);
                    out.push(Entity { surface: text[start..end].to_string(), label, start, end });
                    i += lex.len();
                }
                None => i += 1,
            }
        }
    }
}

impl EntityExtractor for RuleBasedExtractor {
    fn extract(&self, text: &str) -> Vec<Entity> {
        let p = patterns();
        let mut out: Vec<Entity> = Vec::new();
        let push = |label, start: usize, end: usize, out: &mut Vec<Entity>| {
            if out.iter().all(|e| end <= e.start || start >= e.end) {
                out.push(Entity { surface: text[start..end].to_string(), label, start, end });
            }
        };

        for m in p.date.find_iter(text) {
            if !digit_at(text, m.end()) && (m.start() == 0 || !digit_at(text, m.start() - 1)) {
                push(EntityLabel::Date, m.start(), m.end(), &mut out);
            }
        }
        for m in p.spoken_date.find_iter(text) {
            push(EntityLabel::Date, m.start(), m.end(), &mut out);
        }
        for m in p.time.find_iter(text) {
            if !digit_at(text, m.end()) && (m.start() == 0 || !digit_at(text, m.start() - 1)) {
                push(EntityLabel::Time, m.start(), m.end(), &mut out);
            }
        }
        for m in p.person.find_iter(text) {
            push(EntityLabel::Person, m.start(), m.end(), &mut out);
        }
        for c in p.dosed.captures_iter(text) {
            let m = c.get(1).expect("group 1");
            push(EntityLabel::Medicine, m.start(), m.end(), &mut out);
        }

        let tokens: Vec<Token> = tokenize(text)
            .into_iter()
            .filter(|t| out.iter().all(|e| t.end <= e.start || t.start >= e.end))
            .collect();
        let mut lexical = Vec::new();
        Self::lexicon_matches(&self.medicines, &tokens, EntityLabel::Medicine, text, &mut lexical);
        let taken: Vec<(usize, usize)> = lexical.iter().map(|e| (e.start, e.end)).collect();
        let rest: Vec<Token> = tokens
            .into_iter()
            .filter(|t| taken.iter().all(|(s, e)| t.end <= *s || t.start >= *e))
            .collect();
        Self::lexicon_matches(&self.symptoms, &rest, EntityLabel::Symptom, text, &mut lexical);
        out.extend(lexical);
        out.sort_by_key(|e| (e.start, e.end));
        out
    }
}

/// Comparison keys for the symptom entities in `text`: each matched phrase
/// plus the lexicon phrases it contains, so "body aches" also yields
/// "ache" when that is a lexicon entry.
pub fn symptom_keys(extractor: &dyn EntityExtractor, text: &str) -> BTreeSet<String> {
    let rb = default_extractor();
    let mut keys = BTreeSet::new();
    for e in extractor.extract(text) {
        if e.label != EntityLabel::Symptom {
            continue;
        }
        let key = phrase_key(&e.surface);
        for sub in rb.sub_phrases(&key) {
            keys.insert(sub.join(" "));
        }
        keys.insert(key.join(" "));
    }
    keys
}

pub fn default_extractor() -> &'static RuleBasedExtractor {
    static CELL: OnceLock<RuleBasedExtractor> = OnceLock::new();
    CELL.get_or_init(RuleBasedExtractor::default)
}

pub fn extract_entities_rule_based(text: &str) -> Vec<Entity> {
    default_extractor().extract(text)
}
