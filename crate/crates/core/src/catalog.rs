//! Disease catalog used to seed appointment scenarios and the symptom
//! lexicon. One row per disease: specialization, whether diet management is
//! a primary referral, and typical presenting symptoms.

use std::sync::OnceLock;

const DISEASES_TSV: &str = include_str!("../data/diseases.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disease {
    pub name: &'static str,
    pub specialization: &'static str,
    pub dietary: bool,
    pub symptoms: Vec<&'static str>,
}

pub fn diseases() -> &'static [Disease] {
    static CELL: OnceLock<Vec<Disease>> = OnceLock::new();
    CELL.get_or_init(|| {
        DISEASES_TSV
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|line| {
                let cols: Vec<&'static str> = line.split('\t').collect();
                assert_eq!(cols.len(), 4, "bad catalog row: {line}");
                Disease {
                    name: cols[0],
                    specialization: cols[1],
                    dietary: cols[2] == "1",
                    symptoms: cols[3].split(',').map(str::trim).collect(),
                }
            })
            .collect()
    })
}

/// Every distinct symptom phrase in the catalog, sorted.
pub fn symptom_vocabulary() -> &'static [&'static str] {
    static CELL: OnceLock<Vec<&'static str>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut v: Vec<&'static str> = diseases()
            .iter()
            .flat_map(|d| d.symptoms.iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    })
}
