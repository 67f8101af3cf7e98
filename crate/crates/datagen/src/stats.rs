use std::collections::BTreeMap;

use medagent_core::agent::Role;
use serde::Serialize;

use crate::interleave::TrainingSample;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RoleCounts {
    pub planner: usize,
    pub caller: usize,
}

impl RoleCounts {
    pub fn total(&self) -> usize {
        self.planner + self.caller
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetStats {
    /// Keyed by family name; samples without one count under `unknown`.
    pub families: BTreeMap<String, RoleCounts>,
    pub total: usize,
}

pub fn dataset_stats<'a>(samples: impl IntoIterator<Item = &'a TrainingSample>) -> DatasetStats {
    let mut out = DatasetStats::default();
    for s in samples {
        let entry = out.families.entry(s.family.clone().unwrap_or_else(|| "unknown".into())).or_default();
        match s.role {
            Role::Planner => entry.planner += 1,
            Role::Caller => entry.caller += 1,
            Role::Report => continue,
        }
        out.total += 1;
    }
    out
}

impl std::fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<16} {:>8} {:>8} {:>8}", "family", "planner", "caller", "total")?;
        for (name, c) in &self.families {
            writeln!(f, "{:<16} {:>8} {:>8} {:>8}", name, c.planner, c.caller, c.total())?;
        }
        write!(f, "{:<16} {:>8} {:>8} {:>8}", "all", "", "", self.total)
    }
}
