//! Reference episodes for the seven use-case families.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::trajectory::{parse_trajectory, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    General,
    Counter,
    Negative,
    Dietician,
    SoftSos,
    HardSosStart,
    HardSosEnd,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::General,
        Family::Counter,
        Family::Negative,
        Family::Dietician,
        Family::SoftSos,
        Family::HardSosStart,
        Family::HardSosEnd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::General => "general",
            Family::Counter => "counter",
            Family::Negative => "negative",
            Family::Dietician => "dietician",
            Family::SoftSos => "soft_sos",
            Family::HardSosStart => "hard_sos_start",
            Family::HardSosEnd => "hard_sos_end",
        }
    }

    pub fn is_appointment(self) -> bool {
        matches!(
            self,
            Family::General | Family::Counter | Family::Negative | Family::Dietician
        )
    }

    pub fn is_sos(self) -> bool {
        !self.is_appointment()
    }

    /// Raw document text of the committed golden episode.
    pub fn golden_text(self) -> &'static str {
        match self {
            Family::General => include_str!("../goldens/general.json"),
            Family::Counter => include_str!("../goldens/counter.json"),
            Family::Negative => include_str!("../goldens/negative.json"),
            Family::Dietician => include_str!("../goldens/dietician.json"),
            Family::SoftSos => include_str!("../goldens/soft_sos.json"),
            Family::HardSosStart => include_str!("../goldens/hard_sos_start.json"),
            Family::HardSosEnd => include_str!("../goldens/hard_sos_end.json"),
        }
    }

    pub fn golden(self) -> Trajectory {
        parse_trajectory(self.golden_text()).expect("committed goldens parse")
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown family `{s}`"))
    }
}
