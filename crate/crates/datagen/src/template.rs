use medagent_core::goldens::Family;
use medagent_core::trajectory::{adjacency_allowed, ParseOptions, StateKind};

/// One position of a family's reference episode: the state kind and, for
/// caller states, the tool it invokes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonStep {
    pub kind: StateKind,
    pub tool: Option<String>,
}

#[derive(Debug, Clone)]
pub struct UseCaseTemplate {
    pub family: Family,
    pub skeleton: Vec<SkeletonStep>,
    /// Reference episode shown to a generation backend as its one example.
    pub example: String,
    /// Appointment families sample a disease and build symptoms from it.
    pub disease_slot: bool,
}

impl UseCaseTemplate {
    pub fn for_family(family: Family) -> Self {
        let golden = family.golden();
        let skeleton = golden
            .states
            .iter()
            .map(|s| SkeletonStep { kind: s.kind(), tool: s.as_caller().map(|c| c.tool.clone()) })
            .collect();
        Self {
            family,
            skeleton,
            example: medagent_core::trajectory::serialize_trajectory_line(&golden),
            disease_slot: family.is_appointment(),
        }
    }

    pub fn all() -> Vec<Self> {
        Family::ALL.into_iter().map(Self::for_family).collect()
    }

    /// Tool names in skeleton order.
    pub fn tools(&self) -> Vec<&str> {
        self.skeleton.iter().filter_map(|s| s.tool.as_deref()).collect()
    }

    /// Whether the kind sequence obeys the strict adjacency grammar.
    pub fn skeleton_is_valid(&self) -> bool {
        self.skeleton.first().map(|s| s.kind) == Some(StateKind::System)
            && self
                .skeleton
                .windows(2)
                .enumerate()
                .all(|(i, w)| adjacency_allowed(w[0].kind, w[1].kind, i + 1, ParseOptions::STRICT))
    }
}
