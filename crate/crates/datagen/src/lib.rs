//! Synthetic trajectory generation: sample scenarios, run them through the
//! offline policy, randomize entities, verify, and split into training
//! samples.

pub mod audit;
pub mod cli;
pub mod config;
pub mod enhance;
pub mod generate;
pub mod interleave;
pub mod io;
pub mod pipeline;
pub mod stats;
pub mod template;
pub mod verify;

pub use audit::entity_consistency;
pub use config::{ConfigError, EnhancementConfig, DEFAULT_WINDOW_DAYS};
pub use enhance::{count_entities, enhance, enhance_detailed, EnhanceError, EntityClass, Replacements};
pub use generate::{family_of, generate_trajectory, sample_scenario, GenerateError, Scenario};
pub use interleave::{interleave, TrainingSample};
pub use pipeline::{produce, run_family, Batch, PipelineOptions, Rejected};
pub use stats::{dataset_stats, DatasetStats, RoleCounts};
pub use template::{SkeletonStep, UseCaseTemplate};
pub use verify::{verify, verify_as, VerificationReport, Violation, ViolationKind, VerifyOptions};
