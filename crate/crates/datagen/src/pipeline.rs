//! Batch driver: generate, enhance and verify many episodes in parallel.

use medagent_core::agent::PolicyBackend;
use medagent_core::goldens::Family;
use medagent_core::toolbox::ToolRegistry;
use medagent_core::trajectory::Trajectory;
use rayon::prelude::*;

use crate::config::EnhancementConfig;
use crate::enhance::enhance;
use crate::generate::{generate_trajectory, stream};
use crate::template::UseCaseTemplate;
use crate::verify::{verify_as, VerificationReport, VerifyOptions};

const ENHANCE: u64 = 2;

#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    pub enhance: bool,
    pub verify: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { enhance: true, verify: true }
    }
}

#[derive(Debug)]
pub struct Rejected {
    pub family: Family,
    pub index: u64,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Batch {
    pub accepted: Vec<Trajectory>,
    pub rejected: Vec<Rejected>,
}

/// One episode through the whole pipeline.
pub fn produce(
    template: &UseCaseTemplate,
    cfg: &EnhancementConfig,
    index: u64,
    reg: &ToolRegistry,
    backend: Option<&dyn PolicyBackend>,
    opts: PipelineOptions,
) -> Result<Trajectory, String> {
    let raw = generate_trajectory(template, cfg, index, backend).map_err(|e| e.to_string())?;
    let t = if opts.enhance {
        let mut rng = stream(cfg.seed, template.family, index, ENHANCE);
        enhance(&raw, cfg, &mut rng).map_err(|e| e.to_string())?
    } else {
        raw
    };
    if opts.verify {
        let report: VerificationReport =
            verify_as(&t, reg, Some(template.family), VerifyOptions { window_days: cfg.window_days });
        if let Some(v) = report.violations.first() {
            return Err(format!("{:?} at {:?}: {}", v.kind, v.state, v.detail));
        }
    }
    Ok(t)
}

pub fn run_family(
    family: Family,
    cfg: &EnhancementConfig,
    count: u64,
    reg: &ToolRegistry,
    backend: Option<&dyn PolicyBackend>,
    opts: PipelineOptions,
) -> Batch {
    let template = UseCaseTemplate::for_family(family);
    let results: Vec<(u64, Result<Trajectory, String>)> = (0..count)
        .into_par_iter()
        .map(|i| (i, produce(&template, cfg, i, reg, backend, opts)))
        .collect();
    let mut batch = Batch::default();
    for (index, r) in results {
        match r {
            Ok(t) => batch.accepted.push(t),
            Err(reason) => batch.rejected.push(Rejected { family, index, reason }),
        }
    }
    batch
}
