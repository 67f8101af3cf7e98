//! Command-line surface, shared with the `medagent datagen` subcommand.

use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use medagent_core::agent::{HttpPolicy, PolicyBackend};
use medagent_core::goldens::Family;
use medagent_core::toolbox::load_default_registry;
use medagent_core::trajectory::ParseOptions;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::EnhancementConfig;
use crate::enhance::enhance;
use crate::interleave::{interleave, TrainingSample};
use crate::io::{read_jsonl, read_trajectories, write_jsonl, write_trajectories};
use crate::pipeline::{run_family, PipelineOptions};
use crate::stats::dataset_stats;
use crate::verify::{verify, verify_as, VerifyOptions};

#[derive(Debug, Subcommand)]
pub enum DatagenCommand {
    /// Generate, enhance and verify episodes.
    Generate(GenerateArgs),
    /// Randomize the entities of existing episodes.
    Enhance(EnhanceArgs),
    /// Check episodes and report violations.
    Verify(VerifyArgs),
    /// Split episodes into planner and caller training samples.
    Interleave(InterleaveArgs),
    /// Count training samples per family and role.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// A family name, or `all`.
    #[arg(long, default_value = "all")]
    pub family: String,
    #[arg(long, default_value_t = 100)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Booking window in days.
    #[arg(long, default_value_t = crate::config::DEFAULT_WINDOW_DAYS)]
    pub window: i64,
    /// Keep the sampled entities instead of re-randomizing them.
    #[arg(long)]
    pub no_enhance: bool,
    /// Completion endpoint to generate with; the rule policy is used otherwise.
    #[arg(long)]
    pub backend_url: Option<String>,
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Check every episode as this family instead of its recorded one.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value_t = crate::config::DEFAULT_WINDOW_DAYS)]
    pub window: i64,
}

#[derive(Debug, Args)]
pub struct InterleaveArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
}

fn families(arg: &str) -> Result<Vec<Family>> {
    if arg == "all" {
        return Ok(Family::ALL.to_vec());
    }
    arg.split(',').map(|f| f.trim().parse::<Family>().map_err(|e| anyhow::anyhow!("{e}"))).collect()
}

pub fn run(cmd: DatagenCommand) -> Result<()> {
    let reg = load_default_registry();
    match cmd {
        DatagenCommand::Generate(a) => {
            let cfg = EnhancementConfig { seed: a.seed, window_days: a.window, ..EnhancementConfig::default() };
            cfg.validate()?;
            let backend = match &a.backend_url {
                Some(url) => Some(HttpPolicy::new(url.clone(), Duration::from_secs(60))?),
                None => None,
            };
            let opts = PipelineOptions { enhance: !a.no_enhance, verify: true };
            let mut all = Vec::new();
            for f in families(&a.family)? {
                let batch = run_family(f, &cfg, a.count, &reg, backend.as_ref().map(|b| b as &dyn PolicyBackend), opts);
                println!("{:<16} accepted {:>6}  rejected {:>6}", f.as_str(), batch.accepted.len(), batch.rejected.len());
                for r in batch.rejected.iter().take(5) {
                    tracing::warn!(family = r.family.as_str(), index = r.index, "{}", r.reason);
                }
                all.extend(batch.accepted);
            }
            write_trajectories(&a.out, &all)?;
        }
        DatagenCommand::Enhance(a) => {
            let cfg = EnhancementConfig::with_seed(a.seed);
            let ts = read_trajectories(&a.input, ParseOptions::STRICT)?;
            let out = ts
                .par_iter()
                .enumerate()
                .map(|(i, t)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                    rng.set_stream(i as u64);
                    enhance(t, &cfg, &mut rng).with_context(|| format!("episode {}", i + 1))
                })
                .collect::<Result<Vec<_>>>()?;
            write_trajectories(&a.out, &out)?;
        }
        DatagenCommand::Verify(a) => {
            let ts = read_trajectories(&a.input, ParseOptions::default())?;
            let forced = a.family.as_deref().map(families).transpose()?.and_then(|f| f.first().copied());
            let mut dirty = 0;
            for (i, t) in ts.iter().enumerate() {
                let report = match forced {
                    Some(f) => verify_as(t, &reg, Some(f), VerifyOptions { window_days: a.window }),
                    None if a.window == crate::config::DEFAULT_WINDOW_DAYS => verify(t, &reg),
                    None => verify_as(t, &reg, crate::generate::family_of(t), VerifyOptions { window_days: a.window }),
                };
                if !report.is_clean() {
                    dirty += 1;
                    for v in &report.violations {
                        println!("episode {}: {:?} at {:?}: {}", i + 1, v.kind, v.state, v.detail);
                    }
                }
            }
            println!("{} episodes, {} clean, {} with violations", ts.len(), ts.len() - dirty, dirty);
            if dirty > 0 {
                bail!("{dirty} episodes failed verification");
            }
        }
        DatagenCommand::Interleave(a) => {
            let ts = read_trajectories(&a.input, ParseOptions::default())?;
            let samples: Vec<TrainingSample> =
                ts.par_iter().enumerate().flat_map_iter(|(i, t)| interleave(t, &reg, a.seed ^ i as u64)).collect();
            write_jsonl(&a.out, &samples)?;
            println!("{}", dataset_stats(&samples));
        }
        DatagenCommand::Stats(a) => {
            let samples: Vec<TrainingSample> = read_jsonl(&a.input)?;
            println!("{}", dataset_stats(&samples));
        }
    }
    Ok(())
}
