use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use crate::dataset::{evaluate_dataset, Threshold};
use crate::text::MetricConfig;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted outputs, line-aligned with the references.
    #[arg(long)]
    pub pred: PathBuf,
    /// Reference samples as written by the interleaver.
    #[arg(long)]
    pub gold: PathBuf,
    /// Where to write the machine-readable report.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Fail when a row falls below `metric=value`, e.g. `tool_acc=0.9`.
    #[arg(long = "min")]
    pub min: Vec<Threshold>,
    #[arg(long)]
    pub no_smoothing: bool,
}

/// Prints the table and returns an error when a threshold is missed.
pub fn run(a: EvalArgs) -> Result<()> {
    let cfg = MetricConfig { bleu_add_one: !a.no_smoothing, ..MetricConfig::default() };
    let report = evaluate_dataset(&a.pred, &a.gold, &cfg)?;
    print!("{report}");
    if let Some(path) = &a.json_out {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    let missed = report.violations(&a.min);
    for m in &missed {
        eprintln!("below threshold: {m}");
    }
    if !missed.is_empty() {
        bail!("{} threshold violations", missed.len());
    }
    Ok(())
}
