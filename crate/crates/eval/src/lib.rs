//! Text-overlap and tool-call metrics for planner and caller outputs, and a
//! dataset harness that reports them per role and family.

pub mod calls;
pub mod cli;
pub mod dataset;
pub mod text;

pub use calls::{call_accuracy, normalize_value, CallAccuracy};
pub use dataset::{evaluate_dataset, evaluate_samples, EvalReport, EvalRow, EvalSample, Threshold};
pub use text::{bleu, rouge_l, rouge_n, tokenize, MetricConfig};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("{predictions} predictions for {references} references")]
    LengthMismatch { predictions: usize, references: usize },
}
