//! Scoring and aggregation: weighted F1, Student-t confidence intervals,
//! per-benchmark ranks with median-rank ordering, and report rendering.

mod ci;
mod f1;
mod rank;
mod report;

use thiserror::Error;

pub use ci::{confidence_interval, t_quantile_975, Estimate};
pub use f1::{weighted_f1, ConfusionMatrix};
pub use rank::{rank_and_aggregate, ModelRow, RankedScore, ScoreCell, ScoreTable};
pub use report::{emit_report, parse_csv_report, OverviewRow, ReportFormat, REPORT_SCHEMA};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("cannot score an empty prediction set")]
    Empty,
    #[error("{golds} gold labels but {preds} predictions")]
    LengthMismatch { golds: usize, preds: usize },
    #[error("label {0:?} is not in the label set")]
    UnknownLabel(String),
    #[error("CI needs ≥2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("no score for model {model:?} on benchmark {benchmark:?}")]
    MissingCell { model: String, benchmark: String },
    #[error("duplicate score for model {model:?} on benchmark {benchmark:?}")]
    DuplicateCell { model: String, benchmark: String },
    #[error("report parse error: {0}")]
    Parse(String),
}
