//! Benchmark definitions, prompt rendering and the repetition protocol.

mod config;
pub mod import;
mod render;
mod run;
mod template;

use std::path::PathBuf;

use thiserror::Error;

use crate::decoder::DecodeError;
use crate::ingest::IngestError;
use crate::stats::StatsError;
use crate::tokenizer::TokenizerError;

pub use config::{BenchmarkConfig, TaskKind};
pub use render::{chatml_wrap, quoted_choices, render_prompt, ChatMode};
pub use run::{
    item_from_record, load_items, read_predictions, run_benchmark, score_cell, score_repetitions,
    EvalItem, Prediction, RunMeta, RunOptions,
};
pub use template::Template;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing predictions: {0}")]
    Write(#[source] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("item {item}: missing field \"{field}\"")]
    MissingField { item: String, field: String },
    #[error("item {item}: field \"{field}\" is not a string or number")]
    NotScalar { item: String, field: String },
    #[error("item {item}: gold value {value:?} is not a label")]
    UnknownGold { item: String, value: String },
    #[error("duplicate item id {0:?}")]
    DuplicateItem(String),
    #[error("item {item}: {source}")]
    Tokenizer {
        item: String,
        #[source]
        source: TokenizerError,
    },
    #[error("repetition {repetition}, item {item}: {source}")]
    Decode {
        item: String,
        repetition: u32,
        #[source]
        source: DecodeError,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}
