use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use corpusgate::harness::import::{import_dataset, ImportKind};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Args, Serialize)]
pub struct ImportArgs {
    /// dbrd, cola or xlwic
    #[arg(value_parser = parse_kind)]
    pub dataset: ImportKind,
    /// Source file (JSONL, CSV or TSV as published)
    #[arg(long)]
    pub input: PathBuf,
    /// JSONL file to write
    #[arg(long)]
    pub output: PathBuf,
}

fn parse_kind(s: &str) -> Result<ImportKind, String> {
    s.parse()
}

pub fn run(args: &ImportArgs) -> Result<Value> {
    let summary = import_dataset(args.dataset, &args.input, &args.output)?;
    let mut v = serde_json::to_value(&summary)?;
    v["output"] = serde_json::json!(args.output);
    Ok(v)
}
