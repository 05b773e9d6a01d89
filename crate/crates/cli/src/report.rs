use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use corpusgate::harness::{read_predictions, score_cell, RunMeta};
use corpusgate::stats::{emit_report, rank_and_aggregate, OverviewRow, ReportFormat};
use serde::Serialize;
use serde_json::{json, Value};

use crate::common::{read, snapshot, DataError, Globals};

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Eval output directory holding run.json and predictions.jsonl (repeatable)
    #[arg(long = "run", required = true)]
    pub runs: Vec<PathBuf>,
    /// JSON list of per-model overview rows (model, size, fertility, ...)
    #[arg(long)]
    pub overview: Option<PathBuf>,
    #[arg(long, default_value = "markdown", value_parser = parse_format)]
    #[serde(serialize_with = "ser_format")]
    pub format: ReportFormat,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

fn ser_format<S: serde::Serializer>(f: &ReportFormat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(extension(*f))
}

fn extension(f: ReportFormat) -> &'static str {
    match f {
        ReportFormat::Markdown => "md",
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    }
}

pub fn run(g: &Globals, args: &ReportArgs) -> Result<Value> {
    snapshot(g, "report", json!({"args": args}))?;
    let mut cells = Vec::with_capacity(args.runs.len());
    for dir in &args.runs {
        let meta_path = dir.join("run.json");
        let meta: RunMeta = serde_json::from_str(&read(&meta_path)?)
            .map_err(|e| DataError(format!("{}: {e}", meta_path.display())))?;
        let preds = read_predictions(dir.join("predictions.jsonl"))?;
        let cell = score_cell(&meta, &preds).with_context(|| format!("scoring {}", dir.display()))?;
        cells.push(cell);
    }
    let overview: Vec<OverviewRow> = match &args.overview {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| DataError(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let table = rank_and_aggregate(&cells)?;
    let text = emit_report(&table, &overview, args.format);
    let path = g.output_dir.join(format!("report.{}", extension(args.format)));
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(json!({
        "models": table.rows.len(),
        "benchmarks": table.benchmarks,
        "output": path,
        "median_ranks": table.rows.iter().map(|r| (r.model.clone(), json!(r.median_rank))).collect::<serde_json::Map<_, _>>(),
    }))
}
