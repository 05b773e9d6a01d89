use std::io::BufRead;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use corpusgate::ingest::{stream_documents, FieldMap, JsonlWriter};
use corpusgate::textmetrics::{
    count_document, throughput, Clock, FertilityAccumulator, FertilityMode, MonotonicClock, StepClock,
};
use corpusgate::tokenizer::TokenId;
use corpusgate::Document;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::common::{snapshot, write_json, BackendArgs, DataError, Globals, TokenizerArgs};

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Args, Serialize)]
pub struct TokenizeArgs {
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    /// Text to encode (repeatable); reads lines from --input or stdin otherwise
    #[arg(long)]
    pub text: Vec<String>,
    /// Plain-text file, one string per line
    #[arg(long, conflicts_with = "text")]
    pub input: Option<PathBuf>,
    /// Decode comma-separated ids instead of encoding
    #[arg(long, conflicts_with_all = ["text", "input"])]
    pub decode: Option<String>,
}

pub fn tokenize(g: &Globals, args: &TokenizeArgs) -> Result<Value> {
    let tok = args.tokenizer.load()?;
    snapshot(g, "tokenize", json!({"args": args}))?;
    if let Some(ids) = &args.decode {
        let ids = ids
            .split(',')
            .map(|s| s.trim().parse::<TokenId>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| DataError(format!("--decode: {e}")))?;
        let text = tok.decode(&ids)?;
        return Ok(json!({"ids": ids, "text": text}));
    }
    let lines: Vec<String> = if !args.text.is_empty() {
        args.text.clone()
    } else if let Some(p) = &args.input {
        crate::common::read(p)?.lines().map(str::to_string).collect()
    } else {
        std::io::stdin().lock().lines().collect::<Result<_, _>>().context("reading stdin")?
    };
    let out_path = g.output_dir.join("tokens.jsonl");
    let mut out = JsonlWriter::create(&out_path)?;
    let mut total = 0usize;
    let mut inline = Vec::new();
    for line in &lines {
        let ids = tok.encode(line)?;
        let tokens: Vec<Option<String>> = ids.iter().map(|&i| tok.token_text(i)).collect();
        total += ids.len();
        let rec = json!({"text": line, "ids": ids, "tokens": tokens});
        out.write(&rec).context("writing tokens")?;
        if inline.len() < 20 {
            inline.push(rec);
        }
    }
    out.flush().context("writing tokens")?;
    Ok(json!({
        "tokenizer": args.tokenizer.describe(),
        "strings": lines.len(),
        "tokens": total,
        "output": out_path,
        "results": inline,
    }))
}

#[derive(Debug, Args, Serialize)]
pub struct FertilityArgs {
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    /// JSONL corpus
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "word", value_parser = parse_mode)]
    #[serde(serialize_with = "ser_mode")]
    pub mode: FertilityMode,
    /// Only the first N documents (file order)
    #[arg(long)]
    pub limit: Option<usize>,
    /// Include per-document counts in fertility.json
    #[arg(long)]
    pub per_doc: bool,
    #[arg(long, default_value = "text")]
    pub text_field: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

fn parse_mode(s: &str) -> Result<FertilityMode, String> {
    s.parse()
}

fn ser_mode<S: serde::Serializer>(m: &FertilityMode, s: S) -> Result<S::Ok, S::Error> {
    m.serialize(s)
}

fn read_docs(input: &PathBuf, text_field: &str, limit: Option<usize>) -> Result<Vec<Document>> {
    let fields = FieldMap {
        text: text_field.to_string(),
        ..FieldMap::default()
    };
    let stream = stream_documents(input, &fields)?;
    let docs = stream.take(limit.unwrap_or(usize::MAX)).collect::<Result<Vec<_>, _>>()?;
    Ok(docs)
}

pub fn fertility(g: &Globals, args: &FertilityArgs) -> Result<(Value, Option<String>)> {
    let tok = args.tokenizer.load()?;
    snapshot(g, "fertility", json!({"args": args}))?;
    let docs = read_docs(&args.input, &args.text_field, args.limit)?;
    let counts = docs
        .par_iter()
        .map(|d| count_document(tok.as_ref(), d, args.mode))
        .collect::<Result<Vec<_>, _>>()?;
    let mut acc = FertilityAccumulator::new(args.per_doc);
    for c in counts {
        acc.add(c);
    }
    let stats = acc.finish()?;
    let path = g.output_dir.join("fertility.json");
    write_json(&path, &stats)?;
    let table = (args.format == OutputFormat::Table).then(|| stats.to_table());
    Ok((
        json!({
            "tokenizer": args.tokenizer.describe(),
            "mode": args.mode,
            "documents": docs.len(),
            "total_words": stats.total_words,
            "total_tokens": stats.total_tokens,
            "fertility": stats.fertility,
            "output": path,
        }),
        table,
    ))
}

#[derive(Debug, Args, Serialize)]
pub struct ThroughputArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    /// JSONL corpus
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub limit: usize,
    /// Context cap (never above 8192)
    #[arg(long, default_value_t = 8192)]
    pub max_context: usize,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long, default_value = "text")]
    pub text_field: String,
    /// Replace the wall clock with one that advances this many microseconds per reading
    #[arg(long, hide = true)]
    pub step_clock_us: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

pub fn throughput_cmd(g: &Globals, args: &ThroughputArgs) -> Result<(Value, Option<String>)> {
    let backend = args.backend.build()?;
    let tok = args.tokenizer.load()?;
    snapshot(g, "throughput", json!({"args": args}))?;
    let docs = read_docs(&args.input, &args.text_field, Some(args.limit))?;
    let clock: Box<dyn Clock> = match args.step_clock_us {
        Some(us) => Box::new(StepClock::new(Duration::from_micros(us))),
        None => Box::new(MonotonicClock::default()),
    };
    let report = throughput(backend.as_ref(), tok.as_ref(), &docs, args.max_context, args.runs, clock.as_ref())?;
    let path = g.output_dir.join("throughput.json");
    write_json(&path, &report)?;
    let table = (args.format == OutputFormat::Table).then(|| report.to_table());
    let mut summary = serde_json::to_value(&report)?;
    summary["backend"] = json!(backend.info().name);
    summary["output"] = json!(path);
    Ok((summary, table))
}
