use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use corpusgate::decoder::{build_trie, Termination};
use corpusgate::harness::{
    load_items, run_benchmark, score_repetitions, BenchmarkConfig, ChatMode, RunMeta, RunOptions,
};
use corpusgate::ingest::JsonlWriter;
use corpusgate::stats::Estimate;
use serde::Serialize;
use serde_json::{json, Value};

use crate::common::{snapshot, write_json, BackendArgs, DataError, Globals, TokenizerArgs};

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Built-in benchmark (arc, mmlu, dbrd, cola, xlwic); use --config for a file
    #[arg(long)]
    pub benchmark: Option<String>,
    /// Override the benchmark's data file
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    #[arg(long, default_value = "none", value_parser = parse_chat)]
    #[serde(serialize_with = "ser_chat")]
    pub chat_mode: ChatMode,
    /// Model name recorded in run.json (defaults to the backend name)
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub repetitions: Option<u32>,
    /// Text put before every label when building the label trie
    #[arg(long)]
    pub label_prefix: Option<String>,
    /// Terminate labels with the eos token
    #[arg(long)]
    pub eos_labels: bool,
    /// Sample the items of a repetition concurrently
    #[arg(long)]
    pub parallel: bool,
    /// Only run these repetition indices (comma-separated)
    #[arg(long = "repetition", value_delimiter = ',')]
    pub only_repetitions: Vec<u32>,
}

fn parse_chat(s: &str) -> Result<ChatMode, String> {
    s.parse()
}

fn ser_chat<S: serde::Serializer>(m: &ChatMode, s: S) -> Result<S::Ok, S::Error> {
    m.serialize(s)
}

fn resolve_config(g: &Globals, args: &EvalArgs) -> Result<BenchmarkConfig> {
    let mut cfg = match (&args.benchmark, &g.config) {
        (Some(_), Some(_)) => bail!(DataError("--benchmark and --config are mutually exclusive".into())),
        (None, None) => bail!(DataError("eval needs --benchmark or --config".into())),
        (Some(name), None) => BenchmarkConfig::preset(name).ok_or_else(|| {
            DataError(format!(
                "unknown benchmark {name:?} (expected one of {})",
                BenchmarkConfig::PRESETS.join(", ")
            ))
        })?,
        (None, Some(path)) => BenchmarkConfig::load(path)?,
    };
    if let Some(d) = &args.data {
        cfg.data_path = d.clone();
    }
    if let Some(seed) = g.seed {
        cfg.base_seed = seed;
    }
    if let Some(r) = args.repetitions {
        cfg.repetitions = r;
    }
    if let Some(p) = &args.label_prefix {
        cfg.trie.label_prefix = p.clone();
    }
    if args.eos_labels {
        cfg.trie.termination = Termination::Eos;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(g: &Globals, args: &EvalArgs) -> Result<Value> {
    let cfg = resolve_config(g, args)?;
    let backend = args.backend.build()?;
    let tok = args.tokenizer.load()?;
    if args.chat_mode == ChatMode::Chatml && !backend.info().supports_chat {
        log::warn!("chat mode requested but the backend does not declare chat support");
    }
    snapshot(g, "eval", json!({"args": args, "benchmark": cfg}))?;

    let items = load_items(&cfg, args.chat_mode)?;
    let trie = build_trie(&cfg.labels, tok.as_ref(), &cfg.trie)?;
    log::info!(
        "{}: {} items x {} repetitions, {} labels",
        cfg.name,
        items.len(),
        cfg.repetitions,
        cfg.labels.len()
    );
    let meta = RunMeta {
        model: args.model.clone().unwrap_or_else(|| backend.info().name),
        benchmark: cfg.name.clone(),
        labels: cfg.labels.clone(),
        repetitions: cfg.repetitions,
        base_seed: cfg.base_seed,
        chat_mode: args.chat_mode,
        items: items.len(),
    };
    write_json(&g.output_dir.join("run.json"), &meta)?;

    let pred_path = g.output_dir.join("predictions.jsonl");
    let mut sink = JsonlWriter::create(&pred_path)?;
    let opts = RunOptions {
        only_repetitions: (!args.only_repetitions.is_empty()).then(|| args.only_repetitions.clone()),
        parallel: args.parallel,
    };
    let preds = run_benchmark(&cfg, &items, backend.as_ref(), tok.as_ref(), &trie, &opts, Some(&mut sink))
        .with_context(|| format!("evaluating {} (partial predictions in {})", cfg.name, pred_path.display()))?;

    let per_rep = score_repetitions(&preds, &cfg.labels)?;
    let f1: Vec<f64> = per_rep.values().copied().collect();
    let est = Estimate::from_samples(&f1).map(|e| e.scaled(100.0));
    Ok(json!({
        "model": meta.model,
        "benchmark": cfg.name,
        "items": items.len(),
        "predictions": preds.len(),
        "output": pred_path,
        "f1_per_repetition": per_rep.iter().map(|(r, f)| (r.to_string(), json!(f * 100.0))).collect::<serde_json::Map<_, _>>(),
        "mean_f1": est.map(|e| e.mean),
        "ci_half_width": est.and_then(|e| e.ci_half_width),
    }))
}
