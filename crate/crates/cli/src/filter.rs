use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::Utc;
use clap::Args;
use corpusgate::filters::{apply_chain, FilterConfig, FilterVerdict, StageSelection};
use corpusgate::ingest::{
    stream_documents, write_manifest, CorpusManifest, FieldMap, JsonlWriter, ManifestCounts,
    RejectedEntry,
};
use corpusgate::Document;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::common::{read, snapshot, DataError, Globals};

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    /// JSONL corpus
    #[arg(long)]
    pub input: PathBuf,
    /// Kept documents (JSONL); the manifest and rejected list are written next to it
    #[arg(long)]
    pub output: PathBuf,
    /// Which filter stages to apply: 1, 2 or both
    #[arg(long)]
    #[serde(serialize_with = "ser_stage")]
    pub stage: Option<StageSelection>,
    /// Replace the bad-word list with this file (one word per line)
    #[arg(long)]
    pub bad_words: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    pub text_field: String,
    #[arg(long, default_value = "id")]
    pub id_field: String,
    #[arg(long, default_value = "url")]
    pub url_field: String,
    /// Documents per parallel batch
    #[arg(long, default_value_t = 4096)]
    pub batch_size: usize,
}

fn ser_stage<S: serde::Serializer>(s: &Option<StageSelection>, ser: S) -> Result<S::Ok, S::Error> {
    match s {
        None => ser.serialize_none(),
        Some(StageSelection::One) => ser.serialize_str("1"),
        Some(StageSelection::Two) => ser.serialize_str("2"),
        Some(StageSelection::Both) => ser.serialize_str("both"),
    }
}

/// `<dir>/<stem><suffix>` next to `output`.
fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
    output.with_file_name(format!("{stem}{suffix}"))
}

pub fn run(g: &Globals, args: &FilterArgs) -> Result<Value> {
    let mut cfg = match &g.config {
        Some(p) => FilterConfig::load(p)?,
        None => FilterConfig::default(),
    };
    if let Some(stage) = args.stage {
        cfg = cfg.with_stages(stage);
    }
    if let Some(p) = &args.bad_words {
        cfg.bad_words = read(p)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
    }
    cfg.validate()?;
    if args.batch_size == 0 {
        return Err(DataError("--batch-size must be at least 1".into()).into());
    }
    let fields = FieldMap {
        text: args.text_field.clone(),
        id: args.id_field.clone(),
        url: args.url_field.clone(),
    };
    snapshot(g, "filter", json!({"args": args, "filter": cfg, "fingerprint": cfg.fingerprint()}))?;

    let manifest_path = sibling(&args.output, ".manifest.json");
    let rejected_path = sibling(&args.output, ".rejected.jsonl");
    let started = Utc::now();
    let mut kept_out = JsonlWriter::create(&args.output)?;
    let mut rejected_out = JsonlWriter::create(&rejected_path)?;
    let mut counts = ManifestCounts::default();
    let mut batch: Vec<Document> = Vec::with_capacity(args.batch_size);
    let mut docs = stream_documents(&args.input, &fields)?;

    let mut flush = |batch: &mut Vec<Document>, counts: &mut ManifestCounts| -> Result<()> {
        let verdicts: Vec<FilterVerdict> = batch.par_iter().map(|d| apply_chain(d, &cfg)).collect();
        for (doc, v) in batch.iter().zip(verdicts) {
            match v.reason {
                None => kept_out.write(&doc.to_record(&fields)),
                Some(reason) => {
                    log::debug!("{}: {} ({})", doc.id, reason.as_str(), v.detail.as_deref().unwrap_or(""));
                    rejected_out.write(&RejectedEntry {
                        id: doc.id.clone(),
                        reason: reason.as_str().to_string(),
                    })
                }
            }
            .context("writing filter output")?;
            counts.record(v.reason.map(|r| r.as_str()));
        }
        batch.clear();
        Ok(())
    };
    for doc in docs.by_ref() {
        batch.push(doc?);
        if batch.len() == args.batch_size {
            flush(&mut batch, &mut counts)?;
        }
    }
    flush(&mut batch, &mut counts)?;
    kept_out.flush().context("writing kept documents")?;
    rejected_out.flush().context("writing rejected list")?;

    let manifest = CorpusManifest::from_counts(counts, started, Utc::now(), cfg.fingerprint());
    write_manifest(&manifest, &manifest_path)?;
    log::info!(
        "{} read, {} kept, {} rejected",
        manifest.total_read,
        manifest.kept,
        manifest.total_read - manifest.kept
    );
    Ok(json!({
        "input": args.input,
        "output": args.output,
        "manifest": manifest_path,
        "rejected": rejected_path,
        "total_read": manifest.total_read,
        "kept": manifest.kept,
        "rejected_by_reason": manifest.rejected_by_reason,
        "config_fingerprint": manifest.config_fingerprint,
    }))
}
