use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::config::BenchmarkConfig;
use super::render::{field_text, render_prompt, ChatMode};
use super::HarnessError;
use crate::backends::ModelBackend;
use crate::decoder::{sample_label, LabelTrie, SamplerPolicy};
use crate::hash::item_seed;
use crate::ingest::{JsonlWriter, RecordStream};
use crate::stats::{weighted_f1, Estimate, ScoreCell};
use crate::tokenizer::{TokenId, Tokenizer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    pub rendered_prompt: String,
    pub gold_label: String,
}

/// One sampled answer. Field order is the on-disk JSONL order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub item_id: String,
    pub repetition: u32,
    pub sampled_label: String,
    pub seed: u64,
    pub steps: usize,
    pub gold_label: String,
}

/// Build an item from one data record (`line` is used when the config has
/// no id field).
pub fn item_from_record(
    cfg: &BenchmarkConfig,
    record: &Map<String, Value>,
    line: usize,
    chat_mode: ChatMode,
) -> Result<EvalItem, HarnessError> {
    let id = match &cfg.id_field {
        Some(f) => field_text(record, f, &format!("line {line}"))?,
        None => line.to_string(),
    };
    let raw = field_text(record, &cfg.gold_field, &id)?;
    let gold = if cfg.gold_map.is_empty() {
        raw
    } else {
        cfg.gold_map
            .get(&raw)
            .cloned()
            .ok_or_else(|| HarnessError::UnknownGold {
                item: id.clone(),
                value: raw.clone(),
            })?
    };
    if !cfg.labels.contains(&gold) {
        return Err(HarnessError::UnknownGold { item: id, value: gold });
    }
    Ok(EvalItem {
        rendered_prompt: render_prompt(cfg, record, chat_mode, &id)?,
        id,
        gold_label: gold,
    })
}

/// Every record of `cfg.data_path`, in file order.
pub fn load_items(cfg: &BenchmarkConfig, chat_mode: ChatMode) -> Result<Vec<EvalItem>, HarnessError> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for rec in RecordStream::open(&cfg.data_path)? {
        let (line, record) = rec?;
        let item = item_from_record(cfg, &record, line, chat_mode)?;
        if !seen.insert(item.id.clone()) {
            return Err(HarnessError::DuplicateItem(item.id));
        }
        items.push(item);
    }
    if items.is_empty() {
        return Err(HarnessError::Config(format!(
            "{}: no items",
            cfg.data_path.display()
        )));
    }
    Ok(items)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Run only these repetition indices (all of `0..cfg.repetitions` when `None`).
    pub only_repetitions: Option<Vec<u32>>,
    /// Evaluate items of one repetition concurrently.
    pub parallel: bool,
}

fn sample_item(
    cfg: &BenchmarkConfig,
    item: &EvalItem,
    prompt_ids: &[TokenId],
    repetition: u32,
    backend: &dyn ModelBackend,
    trie: &LabelTrie,
) -> Result<Prediction, HarnessError> {
    let seed = item_seed(cfg.base_seed, repetition, &item.id);
    let policy = SamplerPolicy::with_seed(seed);
    let s = sample_label(trie, backend, prompt_ids, &policy, &mut policy.rng()).map_err(|source| {
        HarnessError::Decode {
            item: item.id.clone(),
            repetition,
            source,
        }
    })?;
    Ok(Prediction {
        item_id: item.id.clone(),
        repetition,
        sampled_label: s.label,
        seed,
        steps: s.steps,
        gold_label: item.gold_label.clone(),
    })
}

/// Run the repetition protocol. Repetitions run in order; each item's seed
/// depends only on (base seed, repetition, item id), so any repetition can
/// be rerun on its own. Predictions are appended to `sink` as they become
/// final: when an item fails, the predictions before it in the same
/// repetition (and all earlier repetitions) are already written.
pub fn run_benchmark<W: Write>(
    cfg: &BenchmarkConfig,
    items: &[EvalItem],
    backend: &dyn ModelBackend,
    tokenizer: &dyn Tokenizer,
    trie: &LabelTrie,
    opts: &RunOptions,
    mut sink: Option<&mut JsonlWriter<W>>,
) -> Result<Vec<Prediction>, HarnessError> {
    if trie.labels() != cfg.labels.as_slice() {
        return Err(HarnessError::Config(format!(
            "trie labels {:?} differ from benchmark labels {:?}",
            trie.labels(),
            cfg.labels
        )));
    }
    let prompt_ids = items
        .iter()
        .map(|it| {
            tokenizer.encode(&it.rendered_prompt).map_err(|source| HarnessError::Tokenizer {
                item: it.id.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let reps: Vec<u32> = match &opts.only_repetitions {
        Some(r) => {
            if let Some(bad) = r.iter().find(|&&x| x >= cfg.repetitions) {
                return Err(HarnessError::Config(format!(
                    "repetition {bad} out of range 0..{}",
                    cfg.repetitions
                )));
            }
            r.clone()
        }
        None => (0..cfg.repetitions).collect(),
    };
    let mut all = Vec::with_capacity(items.len() * reps.len());
    for r in reps {
        let one = |(item, ids): (&EvalItem, &Vec<TokenId>)| sample_item(cfg, item, ids, r, backend, trie);
        let results: Vec<Result<Prediction, HarnessError>> = if opts.parallel {
            items.par_iter().zip(prompt_ids.par_iter()).map(one).collect()
        } else {
            // stop at the first failure instead of sampling the rest
            let mut out = Vec::with_capacity(items.len());
            for pair in items.iter().zip(&prompt_ids) {
                let res = one(pair);
                let failed = res.is_err();
                out.push(res);
                if failed {
                    break;
                }
            }
            out
        };
        for res in results {
            let pred = match res {
                Ok(p) => p,
                Err(e) => {
                    if let Some(w) = sink.as_deref_mut() {
                        w.flush().map_err(HarnessError::Write)?;
                    }
                    return Err(e);
                }
            };
            if let Some(w) = sink.as_deref_mut() {
                w.write(&pred).map_err(HarnessError::Write)?;
            }
            all.push(pred);
        }
        if let Some(w) = sink.as_deref_mut() {
            w.flush().map_err(HarnessError::Write)?;
        }
    }
    Ok(all)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>, HarnessError> {
    let path = path.as_ref();
    let io_err = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let p = serde_json::from_str(&line).map_err(|e| {
            HarnessError::Config(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(p);
    }
    Ok(out)
}

/// Weighted F1 per repetition, keyed by repetition index.
pub fn score_repetitions(
    preds: &[Prediction],
    labels: &[String],
) -> Result<BTreeMap<u32, f64>, HarnessError> {
    let mut by_rep: BTreeMap<u32, (Vec<String>, Vec<String>)> = BTreeMap::new();
    for p in preds {
        let (g, s) = by_rep.entry(p.repetition).or_default();
        g.push(p.gold_label.clone());
        s.push(p.sampled_label.clone());
    }
    if by_rep.is_empty() {
        return Err(HarnessError::Stats(crate::stats::StatsError::Empty));
    }
    by_rep
        .into_iter()
        .map(|(r, (g, s))| Ok((r, weighted_f1(&g, &s, labels)?)))
        .collect()
}

/// Run description stored next to the predictions so reports can be built
/// from prediction files alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub model: String,
    pub benchmark: String,
    pub labels: Vec<String>,
    pub repetitions: u32,
    pub base_seed: u64,
    pub chat_mode: ChatMode,
    pub items: usize,
}

/// Mean weighted F1 over repetitions with its CI, as a leaderboard cell.
pub fn score_cell(meta: &RunMeta, preds: &[Prediction]) -> Result<ScoreCell, HarnessError> {
    let per_rep: Vec<f64> = score_repetitions(preds, &meta.labels)?.into_values().collect();
    let est = Estimate::from_samples(&per_rep).expect("non-empty");
    let half_width = est
        .ci_half_width
        .ok_or(HarnessError::Stats(crate::stats::StatsError::TooFewRuns(per_rep.len())))?;
    Ok(ScoreCell {
        model: meta.model.clone(),
        benchmark: meta.benchmark.clone(),
        mean: est.mean,
        half_width,
    })
}
