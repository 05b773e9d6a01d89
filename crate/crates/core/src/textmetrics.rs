//! Tokenizer fertility and inference throughput.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, ModelBackend};
use crate::ingest::Document;
use crate::stats::Estimate;
use crate::tokenizer::{Tokenizer, TokenizerError};

/// Hard ceiling on the context used for throughput runs.
pub const MAX_CONTEXT_CEILING: usize = 8192;

#[derive(Debug, Error)]
pub enum TextMetricsError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("document {doc_id}: {source}")]
    Tokenizer {
        doc_id: String,
        #[source]
        source: TokenizerError,
    },
    #[error("run {run}, document {doc_id}: {source}")]
    Backend {
        run: usize,
        doc_id: String,
        #[source]
        source: BackendError,
    },
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FertilityMode {
    /// Encode each word on its own; non-initial words get a leading space.
    #[default]
    Word,
    /// Encode the whole document once and divide by its word count.
    Doc,
}

impl std::str::FromStr for FertilityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word" => Ok(Self::Word),
            "doc" => Ok(Self::Doc),
            other => Err(format!("unknown fertility mode {other:?} (expected word|doc)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocCount {
    pub id: String,
    pub tokens: u64,
    pub words: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilityStats {
    pub total_words: u64,
    pub total_tokens: u64,
    pub fertility: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_doc: Option<Vec<DocCount>>,
}

/// Token and word counts for one document.
pub fn count_document(
    tokenizer: &dyn Tokenizer,
    doc: &Document,
    mode: FertilityMode,
) -> Result<DocCount, TextMetricsError> {
    let wrap = |source| TextMetricsError::Tokenizer {
        doc_id: doc.id.clone(),
        source,
    };
    let mut words = 0u64;
    let mut tokens = 0u64;
    match mode {
        FertilityMode::Word => {
            let mut buf = String::new();
            for (i, word) in doc.text.split_whitespace().enumerate() {
                buf.clear();
                if i > 0 {
                    buf.push(' ');
                }
                buf.push_str(word);
                tokens += tokenizer.encode(&buf).map_err(wrap)?.len() as u64;
                words += 1;
            }
        }
        FertilityMode::Doc => {
            words = doc.text.split_whitespace().count() as u64;
            if words > 0 {
                tokens = tokenizer.encode(&doc.text).map_err(wrap)?.len() as u64;
            }
        }
    }
    Ok(DocCount {
        id: doc.id.clone(),
        tokens,
        words,
    })
}

/// Running (tokens, words) totals. Merging is associative, so documents can
/// be counted in parallel chunks and combined afterwards.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FertilityAccumulator {
    pub total_words: u64,
    pub total_tokens: u64,
    per_doc: Option<Vec<DocCount>>,
}

impl FertilityAccumulator {
    pub fn new(keep_per_doc: bool) -> Self {
        Self {
            per_doc: keep_per_doc.then(Vec::new),
            ..Self::default()
        }
    }

    pub fn add(&mut self, count: DocCount) {
        self.total_words += count.words;
        self.total_tokens += count.tokens;
        if let Some(v) = &mut self.per_doc {
            v.push(count);
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.total_words += other.total_words;
        self.total_tokens += other.total_tokens;
        self.per_doc = match (self.per_doc, other.per_doc) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            (a, b) => a.or(b),
        };
        self
    }

    pub fn finish(self) -> Result<FertilityStats, TextMetricsError> {
        if self.total_words == 0 {
            return Err(TextMetricsError::EmptyCorpus);
        }
        Ok(FertilityStats {
            total_words: self.total_words,
            total_tokens: self.total_tokens,
            fertility: self.total_tokens as f64 / self.total_words as f64,
            per_doc: self.per_doc,
        })
    }
}

/// Micro-averaged fertility (total tokens / total words) over `docs`.
pub fn fertility<'a>(
    tokenizer: &dyn Tokenizer,
    docs: impl IntoIterator<Item = &'a Document>,
    mode: FertilityMode,
) -> Result<FertilityStats, TextMetricsError> {
    let mut acc = FertilityAccumulator::new(false);
    for doc in docs {
        acc.add(count_document(tokenizer, doc, mode)?);
    }
    acc.finish()
}

/// Time source for throughput runs.
pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
}

#[derive(Debug)]
pub struct MonotonicClock(Instant);

impl Default for MonotonicClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

/// Deterministic clock: each `now()` returns the current reading and then
/// advances it by a fixed step.
#[derive(Debug)]
pub struct StepClock {
    nanos: AtomicU64,
    step: u64,
}

impl StepClock {
    pub fn new(step: Duration) -> Self {
        Self {
            nanos: AtomicU64::new(0),
            step: step.as_nanos() as u64,
        }
    }
}

impl Clock for StepClock {
    fn now(&self) -> Duration {
        Duration::from_nanos(self.nanos.fetch_add(self.step, Ordering::SeqCst))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub tokens: u64,
    pub seconds: f64,
    pub tokens_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub runs: usize,
    /// Half-width is absent when only one run was made.
    pub tokens_per_second: Estimate,
    pub total_seconds: Estimate,
    pub docs_processed: usize,
    pub max_context: usize,
    pub per_run: Vec<RunTiming>,
}

/// Effective context: the requested value capped by the backend's own limit
/// and by [`MAX_CONTEXT_CEILING`].
pub fn effective_context(requested: usize, backend_max: usize) -> usize {
    requested.min(backend_max).min(MAX_CONTEXT_CEILING)
}

/// Sequential batch-size-1 throughput: one forward call per document,
/// truncated to the effective context, timed with `clock` around each call.
pub fn throughput(
    backend: &dyn ModelBackend,
    tokenizer: &dyn Tokenizer,
    docs: &[Document],
    max_context: usize,
    runs: usize,
    clock: &dyn Clock,
) -> Result<TimingReport, TextMetricsError> {
    if runs == 0 {
        return Err(TextMetricsError::InvalidArgument("runs must be at least 1".into()));
    }
    if docs.is_empty() {
        return Err(TextMetricsError::EmptyCorpus);
    }
    let ctx = effective_context(max_context, backend.info().max_context);
    if ctx == 0 {
        return Err(TextMetricsError::InvalidArgument("max_context must be at least 1".into()));
    }
    let mut per_run = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut tokens = 0u64;
        let mut elapsed = Duration::ZERO;
        for doc in docs {
            let mut ids = tokenizer.encode(&doc.text).map_err(|source| TextMetricsError::Tokenizer {
                doc_id: doc.id.clone(),
                source,
            })?;
            ids.truncate(ctx);
            let start = clock.now();
            backend.forward(&ids).map_err(|source| TextMetricsError::Backend {
                run,
                doc_id: doc.id.clone(),
                source,
            })?;
            elapsed += clock.now().saturating_sub(start);
            tokens += ids.len() as u64;
        }
        let nanos = elapsed.as_nanos() as f64;
        if nanos == 0.0 {
            return Err(TextMetricsError::InvalidArgument(format!(
                "run {run}: clock reported zero elapsed time"
            )));
        }
        per_run.push(RunTiming {
            tokens,
            seconds: nanos / 1e9,
            tokens_per_second: tokens as f64 * 1e9 / nanos,
        });
    }
    let tps: Vec<f64> = per_run.iter().map(|r| r.tokens_per_second).collect();
    let secs: Vec<f64> = per_run.iter().map(|r| r.seconds).collect();
    Ok(TimingReport {
        runs,
        tokens_per_second: Estimate::from_samples(&tps).expect("runs ≥ 1"),
        total_seconds: Estimate::from_samples(&secs).expect("runs ≥ 1"),
        docs_processed: docs.len(),
        max_context: ctx,
        per_run,
    })
}

fn fmt_est(e: &Estimate) -> String {
    match e.ci_half_width {
        Some(h) => format!("{:.2} ± {:.2}", e.mean, h),
        None => format!("{:.2}", e.mean),
    }
}

/// Aligned two-column text table for terminal output.
pub fn render_table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out
}

impl FertilityStats {
    pub fn to_table(&self) -> String {
        render_table(&[
            ("words", self.total_words.to_string()),
            ("tokens", self.total_tokens.to_string()),
            ("fertility", format!("{:.4}", self.fertility)),
        ])
    }
}

impl TimingReport {
    pub fn to_table(&self) -> String {
        render_table(&[
            ("runs", self.runs.to_string()),
            ("documents", self.docs_processed.to_string()),
            ("max context", self.max_context.to_string()),
            ("tokens/s", fmt_est(&self.tokens_per_second)),
            ("seconds", fmt_est(&self.total_seconds)),
        ])
    }
}
