use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use corpusgate::backends::{
    BackendError, HttpBackend, HttpBackendConfig, MockBackend, MockBackendConfig, MockMode,
    ModelBackend, ScriptEntry,
};
use corpusgate::decoder::DecodeError;
use corpusgate::filters::FilterError;
use corpusgate::harness::HarnessError;
use corpusgate::ingest::{IngestError, ManifestError};
use corpusgate::textmetrics::TextMetricsError;
use corpusgate::tokenizer::{load_bpe, whitespace_tokenizer, BpeModel, Tokenizer, TokenizerError};
use serde::Serialize;
use serde_json::Value;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BACKEND_IO: i32 = 3;

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Globals {
    /// Subcommand config file (filter rules for `filter`, benchmark for `eval`)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; overrides the seed in the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "info", value_parser = parse_level)]
    #[serde(serialize_with = "ser_level")]
    pub log_level: log::LevelFilter,
    /// Directory for summaries, snapshots and run outputs (created if absent)
    #[arg(long, global = true, default_value = "corpusgate-out")]
    pub output_dir: PathBuf,
    /// Worker threads (default: logical cores)
    #[arg(long, global = true)]
    #[serde(skip)]
    pub jobs: Option<usize>,
}

fn parse_level(s: &str) -> Result<log::LevelFilter, String> {
    s.parse().map_err(|_| format!("unknown log level {s:?}"))
}

fn ser_level<S: serde::Serializer>(l: &log::LevelFilter, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&l.to_string().to_lowercase())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockKind {
    Uniform,
    HashLogits,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value = "mock")]
    pub backend: BackendKind,
    /// Inference server base URL (http backend)
    #[arg(long, env = "CORPUSGATE_BACKEND_URL")]
    pub backend_url: Option<String>,
    #[arg(long, env = "CORPUSGATE_BACKEND_TOKEN", hide_env_values = true)]
    #[serde(skip)]
    pub bearer_token: Option<String>,
    #[arg(long, default_value_t = 60_000)]
    pub timeout_ms: u64,
    /// Concurrent request limit (http backend)
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Context length the backend model supports
    #[arg(long, default_value_t = 8192)]
    pub backend_max_context: usize,
    #[arg(long, default_value_t = false)]
    pub supports_chat: bool,
    #[arg(long, value_enum, default_value = "hash-logits")]
    pub mock_mode: MockKind,
    #[arg(long, default_value_t = 0)]
    pub mock_seed: u64,
    /// JSON list of {prompt_hash, candidate, logit}; switches the mock to scripted mode
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
}

impl BackendArgs {
    pub fn build(&self) -> Result<Box<dyn ModelBackend>> {
        Ok(match self.backend {
            BackendKind::Mock => {
                let (mode, script) = match &self.mock_script {
                    Some(p) => {
                        let text = read(p)?;
                        let script: Vec<ScriptEntry> = serde_json::from_str(&text)
                            .map_err(|e| DataError(format!("{}: {e}", p.display())))?;
                        (MockMode::Scripted, script)
                    }
                    None => match self.mock_mode {
                        MockKind::Uniform => (MockMode::Uniform, Vec::new()),
                        MockKind::HashLogits => (MockMode::HashLogits, Vec::new()),
                    },
                };
                Box::new(MockBackend::new(MockBackendConfig {
                    seed: self.mock_seed,
                    mode,
                    script,
                    max_context: self.backend_max_context,
                })?)
            }
            BackendKind::Http => {
                let base_url = self.backend_url.clone().ok_or_else(|| {
                    BackendError::Config("--backend http needs --backend-url or CORPUSGATE_BACKEND_URL".into())
                })?;
                Box::new(HttpBackend::new(HttpBackendConfig {
                    base_url,
                    timeout_ms: self.timeout_ms,
                    max_in_flight: self.max_in_flight,
                    bearer_token: self.bearer_token.clone(),
                    max_context: self.backend_max_context,
                    supports_chat: self.supports_chat,
                    name: None,
                })?)
            }
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TokenizerArgs {
    /// BPE vocab.json (token -> id)
    #[arg(long, requires = "merges")]
    pub vocab: Option<PathBuf>,
    /// BPE merges.txt
    #[arg(long, requires = "vocab")]
    pub merges: Option<PathBuf>,
    /// Use the whitespace reference tokenizer
    #[arg(long, conflicts_with_all = ["vocab", "merges"])]
    pub whitespace: bool,
}

impl TokenizerArgs {
    /// Loaded BPE files, the whitespace tokenizer, or a merge-free byte-level
    /// BPE when nothing is given.
    pub fn load(&self) -> Result<Box<dyn Tokenizer>> {
        if self.whitespace {
            return Ok(Box::new(whitespace_tokenizer()));
        }
        Ok(match (&self.vocab, &self.merges) {
            (Some(v), Some(m)) => Box::new(load_bpe(v, m)?),
            _ => Box::new(BpeModel::byte_level(&[])?),
        })
    }

    pub fn describe(&self) -> String {
        if self.whitespace {
            "whitespace".into()
        } else if let Some(v) = &self.vocab {
            format!("bpe:{}", v.display())
        } else {
            "byte-level".into()
        }
    }
}

/// Input that does not satisfy a documented format or constraint.
#[derive(Debug)]
pub struct DataError(pub String);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Write the resolved-config snapshot for this run.
pub fn snapshot(g: &Globals, command: &str, settings: Value) -> Result<()> {
    let doc = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "globals": g,
        "settings": settings,
    });
    write_json(&g.output_dir.join("resolved_config.json"), &doc)
}

/// One-line message for an error chain. Library errors often embed their
/// source in their own message, so a cause already contained in the text so
/// far is not repeated.
pub fn render_error(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if out.is_empty() {
            out = msg;
        } else if !out.contains(&msg) {
            out.push_str(": ");
            out.push_str(&msg);
        }
    }
    out
}

/// Map an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<DataError>() {
            return EXIT_DATA;
        }
        if cause.is::<BackendError>() {
            return EXIT_BACKEND_IO;
        }
        if let Some(e) = cause.downcast_ref::<IngestError>() {
            return match e {
                IngestError::Io { .. } => EXIT_BACKEND_IO,
                _ => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<FilterError>() {
            return match e {
                FilterError::Io { .. } => EXIT_BACKEND_IO,
                _ => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<ManifestError>() {
            return match e {
                ManifestError::Inconsistent { .. } => EXIT_DATA,
                _ => EXIT_BACKEND_IO,
            };
        }
        if let Some(e) = cause.downcast_ref::<TokenizerError>() {
            return match e {
                TokenizerError::Io { .. } => EXIT_BACKEND_IO,
                _ => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<DecodeError>() {
            return match e {
                DecodeError::Backend { .. } => EXIT_BACKEND_IO,
                _ => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<HarnessError>() {
            match e {
                HarnessError::Io { .. } | HarnessError::Write(_) => return EXIT_BACKEND_IO,
                // look further down the chain for the underlying error
                HarnessError::Ingest(_) | HarnessError::Decode { .. } | HarnessError::Tokenizer { .. } => continue,
                _ => return EXIT_DATA,
            }
        }
        if let Some(e) = cause.downcast_ref::<TextMetricsError>() {
            match e {
                TextMetricsError::Backend { .. } | TextMetricsError::Tokenizer { .. } => continue,
                _ => return EXIT_DATA,
            }
        }
        if cause.is::<corpusgate::stats::StatsError>() {
            return EXIT_DATA;
        }
        if cause.is::<serde_json::Error>() {
            return EXIT_DATA;
        }
        if cause.is::<std::io::Error>() {
            return EXIT_BACKEND_IO;
        }
    }
    EXIT_DATA
}
