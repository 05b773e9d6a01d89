//! `corpusgate`: corpus filtering, tokenizer metrics and constrained-decoding
//! evaluation from the command line.

mod common;
mod eval;
mod filter;
mod import;
mod metrics;
mod report;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use common::{exit_code, render_error, write_json, Globals, EXIT_USAGE};

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (",
    env!("CORPUSGATE_BUILD_TARGET"),
    ", ",
    env!("CORPUSGATE_BUILD_PROFILE"),
    ")"
);

#[derive(Debug, Parser)]
#[command(name = "corpusgate", version, long_version = LONG_VERSION, about)]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply the quality-filter chain to a JSONL corpus
    Filter(filter::FilterArgs),
    /// Encode strings (or decode ids) with a tokenizer
    Tokenize(metrics::TokenizeArgs),
    /// Tokens per word over a corpus
    Fertility(metrics::FertilityArgs),
    /// Timed forward passes over a corpus
    Throughput(metrics::ThroughputArgs),
    /// Run a benchmark with constrained label sampling
    Eval(eval::EvalArgs),
    /// Rank models from eval runs and emit a leaderboard
    Report(report::ReportArgs),
    /// Convert a published dataset to benchmark JSONL
    Import(import::ImportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Filter(_) => "filter",
            Command::Tokenize(_) => "tokenize",
            Command::Fertility(_) => "fertility",
            Command::Throughput(_) => "throughput",
            Command::Eval(_) => "eval",
            Command::Report(_) => "report",
            Command::Import(_) => "import",
        }
    }
}

/// Summary fields plus optional human-readable text for stdout.
fn dispatch(g: &Globals, cmd: &Command) -> Result<(Value, Option<String>)> {
    Ok(match cmd {
        Command::Filter(a) => (filter::run(g, a)?, None),
        Command::Tokenize(a) => (metrics::tokenize(g, a)?, None),
        Command::Fertility(a) => metrics::fertility(g, a)?,
        Command::Throughput(a) => metrics::throughput_cmd(g, a)?,
        Command::Eval(a) => (eval::run(g, a)?, None),
        Command::Report(a) => (report::run(g, a)?, None),
        Command::Import(a) => (import::run(a)?, None),
    })
}

fn print_json(v: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = serde_json::to_writer_pretty(&mut out, v);
    let _ = writeln!(out);
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                // --help / --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            print_json(&json!({"status": "error", "exit_code": EXIT_USAGE, "error": e.kind().to_string()}));
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let g = &cli.globals;
    env_logger::Builder::new()
        .filter_level(g.log_level)
        .target(env_logger::Target::Stderr)
        .init();

    let command = cli.command.name();
    let result = (|| -> Result<(Value, Option<String>)> {
        if let Some(n) = g.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring worker threads")?;
        }
        std::fs::create_dir_all(&g.output_dir)
            .with_context(|| format!("creating {}", g.output_dir.display()))?;
        dispatch(g, &cli.command)
    })();

    match result {
        Ok((fields, text)) => {
            let mut summary = json!({"command": command, "status": "ok"});
            if let (Value::Object(s), Value::Object(f)) = (&mut summary, fields) {
                s.extend(f);
            }
            if let Err(e) = write_json(&g.output_dir.join("summary.json"), &summary) {
                log::warn!("{}", render_error(&e));
            }
            match text {
                Some(t) => print!("{t}"),
                None => print_json(&summary),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            let message = render_error(&e);
            eprintln!("error: {message}");
            let summary = json!({
                "command": command,
                "status": "error",
                "exit_code": code,
                "error": message,
            });
            let _ = write_json(&g.output_dir.join("summary.json"), &summary);
            print_json(&summary);
            ExitCode::from(code as u8)
        }
    }
}
