use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{Estimate, ModelRow, RankedScore, ScoreTable, StatsError};

/// JSON schema for [`ReportFormat::Json`] output.
pub const REPORT_SCHEMA: &str = include_str!("../../schemas/report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// Model-overview row: tokenizer efficiency and throughput.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OverviewRow {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fertility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens_per_second: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_seconds: Option<Estimate>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    benchmarks: &'a [String],
    rows: &'a [ModelRow],
    overview: &'a [OverviewRow],
}

fn fmt_estimate(e: &Estimate) -> String {
    match e.ci_half_width {
        Some(h) => format!("{:.2} ± {:.2}", e.mean, h),
        None => format!("{:.2}", e.mean),
    }
}

fn fmt_rank(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{r:.0}")
    } else {
        format!("{r}")
    }
}

fn markdown(table: &ScoreTable, overview: &[OverviewRow]) -> String {
    let mut out = String::new();
    let dash = || "-".to_string();
    if !overview.is_empty() {
        out.push_str("## Model overview\n\n");
        out.push_str("| model | size | wiki fertility | wiki tps | wiki s |\n");
        out.push_str("|---|---|---:|---:|---:|\n");
        for row in overview {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                row.model,
                row.size.clone().unwrap_or_else(dash),
                row.fertility.map(|f| format!("{f:.2}")).unwrap_or_else(dash),
                row.tokens_per_second.as_ref().map(fmt_estimate).unwrap_or_else(dash),
                row.total_seconds.as_ref().map(fmt_estimate).unwrap_or_else(dash),
            );
        }
        out.push('\n');
    }
    out.push_str("## Benchmark results\n\n| model |");
    for b in &table.benchmarks {
        let _ = write!(out, " {b} | {b} rank |");
    }
    out.push_str(" median rank |\n|---|");
    for _ in &table.benchmarks {
        out.push_str("---:|---:|");
    }
    out.push_str("---:|\n");
    for row in &table.rows {
        let _ = write!(out, "| {} |", row.model);
        for s in &row.scores {
            let _ = write!(
                out,
                " {:.2} ± {:.2} | {} |",
                s.mean_f1,
                s.ci_half_width,
                fmt_rank(s.rank)
            );
        }
        let _ = writeln!(out, " {:.1} |", row.median_rank);
    }
    out
}

const CSV_HEADER: [&str; 6] = ["model", "benchmark", "mean_f1", "ci_half_width", "rank", "median_rank"];

fn csv(table: &ScoreTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in &table.rows {
        for s in &row.scores {
            w.write_record([
                row.model.clone(),
                s.benchmark.clone(),
                s.mean_f1.to_string(),
                s.ci_half_width.to_string(),
                s.rank.to_string(),
                row.median_rank.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Render the leaderboard (plus optional overview rows) as a document.
pub fn emit_report(table: &ScoreTable, overview: &[OverviewRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => markdown(table, overview),
        ReportFormat::Csv => csv(table),
        ReportFormat::Json => {
            let doc = JsonReport {
                benchmarks: &table.benchmarks,
                rows: &table.rows,
                overview,
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

/// Inverse of the CSV form of [`emit_report`].
pub fn parse_csv_report(text: &str) -> Result<ScoreTable, StatsError> {
    let perr = |e: &dyn std::fmt::Display| StatsError::Parse(e.to_string());
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| perr(&e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(StatsError::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows: IndexMap<String, ModelRow> = IndexMap::new();
    let mut benchmarks: Vec<String> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| perr(&e))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| perr(&e));
        let (model, bench) = (rec[0].to_string(), rec[1].to_string());
        if !benchmarks.contains(&bench) {
            benchmarks.push(bench.clone());
        }
        let median_rank = num(5)?;
        let row = rows.entry(model.clone()).or_insert_with(|| ModelRow {
            model,
            scores: Vec::new(),
            median_rank,
        });
        row.scores.push(RankedScore {
            benchmark: bench,
            mean_f1: num(2)?,
            ci_half_width: num(3)?,
            rank: num(4)?,
        });
    }
    let table = ScoreTable {
        benchmarks,
        rows: rows.into_values().collect(),
    };
    table.validate()?;
    Ok(table)
}
