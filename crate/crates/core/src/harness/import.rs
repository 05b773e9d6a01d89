//! Converters from the published layouts of DBRD, Dutch CoLA and XL-WiC to
//! the JSONL records the shipped benchmark configs expect.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::HarnessError;
use crate::ingest::{JsonlWriter, RecordStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportKind {
    Dbrd,
    Cola,
    Xlwic,
}

impl std::str::FromStr for ImportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dbrd" => Ok(Self::Dbrd),
            "cola" => Ok(Self::Cola),
            "xlwic" => Ok(Self::Xlwic),
            other => Err(format!("unknown dataset {other:?} (expected dbrd|cola|xlwic)")),
        }
    }
}

/// Column order of the header-less XL-WiC text files.
const XLWIC_COLUMNS: [&str; 9] = [
    "target_word",
    "PoS",
    "start_char_index_1",
    "end_char_index_1",
    "start_char_index_2",
    "end_char_index_2",
    "example_1",
    "example_2",
    "label",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportSummary {
    pub dataset: ImportKind,
    pub records: usize,
    pub label_counts: BTreeMap<String, u64>,
}

fn label_for(kind: ImportKind, raw: &str) -> Option<&'static str> {
    let raw = raw.trim();
    match kind {
        ImportKind::Dbrd => match raw.to_lowercase().as_str() {
            "1" | "pos" | "positive" | "positief" => Some("positief"),
            "0" | "neg" | "negative" | "negatief" => Some("negatief"),
            _ => None,
        },
        ImportKind::Cola => match raw {
            "1" => Some("grammaticaal"),
            "0" => Some("ongrammaticaal"),
            _ => None,
        },
        ImportKind::Xlwic => match raw {
            "1" | "T" | "True" | "true" => Some("identiek"),
            "0" | "F" | "False" | "false" => Some("verschillend"),
            _ => None,
        },
    }
}

type Row = (usize, Map<String, Value>);

fn read_rows(kind: ImportKind, input: &Path) -> Result<Vec<Row>, HarnessError> {
    let ext = input.extension().and_then(|e| e.to_str()).unwrap_or("");
    if matches!(ext, "jsonl" | "json") {
        return RecordStream::open(input)?
            .map(|r| r.map_err(HarnessError::from))
            .collect();
    }
    let bad = |e: csv::Error| HarnessError::Config(format!("{}: {e}", input.display()));
    let tabbed = ext != "csv";
    let mut builder = csv::ReaderBuilder::new();
    builder.has_headers(false).flexible(false);
    if tabbed {
        builder.delimiter(b'\t').quoting(false);
    }
    let mut reader = builder.from_path(input).map_err(bad)?;
    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r.map_err(bad)?,
        None => return Ok(Vec::new()),
    };
    let mut rows = Vec::new();
    let header: Vec<String> = if kind == ImportKind::Xlwic && !first.iter().any(|c| c == "target_word") {
        let to_map = |rec: &csv::StringRecord| -> Map<String, Value> {
            XLWIC_COLUMNS
                .iter()
                .zip(rec.iter())
                .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
                .collect()
        };
        if first.len() != XLWIC_COLUMNS.len() {
            return Err(HarnessError::Config(format!(
                "{}: line 1: expected {} columns, got {}",
                input.display(),
                XLWIC_COLUMNS.len(),
                first.len()
            )));
        }
        rows.push((1, to_map(&first)));
        XLWIC_COLUMNS.iter().map(|s| s.to_string()).collect()
    } else {
        first.iter().map(str::to_string).collect()
    };
    for rec in records {
        let rec = rec.map_err(bad)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let map = header
            .iter()
            .zip(rec.iter())
            .map(|(k, v)| (k.clone(), Value::String(v.to_string())))
            .collect();
        rows.push((line, map));
    }
    Ok(rows)
}

fn get(row: &Map<String, Value>, keys: &[&str], line: usize) -> Result<String, HarnessError> {
    for k in keys {
        match row.get(*k) {
            Some(Value::String(s)) => return Ok(s.clone()),
            Some(v @ (Value::Number(_) | Value::Bool(_))) => return Ok(v.to_string()),
            _ => {}
        }
    }
    Err(HarnessError::MissingField {
        item: format!("line {line}"),
        field: keys.join("|"),
    })
}

/// Convert `input` (JSONL, CSV, or tab-separated) to benchmark JSONL at `output`.
/// Every gold value must map to a known label; nothing is dropped silently.
pub fn import_dataset(kind: ImportKind, input: &Path, output: &Path) -> Result<ImportSummary, HarnessError> {
    let rows = read_rows(kind, input)?;
    let mut out = Vec::with_capacity(rows.len());
    let mut label_counts = BTreeMap::new();
    for (n, (line, row)) in rows.iter().enumerate() {
        let (label_keys, prefix): (&[&str], &str) = match kind {
            ImportKind::Dbrd => (&["label", "sentiment"], "dbrd"),
            ImportKind::Cola => (&["Acceptability", "label"], "cola"),
            ImportKind::Xlwic => (&["label"], "xlwic"),
        };
        let raw = get(row, label_keys, *line)?;
        let label = label_for(kind, &raw).ok_or_else(|| HarnessError::UnknownGold {
            item: format!("line {line}"),
            value: raw.clone(),
        })?;
        let id = match row.get("id") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => format!("{prefix}-{n}"),
        };
        let rec = match kind {
            ImportKind::Dbrd => json!({"id": id, "text": get(row, &["text"], *line)?, "label": label}),
            ImportKind::Cola => {
                json!({"id": id, "Sentence": get(row, &["Sentence", "sentence"], *line)?, "label": label})
            }
            ImportKind::Xlwic => json!({
                "id": id,
                "target_word": get(row, &["target_word"], *line)?,
                "example_1": get(row, &["example_1"], *line)?,
                "example_2": get(row, &["example_2"], *line)?,
                "label": label,
            }),
        };
        *label_counts.entry(label.to_string()).or_insert(0) += 1;
        out.push(rec);
    }
    let mut w = JsonlWriter::create(output)?;
    for rec in &out {
        w.write(rec).map_err(HarnessError::Write)?;
    }
    w.flush().map_err(HarnessError::Write)?;
    Ok(ImportSummary {
        dataset: kind,
        records: out.len(),
        label_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(kind: ImportKind, name: &str, content: &str) -> Result<(ImportSummary, String), HarnessError> {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join(name);
        std::fs::write(&input, content).unwrap();
        let output = dir.path().join("out.jsonl");
        let s = import_dataset(kind, &input, &output)?;
        Ok((s, std::fs::read_to_string(output).unwrap()))
    }

    #[test]
    fn dbrd_jsonl() {
        let (s, out) = run(
            ImportKind::Dbrd,
            "in.jsonl",
            "{\"text\":\"Goed boek\",\"label\":1}\n{\"text\":\"Saai\",\"label\":0}\n",
        )
        .unwrap();
        assert_eq!(s.records, 2);
        assert_eq!(
            out,
            "{\"id\":\"dbrd-0\",\"label\":\"positief\",\"text\":\"Goed boek\"}\n{\"id\":\"dbrd-1\",\"label\":\"negatief\",\"text\":\"Saai\"}\n"
        );
    }

    #[test]
    fn cola_tsv_with_header() {
        let (s, out) = run(
            ImportKind::Cola,
            "in.tsv",
            "Source\tOriginal ID\tAcceptability\tOriginal annotation\tSentence\tMaterial added\nX\t1\t1\t\tHij loopt.\t0\nX\t2\t0\t*\tHij lopen.\t0\n",
        )
        .unwrap();
        assert_eq!(s.label_counts["grammaticaal"], 1);
        assert_eq!(s.label_counts["ongrammaticaal"], 1);
        assert!(out.contains("\"Sentence\":\"Hij lopen.\""));
    }

    #[test]
    fn xlwic_headerless() {
        let (s, out) = run(
            ImportKind::Xlwic,
            "nl_test.txt",
            "bank\tN\t0\t4\t4\t8\tDe bank is dicht.\tZit op de bank.\t0\n",
        )
        .unwrap();
        assert_eq!(s.records, 1);
        assert!(out.contains("\"label\":\"verschillend\""));
        assert!(out.contains("\"target_word\":\"bank\""));
    }

    #[test]
    fn unknown_label_is_error() {
        let err = run(ImportKind::Cola, "in.csv", "Sentence,Acceptability\nZin.,2\n").unwrap_err();
        assert!(matches!(err, HarnessError::UnknownGold { .. }), "{err}");
    }
}
