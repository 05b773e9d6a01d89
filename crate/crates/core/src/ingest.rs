//! Streaming JSON-lines input and audit-manifest persistence.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: invalid UTF-8 ({source})")]
    InvalidUtf8 {
        line: usize,
        #[source]
        source: std::str::Utf8Error,
    },
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: expected a JSON object")]
    NotAnObject { line: usize },
    #[error("line {line}: missing {role} field \"{key}\"")]
    MissingField {
        line: usize,
        role: &'static str,
        key: String,
    },
    #[error("line {line}: {role} field not a string (key \"{key}\")")]
    FieldNotString {
        line: usize,
        role: &'static str,
        key: String,
    },
    #[error("line {line}: empty document id")]
    EmptyId { line: usize },
    #[error("line {line}: duplicate document id \"{id}\"")]
    DuplicateId { line: usize, id: String },
}

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            url: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_url(mut self, url: impl Into<String>) -> Self {
        self.url = Some(url.into());
        self
    }

    /// Serialize back to a flat JSON object using the given key names.
    pub fn to_record(&self, fields: &FieldMap) -> Map<String, Value> {
        let mut obj = Map::new();
        for (k, v) in &self.meta {
            obj.insert(k.clone(), Value::String(v.clone()));
        }
        obj.insert(fields.id.clone(), Value::String(self.id.clone()));
        obj.insert(fields.text.clone(), Value::String(self.text.clone()));
        if let Some(url) = &self.url {
            obj.insert(fields.url.clone(), Value::String(url.clone()));
        }
        obj
    }
}

/// Which JSON keys hold the text, id and url of a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMap {
    pub text: String,
    pub id: String,
    pub url: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            text: "text".into(),
            id: "id".into(),
            url: "url".into(),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// 1-based line number and the parsed object.
type NumberedRecord = (usize, Map<String, Value>);

/// Raw JSON-object records with their 1-based line numbers. Blank lines are skipped.
pub struct RecordStream {
    reader: BufReader<File>,
    path: PathBuf,
    line: usize,
    buf: Vec<u8>,
    done: bool,
}

impl RecordStream {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        Ok(Self {
            reader: open(path)?,
            path: path.to_path_buf(),
            line: 0,
            buf: Vec::new(),
            done: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn next_record(&mut self) -> Option<Result<NumberedRecord, IngestError>> {
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(source) => {
                    return Some(Err(IngestError::Io {
                        path: self.path.clone(),
                        source,
                    }))
                }
            }
            self.line += 1;
            let line = self.line;
            let text = match std::str::from_utf8(&self.buf) {
                Ok(t) => t,
                Err(source) => return Some(Err(IngestError::InvalidUtf8 { line, source })),
            };
            if text.trim().is_empty() {
                continue;
            }
            return Some(match serde_json::from_str::<Value>(text) {
                Ok(Value::Object(map)) => Ok((line, map)),
                Ok(_) => Err(IngestError::NotAnObject { line }),
                Err(source) => Err(IngestError::Json { line, source }),
            });
        }
    }
}

impl Iterator for RecordStream {
    type Item = Result<(usize, Map<String, Value>), IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.next_record();
        if matches!(item, None | Some(Err(_))) {
            self.done = true;
        }
        item
    }
}

/// Lazily yields [`Document`]s in file order.
///
/// Ids missing from a record are synthesized as `<filename>:<line>`. The
/// stream stops after the first error.
pub struct DocumentStream {
    records: RecordStream,
    fields: FieldMap,
    file_name: String,
    seen: HashSet<String>,
    done: bool,
}

pub fn stream_documents(
    path: impl AsRef<Path>,
    fields: &FieldMap,
) -> Result<DocumentStream, IngestError> {
    let records = RecordStream::open(path.as_ref())?;
    let file_name = path
        .as_ref()
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(DocumentStream {
        records,
        fields: fields.clone(),
        file_name,
        seen: HashSet::new(),
        done: false,
    })
}

fn string_field(
    map: &Map<String, Value>,
    key: &str,
    role: &'static str,
    line: usize,
) -> Result<Option<String>, IngestError> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(IngestError::FieldNotString {
            line,
            role,
            key: key.to_string(),
        }),
    }
}

impl DocumentStream {
    fn convert(&mut self, line: usize, map: Map<String, Value>) -> Result<Document, IngestError> {
        let fields = &self.fields;
        let text = string_field(&map, &fields.text, "text", line)?.ok_or_else(|| {
            IngestError::MissingField {
                line,
                role: "text",
                key: fields.text.clone(),
            }
        })?;
        let id = match map.get(&fields.id) {
            Some(Value::Number(n)) => n.to_string(),
            _ => string_field(&map, &fields.id, "id", line)?
                .unwrap_or_else(|| format!("{}:{}", self.file_name, line)),
        };
        if id.is_empty() {
            return Err(IngestError::EmptyId { line });
        }
        if !self.seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId { line, id });
        }
        let url = string_field(&map, &fields.url, "url", line)?;
        let meta = map
            .into_iter()
            .filter(|(k, _)| *k != fields.text && *k != fields.id && *k != fields.url)
            .filter_map(|(k, v)| match v {
                Value::String(s) => Some((k, s)),
                Value::Number(n) => Some((k, n.to_string())),
                Value::Bool(b) => Some((k, b.to_string())),
                _ => None,
            })
            .collect();
        Ok(Document { id, text, url, meta })
    }
}

impl Iterator for DocumentStream {
    type Item = Result<Document, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = match self.records.next()? {
            Ok((line, map)) => self.convert(line, map),
            Err(e) => Err(e),
        };
        if item.is_err() {
            self.done = true;
        }
        Some(item)
    }
}

/// Buffered JSON-lines writer.
pub struct JsonlWriter<W: Write> {
    inner: W,
}

impl JsonlWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::new(BufWriter::new(file)))
    }
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn write<T: Serialize + ?Sized>(&mut self, value: &T) -> io::Result<()> {
        serde_json::to_writer(&mut self.inner, value)?;
        self.inner.write_all(b"\n")
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

/// One line of the rejected-document sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedEntry {
    pub id: String,
    pub reason: String,
}

/// Keep/reject tallies. Per-worker counts merge associatively.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub total_read: u64,
    pub kept: u64,
    pub rejected_by_reason: BTreeMap<String, u64>,
}

impl ManifestCounts {
    pub fn record(&mut self, rejected_reason: Option<&str>) {
        self.total_read += 1;
        match rejected_reason {
            None => self.kept += 1,
            Some(reason) => *self.rejected_by_reason.entry(reason.to_string()).or_default() += 1,
        }
    }

    pub fn merge(&mut self, other: &ManifestCounts) {
        self.total_read += other.total_read;
        self.kept += other.kept;
        for (reason, n) in &other.rejected_by_reason {
            *self.rejected_by_reason.entry(reason.clone()).or_default() += n;
        }
    }

    pub fn rejected(&self) -> u64 {
        self.rejected_by_reason.values().sum()
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest inconsistent: total_read {total_read} != kept {kept} + rejected {rejected}")]
    Inconsistent {
        total_read: u64,
        kept: u64,
        rejected: u64,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Audit record of one filtering pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub total_read: u64,
    pub kept: u64,
    pub rejected_by_reason: BTreeMap<String, u64>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub config_fingerprint: String,
}

impl CorpusManifest {
    pub fn from_counts(
        counts: ManifestCounts,
        started_at: DateTime<Utc>,
        finished_at: DateTime<Utc>,
        config_fingerprint: String,
    ) -> Self {
        Self {
            total_read: counts.total_read,
            kept: counts.kept,
            rejected_by_reason: counts.rejected_by_reason,
            started_at,
            finished_at,
            config_fingerprint,
        }
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        let rejected: u64 = self.rejected_by_reason.values().sum();
        if self.kept.checked_add(rejected) != Some(self.total_read) {
            return Err(ManifestError::Inconsistent {
                total_read: self.total_read,
                kept: self.kept,
                rejected,
            });
        }
        Ok(())
    }
}

/// Validate, then write as pretty-printed JSON.
pub fn write_manifest(manifest: &CorpusManifest, path: impl AsRef<Path>) -> Result<(), ManifestError> {
    manifest.validate()?;
    let path = path.as_ref();
    let io_err = |source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut json = serde_json::to_string_pretty(manifest).map_err(|source| ManifestError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    json.push('\n');
    std::fs::write(path, json).map_err(io_err)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<CorpusManifest, ManifestError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let manifest: CorpusManifest =
        serde_json::from_slice(&bytes).map_err(|source| ManifestError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    manifest.validate()?;
    Ok(manifest)
}
