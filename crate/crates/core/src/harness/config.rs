use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::template::Template;
use super::HarnessError;
use crate::decoder::TrieOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    MultipleChoice,
    BinaryLabel,
    WicPair,
}

/// One zero-shot benchmark: where its items live, how a record becomes a
/// prompt, and which labels the model may answer with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub name: String,
    pub task_kind: TaskKind,
    /// JSONL file; relative paths resolve against the config file's directory.
    pub data_path: PathBuf,
    /// Prompt body with `{variable}` placeholders. `{choices}` expands to the
    /// quoted labels ("'a', 'b' of 'c'"); `{options}` to the lettered option
    /// block of a multiple-choice item. `{{` and `}}` are literal braces.
    pub template: String,
    /// Appended to the prompt for models without a chat template. May use
    /// the same placeholders as `template`.
    #[serde(default)]
    pub base_suffix: String,
    /// record field -> template variable. Unmapped variables are read from
    /// the record field of the same name.
    #[serde(default)]
    pub field_map: BTreeMap<String, String>,
    pub labels: Vec<String>,
    /// Record fields holding the answer options, in label order.
    #[serde(default)]
    pub option_fields: Vec<String>,
    pub gold_field: String,
    /// raw gold value -> label, applied before validation when non-empty.
    #[serde(default)]
    pub gold_map: BTreeMap<String, String>,
    /// Record field with the item id; items are numbered by line otherwise.
    #[serde(default)]
    pub id_field: Option<String>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub trie: TrieOptions,
}

fn default_repetitions() -> u32 {
    5
}

impl BenchmarkConfig {
    /// Load from `.toml` or `.json`, resolving `data_path` against the
    /// config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |e: &dyn std::fmt::Display| HarnessError::Config(format!("{}: {e}", path.display()));
        let mut cfg: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| bad(&e))?,
            _ => toml::from_str(&text).map_err(|e| bad(&e))?,
        };
        if cfg.data_path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.data_path = dir.join(&cfg.data_path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(format!("benchmark {:?}: {m}", self.name)));
        if self.labels.is_empty() {
            return err("labels must not be empty".into());
        }
        for (i, l) in self.labels.iter().enumerate() {
            if l.is_empty() {
                return err("labels must not be empty strings".into());
            }
            if self.labels[..i].contains(l) {
                return err(format!("duplicate label {l:?}"));
            }
        }
        if self.repetitions == 0 {
            return err("repetitions must be at least 1".into());
        }
        for raw_label in self.gold_map.values() {
            if !self.labels.contains(raw_label) {
                return err(format!("gold_map target {raw_label:?} is not a label"));
            }
        }
        let body = Template::parse(&self.template)?;
        let suffix = Template::parse(&self.base_suffix)?;
        let uses_options = body.uses("options") || suffix.uses("options");
        match self.task_kind {
            TaskKind::MultipleChoice => {
                if self.option_fields.len() != self.labels.len() {
                    return err(format!(
                        "{} option_fields for {} labels",
                        self.option_fields.len(),
                        self.labels.len()
                    ));
                }
                if !body.uses("options") {
                    return err("multiple_choice template must contain {options}".into());
                }
            }
            TaskKind::BinaryLabel | TaskKind::WicPair => {
                if self.labels.len() != 2 {
                    return err(format!("expected 2 labels, got {}", self.labels.len()));
                }
                if uses_options || !self.option_fields.is_empty() {
                    return err("{options}/option_fields are only valid for multiple_choice".into());
                }
            }
        }
        if self.task_kind == TaskKind::WicPair {
            for var in ["target_word", "example_1", "example_2"] {
                if !body.uses(var) {
                    return err(format!("wic_pair template must use {{{var}}}"));
                }
            }
        }
        Ok(())
    }

    /// Record field that feeds template variable `var`.
    pub fn field_for<'a>(&'a self, var: &'a str) -> &'a str {
        self.field_map
            .iter()
            .find(|(_, v)| v.as_str() == var)
            .map(|(k, _)| k.as_str())
            .unwrap_or(var)
    }

    /// Built-in definition of one of the shipped benchmarks (`arc`, `dbrd`,
    /// `cola`, `mmlu`, `xlwic`), identical to the files under `configs/`.
    pub fn preset(name: &str) -> Option<Self> {
        let mc = |name: &str, data: &str, question_field: &str| Self {
            name: name.into(),
            task_kind: TaskKind::MultipleChoice,
            data_path: data.into(),
            template: format!(
                "{{{question_field}}}\n\nAntwoordopties:\n{{options}}\n\nAntwoord met {{choices}}."
            ),
            base_suffix: "Het antwoord is ".into(),
            field_map: BTreeMap::new(),
            labels: ["A", "B", "C", "D"].map(String::from).to_vec(),
            option_fields: ["option_a", "option_b", "option_c", "option_d"].map(String::from).to_vec(),
            gold_field: "answer".into(),
            gold_map: BTreeMap::new(),
            id_field: Some("id".into()),
            repetitions: 5,
            base_seed: 0,
            trie: TrieOptions::default(),
        };
        let binary = |name: &str, data: &str, template: &str, suffix: &str, labels: [&str; 2]| Self {
            name: name.into(),
            task_kind: TaskKind::BinaryLabel,
            data_path: data.into(),
            template: template.into(),
            base_suffix: suffix.into(),
            field_map: BTreeMap::new(),
            labels: labels.map(String::from).to_vec(),
            option_fields: Vec::new(),
            gold_field: "label".into(),
            gold_map: BTreeMap::new(),
            id_field: Some("id".into()),
            repetitions: 5,
            base_seed: 0,
            trie: TrieOptions::default(),
        };
        Some(match name {
            "arc" => mc("arc", "data/arc.jsonl", "instruction"),
            "mmlu" => mc("mmlu", "data/mmlu.jsonl", "question"),
            "dbrd" => binary(
                "dbrd",
                "data/dbrd.jsonl",
                "Is het sentiment in de volgende Nederlandstalige boekrecensie positief of negatief?\n\nBoekrecensie: {text}\n\nAntwoord met {choices}.",
                "Het sentiment is ",
                ["positief", "negatief"],
            ),
            "cola" => binary(
                "cola",
                "data/cola.jsonl",
                "Is de volgende tekst grammaticaal (correct Nederlands) of ongrammaticaal (onjuist Nederlands)?\n\nTekst: {Sentence}\n\nAntwoord met {choices}.",
                "De tekst is ",
                ["grammaticaal", "ongrammaticaal"],
            ),
            "xlwic" => Self {
                task_kind: TaskKind::WicPair,
                ..binary(
                    "xlwic",
                    "data/xlwic.jsonl",
                    "Is de betekenis van '{target_word}' in de volgende zinnen identiek of verschillend?\n\nZin 1: {example_1}\nZin 2: {example_2}\n\nAntwoord met {choices}.",
                    "De betekenis van '{target_word}' is ",
                    ["identiek", "verschillend"],
                )
            },
            _ => return None,
        })
    }

    pub const PRESETS: [&'static str; 5] = ["arc", "dbrd", "cola", "mmlu", "xlwic"];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in BenchmarkConfig::PRESETS {
            BenchmarkConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(BenchmarkConfig::preset("hellaswag").is_none());
    }

    #[test]
    fn shipped_config_files_match_presets() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        for name in BenchmarkConfig::PRESETS {
            let path = dir.join(format!("{name}.toml"));
            let mut loaded = BenchmarkConfig::load(&path).unwrap();
            let preset = BenchmarkConfig::preset(name).unwrap();
            assert_eq!(loaded.data_path, dir.join(&preset.data_path));
            loaded.data_path = preset.data_path.clone();
            assert_eq!(loaded, preset, "{name}");
        }
    }

    #[test]
    fn validation_failures() {
        let mut c = BenchmarkConfig::preset("arc").unwrap();
        c.option_fields.pop();
        assert!(c.validate().is_err());

        let mut c = BenchmarkConfig::preset("dbrd").unwrap();
        c.labels.push("neutraal".into());
        assert!(c.validate().is_err());

        let mut c = BenchmarkConfig::preset("dbrd").unwrap();
        c.labels[1] = "positief".into();
        assert!(c.validate().unwrap_err().to_string().contains("duplicate label"));

        let mut c = BenchmarkConfig::preset("xlwic").unwrap();
        c.template = c.template.replace("{example_2}", "");
        assert!(c.validate().is_err());

        let mut c = BenchmarkConfig::preset("cola").unwrap();
        c.gold_map.insert("1".into(), "ja".into());
        assert!(c.validate().is_err());

        let mut c = BenchmarkConfig::preset("cola").unwrap();
        c.template.push_str("{unclosed");
        assert!(c.validate().is_err());
    }

    #[test]
    fn field_map_lookup() {
        let mut c = BenchmarkConfig::preset("cola").unwrap();
        assert_eq!(c.field_for("Sentence"), "Sentence");
        c.field_map.insert("sentence".into(), "Sentence".into());
        assert_eq!(c.field_for("Sentence"), "sentence");
    }
}
