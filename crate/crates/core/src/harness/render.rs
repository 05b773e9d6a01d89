use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::config::BenchmarkConfig;
use super::template::Template;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatMode {
    /// Base model: the prompt is followed by the benchmark's `base_suffix`.
    #[default]
    None,
    /// Instruction model: the prompt becomes a single ChatML user turn.
    Chatml,
}

impl std::str::FromStr for ChatMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" | "base" => Ok(Self::None),
            "chatml" => Ok(Self::Chatml),
            other => Err(format!("unknown chat mode {other:?} (expected none|chatml)")),
        }
    }
}

pub fn chatml_wrap(prompt: &str) -> String {
    format!("<|im_start|>user\n{prompt}<|im_end|>\n<|im_start|>assistant\n")
}

/// `'a', 'b' of 'c'`: quoted labels, comma separated, with "of" before the last.
pub fn quoted_choices(labels: &[String]) -> String {
    let quoted: Vec<String> = labels.iter().map(|l| format!("'{l}'")).collect();
    match quoted.split_last() {
        None => String::new(),
        Some((last, [])) => last.clone(),
        Some((last, rest)) => format!("{} of {last}", rest.join(", ")),
    }
}

/// Scalar record value as prompt text. Missing and null fields are errors.
pub(crate) fn field_text(record: &Map<String, Value>, field: &str, item: &str) -> Result<String, HarnessError> {
    match record.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(v @ (Value::Number(_) | Value::Bool(_))) => Ok(v.to_string()),
        Some(Value::Null) | None => Err(HarnessError::MissingField {
            item: item.to_string(),
            field: field.to_string(),
        }),
        Some(_) => Err(HarnessError::NotScalar {
            item: item.to_string(),
            field: field.to_string(),
        }),
    }
}

/// Render the full model input for one record.
pub fn render_prompt(
    cfg: &BenchmarkConfig,
    record: &Map<String, Value>,
    chat_mode: ChatMode,
    item_id: &str,
) -> Result<String, HarnessError> {
    let lookup = |var: &str| -> Result<String, HarnessError> {
        match var {
            "choices" => Ok(quoted_choices(&cfg.labels)),
            "options" => {
                let mut lines = Vec::with_capacity(cfg.option_fields.len());
                for (letter, field) in cfg.labels.iter().zip(&cfg.option_fields) {
                    lines.push(format!("{letter}. {}", field_text(record, field, item_id)?));
                }
                Ok(lines.join("\n"))
            }
            v => field_text(record, cfg.field_for(v), item_id),
        }
    };
    let body = Template::parse(&cfg.template)?.render(lookup)?;
    Ok(match chat_mode {
        ChatMode::None => body + &Template::parse(&cfg.base_suffix)?.render(lookup)?,
        ChatMode::Chatml => chatml_wrap(&body),
    })
}
