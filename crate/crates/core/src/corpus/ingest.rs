//! Field-alias import of heterogeneous seed datasets into the unified
//! record schema.
//!
//! The four supported origin layouts differ in field names and in how the
//! ground truth is written: trailing `#### n` markers, `target` numbers,
//! split Body/Question text, or `\boxed{...}` answers. An `IngestConfig`
//! declares the mapping; presets cover the known layouts and custom maps
//! can be loaded from JSON.

use super::{AnswerField, Corpus, CorpusError, Record, Stage};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Source tag stamped on every imported record.
    pub source: String,
    /// Field holding a record id; absent ids are synthesized as
    /// `<source>-<line>`.
    #[serde(default)]
    pub id_field: Option<String>,
    /// Fields concatenated (space-joined) into the question text.
    pub question_fields: Vec<String>,
    /// Field whose text becomes the completion verbatim.
    #[serde(default)]
    pub completion_field: Option<String>,
    /// Field holding bare source code; wrapped in a ```python fence.
    #[serde(default)]
    pub code_field: Option<String>,
    /// Field the ground truth is read from.
    #[serde(default)]
    pub answer_field: Option<String>,
    #[serde(default)]
    pub answer_rule: AnswerRule,
}

/// How the ground-truth value is extracted from the answer field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AnswerRule {
    /// Take the field's value as-is (numbers stay numbers).
    #[default]
    Verbatim,
    /// Parse the number after the final `####` marker.
    HashSuffix,
    /// Take the content of the first `\boxed{...}`, kept as text.
    Boxed,
}

impl IngestConfig {
    /// question/answer layout with `#### n` ground-truth markers.
    pub fn gsm8k() -> Self {
        IngestConfig {
            source: "gsm8k".into(),
            id_field: None,
            question_fields: vec!["question".into()],
            completion_field: Some("answer".into()),
            code_field: None,
            answer_field: Some("answer".into()),
            answer_rule: AnswerRule::HashSuffix,
        }
    }

    /// input/code/target layout; code is bare and gets fenced.
    pub fn gsm_hard() -> Self {
        IngestConfig {
            source: "gsm-hard".into(),
            id_field: None,
            question_fields: vec!["input".into()],
            completion_field: None,
            code_field: Some("code".into()),
            answer_field: Some("target".into()),
            answer_rule: AnswerRule::Verbatim,
        }
    }

    /// Body + Question text, equation as bare code, numeric Answer.
    pub fn svamp() -> Self {
        IngestConfig {
            source: "svamp".into(),
            id_field: Some("ID".into()),
            question_fields: vec!["Body".into(), "Question".into()],
            completion_field: None,
            code_field: Some("Equation".into()),
            answer_field: Some("Answer".into()),
            answer_rule: AnswerRule::Verbatim,
        }
    }

    /// problem/solution layout with boxed answers kept as text.
    pub fn math() -> Self {
        IngestConfig {
            source: "math".into(),
            id_field: None,
            question_fields: vec!["problem".into()],
            completion_field: Some("solution".into()),
            code_field: None,
            answer_field: Some("solution".into()),
            answer_rule: AnswerRule::Boxed,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "gsm8k" => Some(Self::gsm8k()),
            "gsm-hard" | "gsmhard" => Some(Self::gsm_hard()),
            "svamp" => Some(Self::svamp()),
            "math" => Some(Self::math()),
            _ => None,
        }
    }
}

/// Imports one foreign-format JSONL file.
pub fn import_file(path: impl AsRef<Path>, config: &IngestConfig) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| CorpusError::Line {
                line: line_no,
                message: format!("invalid JSON: {}", e),
            })?;
        records.push(import_value(&value, line_no, config)?);
    }
    Ok(Corpus::new(records, Stage::Initial))
}

/// Maps one foreign JSON object to a record.
pub fn import_value(
    value: &serde_json::Value,
    line_no: usize,
    config: &IngestConfig,
) -> Result<Record, CorpusError> {
    let obj = value.as_object().ok_or_else(|| CorpusError::Line {
        line: line_no,
        message: "expected a JSON object".to_string(),
    })?;
    let field_text = |name: &str| -> Result<String, CorpusError> {
        match obj.get(name) {
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            Some(other) => Ok(other.to_string()),
            None => Err(CorpusError::Line {
                line: line_no,
                message: format!("missing field `{}`", name),
            }),
        }
    };

    let id = match &config.id_field {
        Some(field) => field_text(field)?,
        None => format!("{}-{:05}", config.source, line_no),
    };
    let question = config
        .question_fields
        .iter()
        .map(|f| field_text(f))
        .collect::<Result<Vec<_>, _>>()?
        .join(" ");
    let completion = if let Some(field) = &config.code_field {
        format!("```python\n{}\n```", field_text(field)?.trim_end())
    } else if let Some(field) = &config.completion_field {
        field_text(field)?
    } else {
        String::new()
    };
    let answer = match &config.answer_field {
        Some(field) => extract_answer(obj.get(field), config.answer_rule),
        None => None,
    };
    Ok(Record {
        id,
        question,
        completion,
        source: config.source.clone(),
        answer,
    })
}

fn extract_answer(value: Option<&serde_json::Value>, rule: AnswerRule) -> Option<AnswerField> {
    let value = value?;
    match rule {
        AnswerRule::Verbatim => match value {
            serde_json::Value::Number(n) => Some(AnswerField::Number(n.clone())),
            serde_json::Value::String(s) => Some(parse_numeric_text(s)),
            _ => None,
        },
        AnswerRule::HashSuffix => {
            let text = value.as_str()?;
            let tail = text.rsplit("####").next()?.trim();
            Some(parse_numeric_text(tail))
        }
        AnswerRule::Boxed => {
            let text = value.as_str()?;
            boxed_content(text).map(AnswerField::Text)
        }
    }
}

/// Numeric-looking text (commas allowed) becomes a number; everything else
/// stays text.
fn parse_numeric_text(text: &str) -> AnswerField {
    let cleaned = text.trim().replace(',', "");
    if let Ok(i) = cleaned.parse::<i64>() {
        return AnswerField::Number(i.into());
    }
    if let Ok(f) = cleaned.parse::<f64>() {
        if let Some(n) = serde_json::Number::from_f64(f) {
            return AnswerField::Number(n);
        }
    }
    AnswerField::Text(text.trim().to_string())
}

/// Finds `\boxed{...}` and returns the brace-balanced content.
fn boxed_content(text: &str) -> Option<String> {
    let start = text.find("\\boxed{")? + "\\boxed{".len();
    let mut depth = 1usize;
    for (offset, c) in text[start..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(text[start..start + offset].to_string());
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn gsm_hard_layout_maps_to_a_record() {
        let value = json!({
            "input": "A robe takes 2287720 bolts of blue fiber and half that much white fiber.  How many bolts in total does it take?",
            "code": "def solution():\n    blue_fiber = 2287720\n    white_fiber = blue_fiber / 2\n    total_fiber = blue_fiber + white_fiber\n    result = total_fiber\n    return result",
            "target": 3431580.0
        });
        let record = import_value(&value, 1, &IngestConfig::gsm_hard()).unwrap();
        assert_eq!(record.source, "gsm-hard");
        assert!(record.question.starts_with("A robe takes 2287720"));
        assert_eq!(
            record.answer,
            Some(AnswerField::Number(
                serde_json::Number::from_f64(3431580.0).unwrap()
            ))
        );
        let code = record.extract_code().unwrap();
        assert!(code.text.starts_with("def solution():"));
        assert!(record.fence_report().conforms());
    }

    #[test]
    fn gsm8k_hash_suffix_becomes_a_number() {
        let value = json!({
            "question": "What percentage of the entire students enrolled in hip-hop dance?",
            "answer": "There are 4 students ... This is 12/20 x 100% = 60% of the entire students. #### 60"
        });
        let record = import_value(&value, 3, &IngestConfig::gsm8k()).unwrap();
        assert_eq!(record.id, "gsm8k-00003");
        assert_eq!(
            record.answer,
            Some(AnswerField::Number(serde_json::Number::from(60)))
        );
    }

    #[test]
    fn svamp_concatenates_body_and_question() {
        let value = json!({
            "ID": "chal-1",
            "Body": "The shop makes $78 off each t-shirt. They sold 186 shirts, 172 during the first game",
            "Question": "How much money did they make from the rest?",
            "Equation": "( 78.0 * ( 186.0 - 172.0 ) )",
            "Answer": 1092.0
        });
        let record = import_value(&value, 1, &IngestConfig::svamp()).unwrap();
        assert_eq!(record.id, "chal-1");
        assert!(record.question.contains("t-shirt. They sold"));
        assert!(record.question.ends_with("the rest?"));
        assert!(record.completion.contains("( 78.0 * ( 186.0 - 172.0 ) )"));
    }

    #[test]
    fn math_boxed_answer_is_kept_as_text() {
        let value = json!({
            "problem": "How many vertical asymptotes does the graph have?",
            "solution": "The denominator factors, so the graph has $\\boxed{2}$ vertical asymptotes."
        });
        let record = import_value(&value, 1, &IngestConfig::math()).unwrap();
        assert_eq!(record.answer, Some(AnswerField::Text("2".to_string())));
    }

    #[test]
    fn boxed_content_balances_braces() {
        assert_eq!(
            boxed_content("thus $\\boxed{\\frac{1}{2}}$"),
            Some("\\frac{1}{2}".to_string())
        );
        assert_eq!(boxed_content("no box"), None);
    }
}
