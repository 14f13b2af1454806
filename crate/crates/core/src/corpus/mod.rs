//! Data model and JSONL I/O for reasoning-path corpora.
//!
//! A corpus is a JSONL file, one record per line:
//! `{"id", "question", "completion", "source", "answer"}`. The completion
//! carries one fenced code block and, usually, one fenced output block.
//! Files written by the pipeline may start with a provenance header line
//! (`{"pipeline": ...}`), which is preserved verbatim on round trips.

pub mod ingest;
pub mod synth;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: duplicate record id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("record `{id}`: no code fence in completion")]
    NoCodeFence { id: String },
}

/// One (question, completion, source) training datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub question: String,
    pub completion: String,
    pub source: String,
    #[serde(default)]
    pub answer: Option<AnswerField>,
}

/// Ground-truth value as it appears on the wire: a JSON number or a string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnswerField {
    Number(serde_json::Number),
    Text(String),
}

impl fmt::Display for AnswerField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerField::Number(n) => write!(f, "{}", n),
            AnswerField::Text(s) => write!(f, "{}", s),
        }
    }
}

/// Pipeline stage a corpus is at; provenance only, never affects behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    #[default]
    Initial,
    Deduped,
    Selected,
    Mixed,
    Generated,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Initial => "initial",
            Stage::Deduped => "deduped",
            Stage::Selected => "selected",
            Stage::Mixed => "mixed",
            Stage::Generated => "generated",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub records: Vec<Record>,
    pub stage: Stage,
    /// Raw provenance header line, if the file had one. Re-emitted verbatim.
    pub header: Option<String>,
}

/// The fenced code region of a completion. Splicing `text` back into the
/// completion at `span` reproduces the original bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeBlock {
    pub text: String,
    pub span: (usize, usize),
}

/// What the fence scanner found in one completion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FenceReport {
    pub code_fences: usize,
    pub output_fences: usize,
    pub unterminated: bool,
}

impl FenceReport {
    /// True when the completion matches the record invariant: exactly one
    /// code fence and at most one output fence.
    pub fn conforms(&self) -> bool {
        self.code_fences == 1 && self.output_fences <= 1 && !self.unterminated
    }
}

#[derive(Debug, Clone)]
struct Fence {
    tag: String,
    content: (usize, usize),
}

/// Scans `completion` for triple-backtick fences. The opening line may carry
/// a language tag; `output` tags mark the printed-output block.
fn scan_fences(completion: &str) -> (Vec<Fence>, bool) {
    let mut fences = Vec::new();
    let mut open: Option<(String, usize)> = None;
    let bytes = completion.as_bytes();
    let mut line_start = 0;
    while line_start <= bytes.len() {
        let line_end = completion[line_start..]
            .find('\n')
            .map(|i| line_start + i)
            .unwrap_or(bytes.len());
        let line = &completion[line_start..line_end];
        let trimmed = line.trim();
        match &open {
            None => {
                if let Some(rest) = trimmed.strip_prefix("```") {
                    let content_start = (line_end + 1).min(bytes.len());
                    open = Some((rest.trim().to_string(), content_start));
                }
            }
            Some((tag, content_start)) => {
                if trimmed == "```" {
                    let content_end = if line_start > *content_start {
                        line_start - 1
                    } else {
                        *content_start
                    };
                    fences.push(Fence {
                        tag: tag.clone(),
                        content: (*content_start, content_end.min(bytes.len())),
                    });
                    open = None;
                }
            }
        }
        if line_end >= bytes.len() {
            break;
        }
        line_start = line_end + 1;
    }
    let unterminated = open.is_some();
    (fences, unterminated)
}

impl Record {
    /// Reports the fence structure of the completion.
    pub fn fence_report(&self) -> FenceReport {
        let (fences, unterminated) = scan_fences(&self.completion);
        let mut report = FenceReport {
            unterminated,
            ..FenceReport::default()
        };
        for f in &fences {
            if f.tag == "output" {
                report.output_fences += 1;
            } else {
                report.code_fences += 1;
            }
        }
        report
    }

    /// Extracts the first fenced code region (any tag except `output`),
    /// verbatim. Further code fences, if present, are flagged by
    /// `fence_report`, not extracted.
    pub fn extract_code(&self) -> Result<CodeBlock, CorpusError> {
        let (fences, _) = scan_fences(&self.completion);
        let fence = fences
            .iter()
            .find(|f| f.tag != "output")
            .ok_or_else(|| CorpusError::NoCodeFence {
                id: self.id.clone(),
            })?;
        let (start, end) = fence.content;
        Ok(CodeBlock {
            text: self.completion[start..end].to_string(),
            span: (start, end),
        })
    }

    /// Splices `new_code` into the completion at the code fence span,
    /// leaving question, source, and answer untouched.
    pub fn recover(&self, new_code: &str) -> Result<Record, CorpusError> {
        let block = self.extract_code()?;
        let (start, end) = block.span;
        let mut completion = String::with_capacity(
            self.completion.len() - (end - start) + new_code.len(),
        );
        completion.push_str(&self.completion[..start]);
        completion.push_str(new_code);
        completion.push_str(&self.completion[end..]);
        Ok(Record {
            completion,
            ..self.clone()
        })
    }

    /// Replaces the content of the first `output` fence, if there is one.
    pub fn replace_output(&self, new_output: &str) -> Record {
        let (fences, _) = scan_fences(&self.completion);
        match fences.iter().find(|f| f.tag == "output") {
            Some(fence) => {
                let (start, end) = fence.content;
                let mut completion = String::new();
                completion.push_str(&self.completion[..start]);
                completion.push_str(new_output);
                completion.push_str(&self.completion[end..]);
                Record {
                    completion,
                    ..self.clone()
                }
            }
            None => self.clone(),
        }
    }
}

/// Stable identifier for a question: prefix of the SHA-256 of its text.
/// Used to key groups in reports and manifests.
pub fn question_id(question: &str) -> String {
    let digest = Sha256::digest(question.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{:02x}", byte));
    }
    out
}

/// All records sharing one question text, in corpus order.
#[derive(Debug, Clone)]
pub struct QuestionGroup {
    pub question_id: String,
    pub question: String,
    pub members: Vec<GroupMember>,
}

#[derive(Debug, Clone)]
pub struct GroupMember {
    /// Index of the record in the source corpus.
    pub index: usize,
    pub record: Record,
}

/// Groups records by exact question text, preserving first-appearance order
/// of questions and corpus order within each group.
pub fn group_by_question(corpus: &Corpus) -> Vec<QuestionGroup> {
    let mut order: Vec<QuestionGroup> = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (index, record) in corpus.records.iter().enumerate() {
        match seen.get(record.question.as_str()) {
            Some(&slot) => order[slot].members.push(GroupMember {
                index,
                record: record.clone(),
            }),
            None => {
                seen.insert(record.question.as_str(), order.len());
                order.push(QuestionGroup {
                    question_id: question_id(&record.question),
                    question: record.question.clone(),
                    members: vec![GroupMember {
                        index,
                        record: record.clone(),
                    }],
                });
            }
        }
    }
    order
}

impl Corpus {
    pub fn new(records: Vec<Record>, stage: Stage) -> Self {
        Corpus {
            records,
            stage,
            header: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Loads a JSONL corpus. Fails on the first malformed line, naming it.
    pub fn load(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read(BufReader::new(file))
    }

    pub fn read(reader: impl Read) -> Result<Corpus, CorpusError> {
        let reader = BufReader::new(reader);
        let mut records = Vec::new();
        let mut header = None;
        let mut seen_ids: HashMap<String, usize> = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| CorpusError::Io {
                path: "<reader>".to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            if line_no == 1 && is_header_line(&line) {
                header = Some(line);
                continue;
            }
            let record = parse_record_line(&line, line_no)?;
            if let Some(prev) = seen_ids.insert(record.id.clone(), line_no) {
                let _ = prev;
                return Err(CorpusError::DuplicateId {
                    line: line_no,
                    id: record.id,
                });
            }
            let report = record.fence_report();
            if report.code_fences > 1 {
                log::warn!(
                    "record `{}`: {} code fences; only the first is used",
                    record.id,
                    report.code_fences
                );
            }
            records.push(record);
        }
        Ok(Corpus {
            records,
            stage: Stage::Initial,
            header,
        })
    }

    /// Serializes to JSONL, header line (if any) first. The output of
    /// `serialize` after `load` is byte-identical for files in this format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        if let Some(header) = &self.header {
            out.push_str(header);
            out.push('\n');
        }
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, mut writer: impl Write) -> std::io::Result<()> {
        writer.write_all(self.to_jsonl().as_bytes())
    }
}

fn is_header_line(line: &str) -> bool {
    match serde_json::from_str::<serde_json::Value>(line) {
        Ok(serde_json::Value::Object(map)) => map.contains_key("pipeline") && !map.contains_key("id"),
        _ => false,
    }
}

fn parse_record_line(line: &str, line_no: usize) -> Result<Record, CorpusError> {
    // Validate field presence against a generic value first so errors name
    // the missing field, then deserialize properly.
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| CorpusError::Line {
            line: line_no,
            message: format!("invalid JSON: {}", e),
        })?;
    let obj = value.as_object().ok_or_else(|| CorpusError::Line {
        line: line_no,
        message: "expected a JSON object".to_string(),
    })?;
    for field in ["id", "question", "completion", "source"] {
        match obj.get(field) {
            Some(serde_json::Value::String(_)) => {}
            Some(_) => {
                return Err(CorpusError::Line {
                    line: line_no,
                    message: format!("field `{}` must be a string", field),
                })
            }
            None => {
                return Err(CorpusError::Line {
                    line: line_no,
                    message: format!("missing field `{}`", field),
                })
            }
        }
    }
    if let Some(answer) = obj.get("answer") {
        if !matches!(
            answer,
            serde_json::Value::Null | serde_json::Value::Number(_) | serde_json::Value::String(_)
        ) {
            return Err(CorpusError::Line {
                line: line_no,
                message: "field `answer` must be a string, number, or null".to_string(),
            });
        }
    }
    serde_json::from_value(value).map_err(|e| CorpusError::Line {
        line: line_no,
        message: e.to_string(),
    })
}

/// Scans a whole file and returns every line error instead of stopping at
/// the first; used by the `load-check` subcommand.
pub fn scan_file(path: impl AsRef<Path>) -> Result<ScanReport, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut report = ScanReport::default();
    let mut seen_ids: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if line_no == 1 && is_header_line(&line) {
            report.has_header = true;
            continue;
        }
        match parse_record_line(&line, line_no) {
            Ok(record) => {
                report.records += 1;
                if let Some(first) = seen_ids.insert(record.id.clone(), line_no) {
                    report
                        .errors
                        .push(format!("line {}: duplicate id `{}` (first at line {})", line_no, record.id, first));
                }
                let fences = record.fence_report();
                if !fences.conforms() {
                    report.fence_violations.push(format!(
                        "line {} (id `{}`): {} code fences, {} output fences{}",
                        line_no,
                        record.id,
                        fences.code_fences,
                        fences.output_fences,
                        if fences.unterminated {
                            ", unterminated fence"
                        } else {
                            ""
                        }
                    ));
                }
            }
            Err(e) => report.errors.push(e.to_string()),
        }
    }
    Ok(report)
}

#[derive(Debug, Default, Serialize)]
pub struct ScanReport {
    pub records: usize,
    pub has_header: bool,
    pub errors: Vec<String>,
    pub fence_violations: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, question: &str, code: &str) -> Record {
        Record {
            id: id.to_string(),
            question: question.to_string(),
            completion: format!("```python\n{}\n```\n```output\n42\n```", code),
            source: "test".to_string(),
            answer: None,
        }
    }

    #[test]
    fn load_keeps_file_order_and_count() {
        let data = concat!(
            r#"{"id":"a","question":"q1","completion":"```python\nx = 1\n```","source":"s","answer":null}"#,
            "\n",
            r#"{"id":"b","question":"q2","completion":"```python\ny = 2\n```","source":"s","answer":60}"#,
            "\n",
            r#"{"id":"c","question":"q3","completion":"```python\nz = 3\n```","source":"s","answer":"sixty"}"#,
            "\n"
        );
        let corpus = Corpus::read(data.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.records[0].id, "a");
        assert_eq!(corpus.records[2].id, "c");
        assert_eq!(corpus.to_jsonl(), data);
    }

    #[test]
    fn missing_completion_names_the_line() {
        let data = concat!(
            r#"{"id":"a","question":"q","completion":"```python\nx = 1\n```","source":"s","answer":null}"#,
            "\n",
            r#"{"id":"b","question":"q","source":"s","answer":null}"#,
            "\n"
        );
        let err = Corpus::read(data.as_bytes()).unwrap_err();
        match err {
            CorpusError::Line { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("completion"), "message: {}", message);
            }
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let data = concat!(
            r#"{"id":"a","question":"q","completion":"```python\nx = 1\n```","source":"s","answer":null}"#,
            "\n",
            r#"{"id":"a","question":"q","completion":"```python\nx = 2\n```","source":"s","answer":null}"#,
            "\n"
        );
        assert!(matches!(
            Corpus::read(data.as_bytes()),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn extract_code_returns_the_fenced_region_verbatim() {
        let r = Record {
            id: "r".into(),
            question: "q".into(),
            completion: "```python\ndef f():\n    return 1\n```".into(),
            source: "s".into(),
            answer: None,
        };
        let block = r.extract_code().unwrap();
        assert_eq!(block.text, "def f():\n    return 1");
        // Splicing the text back at the span reproduces the completion.
        let rebuilt = format!(
            "{}{}{}",
            &r.completion[..block.span.0],
            block.text,
            &r.completion[block.span.1..]
        );
        assert_eq!(rebuilt, r.completion);
    }

    #[test]
    fn extract_without_fence_is_an_error() {
        let r = Record {
            id: "naked".into(),
            question: "q".into(),
            completion: "no code here".into(),
            source: "s".into(),
            answer: None,
        };
        match r.extract_code() {
            Err(CorpusError::NoCodeFence { id }) => assert_eq!(id, "naked"),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn recover_is_inverse_of_extract() {
        let r = record("r", "q", "def f():\n    return 1");
        let block = r.extract_code().unwrap();
        let same = r.recover(&block.text).unwrap();
        assert_eq!(same, r);
    }

    #[test]
    fn recover_only_touches_the_fenced_region() {
        let r = record("r", "q", "def f():\n    apples = 3\n    return apples");
        let renamed_code = "def f():\n    pears = 3\n    return pears";
        let spliced = r.recover(renamed_code).unwrap();
        assert_eq!(spliced.question, r.question);
        assert_eq!(spliced.source, r.source);
        assert_eq!(spliced.extract_code().unwrap().text, renamed_code);
        // Oracle: independent string splice.
        let block = r.extract_code().unwrap();
        let expected = format!(
            "{}{}{}",
            &r.completion[..block.span.0],
            renamed_code,
            &r.completion[block.span.1..]
        );
        assert_eq!(spliced.completion, expected);
    }

    #[test]
    fn fence_report_counts_both_kinds() {
        let r = record("r", "q", "x = 1");
        let report = r.fence_report();
        assert_eq!(report.code_fences, 1);
        assert_eq!(report.output_fences, 1);
        assert!(report.conforms());

        let multi = Record {
            completion: "```python\nx = 1\n```\n```python\ny = 2\n```".into(),
            ..r.clone()
        };
        let report = multi.fence_report();
        assert_eq!(report.code_fences, 2);
        assert!(!report.conforms());
        // First fence wins.
        assert_eq!(multi.extract_code().unwrap().text, "x = 1");
    }

    #[test]
    fn replace_output_rewrites_only_the_output_fence() {
        let r = record("r", "q", "x = 1");
        let swapped = r.replace_output("111");
        assert!(swapped.completion.contains("```output\n111\n```"));
        assert_eq!(swapped.extract_code().unwrap().text, "x = 1");
    }

    #[test]
    fn grouping_preserves_first_appearance_order() {
        let corpus = Corpus::new(
            vec![
                record("a", "q1", "x = 1"),
                record("b", "q2", "x = 2"),
                record("c", "q1", "x = 3"),
            ],
            Stage::Initial,
        );
        let groups = group_by_question(&corpus);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].members.len(), 2);
        assert_eq!(groups[0].members[1].index, 2);
        assert_eq!(groups[1].members.len(), 1);
        assert_eq!(groups[0].question_id, question_id("q1"));
    }

    #[test]
    fn header_line_round_trips() {
        let data = concat!(
            r#"{"pipeline":{"subcommand":"dedup","seed":0}}"#,
            "\n",
            r#"{"id":"a","question":"q","completion":"```python\nx = 1\n```","source":"s","answer":null}"#,
            "\n"
        );
        let corpus = Corpus::read(data.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert!(corpus.header.is_some());
        assert_eq!(corpus.to_jsonl(), data);
    }
}
