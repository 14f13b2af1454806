//! Sandboxed execution of solution programs, correctness filtering, and
//! answer grading.

pub mod grade;
pub mod interp;
pub mod value;

pub use grade::{grade, GradeMode, GradePolicy, DEFAULT_EPSILON};
pub use interp::{run_program, RunError, DEFAULT_BUDGET};
pub use value::{AnswerValue, NumericView, Value};

use crate::corpus::{AnswerField, Corpus, Record};
use crate::lang::{parse, Program};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    ParseFail,
    RuntimeFail,
    StepBudgetExceeded,
}

/// Outcome of executing one program or record. `answer` is present exactly
/// when `status` is `Ok`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecOutcome {
    pub status: ExecStatus,
    pub answer: Option<AnswerValue>,
    pub steps: u64,
    pub message: Option<String>,
}

impl ExecOutcome {
    pub fn is_ok(&self) -> bool {
        self.status == ExecStatus::Ok
    }

    /// Wire row for the `exec` subcommand: {"id", "status", "answer", "steps"}.
    pub fn to_json_row(&self, id: &str) -> serde_json::Value {
        serde_json::json!({
            "id": id,
            "status": self.status,
            "answer": self.answer.as_ref().map(|a| a.to_json()).unwrap_or(serde_json::Value::Null),
            "steps": self.steps,
        })
    }
}

/// Executes an already-parsed program under a step budget.
pub fn run(program: &Program, budget: u64) -> ExecOutcome {
    match run_program(program, budget) {
        Ok(output) => ExecOutcome {
            status: ExecStatus::Ok,
            answer: Some(AnswerValue::from_value(&output.answer)),
            steps: output.steps,
            message: None,
        },
        Err((RunError::BudgetExceeded, steps)) => ExecOutcome {
            status: ExecStatus::StepBudgetExceeded,
            answer: None,
            steps,
            message: Some("step budget exceeded".to_string()),
        },
        Err((RunError::Runtime(message), steps)) => ExecOutcome {
            status: ExecStatus::RuntimeFail,
            answer: None,
            steps,
            message: Some(message),
        },
    }
}

/// Parses and executes source text.
pub fn run_source(src: &str, budget: u64) -> ExecOutcome {
    match parse(src) {
        Ok(program) => run(&program, budget),
        Err(e) => ExecOutcome {
            status: ExecStatus::ParseFail,
            answer: None,
            steps: 0,
            message: Some(e.to_string()),
        },
    }
}

/// Extracts, parses, and executes a record's code block.
pub fn run_record(record: &Record, budget: u64) -> ExecOutcome {
    match record.extract_code() {
        Ok(block) => run_source(&block.text, budget),
        Err(e) => ExecOutcome {
            status: ExecStatus::ParseFail,
            answer: None,
            steps: 0,
            message: Some(e.to_string()),
        },
    }
}

/// Executes every record in parallel; output order matches input order.
pub fn run_corpus(corpus: &Corpus, budget: u64) -> Vec<ExecOutcome> {
    corpus
        .records
        .par_iter()
        .map(|r| run_record(r, budget))
        .collect()
}

/// Correctness filtering: keep-all retains every executable path (the
/// ablation baseline); graded mode additionally requires the answer to
/// match the record's ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrectnessFilter {
    KeepAllExecutable,
    Graded(GradePolicy),
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct FilterReport {
    pub kept: usize,
    pub rejected: usize,
    pub reasons: BTreeMap<String, usize>,
}

/// Ground truth of a record as an answer value.
pub fn ground_truth(record: &Record) -> Option<AnswerValue> {
    match record.answer.as_ref()? {
        AnswerField::Number(n) => {
            if let Some(i) = n.as_i64() {
                Some(AnswerValue::Int(i.into()))
            } else {
                n.as_f64().map(AnswerValue::Dec)
            }
        }
        AnswerField::Text(s) => Some(AnswerValue::Text(s.clone())),
    }
}

/// Splits a corpus into (kept, rejected) under the filter; both sides keep
/// corpus order. Records without ground truth are rejected in graded mode.
pub fn filter_correct(
    corpus: &Corpus,
    filter: &CorrectnessFilter,
    budget: u64,
) -> (Corpus, Corpus, FilterReport) {
    let outcomes = run_corpus(corpus, budget);
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    let mut report = FilterReport::default();
    for (record, outcome) in corpus.records.iter().zip(outcomes) {
        let verdict: Result<(), &str> = if !outcome.is_ok() {
            Err(match outcome.status {
                ExecStatus::ParseFail => "parse_fail",
                ExecStatus::StepBudgetExceeded => "step_budget_exceeded",
                _ => "runtime_fail",
            })
        } else {
            match filter {
                CorrectnessFilter::KeepAllExecutable => Ok(()),
                CorrectnessFilter::Graded(policy) => match ground_truth(record) {
                    None => Err("missing_ground_truth"),
                    Some(truth) => {
                        let pred = outcome.answer.as_ref().expect("ok outcome has answer");
                        if grade(pred, &truth, policy) {
                            Ok(())
                        } else {
                            Err("wrong_answer")
                        }
                    }
                },
            }
        };
        match verdict {
            Ok(()) => {
                kept.push(record.clone());
                report.kept += 1;
            }
            Err(reason) => {
                rejected.push(record.clone());
                report.rejected += 1;
                *report.reasons.entry(reason.to_string()).or_insert(0) += 1;
            }
        }
    }
    (
        Corpus::new(kept, corpus.stage),
        Corpus::new(rejected, corpus.stage),
        report,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Stage;
    use num_bigint::BigInt;

    const ROBE: &str = "def solution():\n    blue_fiber = 2287720\n    white_fiber = blue_fiber / 2\n    total_fiber = blue_fiber + white_fiber\n    result = total_fiber\n    return result";

    const PIE_PERTURBED: &str = "def pie_pieces_taken():\n    pies_initial = 10\n    pieces_per_pie = 13\n    total_pie_pieces = pies_initial * pieces_per_pie\n    remaining_pie_pieces = 19\n    taken_pie_pieces = total_pie_pieces - remaining_pie_pieces\n    return taken_pie_pieces\n\ntaken_pie_pieces = pie_pieces_taken()\nprint(taken_pie_pieces)";

    #[test]
    fn robe_program_evaluates_to_its_target() {
        let outcome = run_source(ROBE, DEFAULT_BUDGET);
        assert!(outcome.is_ok(), "{:?}", outcome.message);
        assert_eq!(outcome.answer, Some(AnswerValue::Dec(3431580.0)));
    }

    #[test]
    fn perturbed_pie_program_prints_111() {
        let outcome = run_source(PIE_PERTURBED, DEFAULT_BUDGET);
        assert!(outcome.is_ok());
        assert_eq!(outcome.answer, Some(AnswerValue::Int(BigInt::from(111))));
    }

    #[test]
    fn huge_loop_exhausts_the_budget() {
        let src = "total = 0\nfor i in range(1000000000):\n    total = total + 1\nprint(total)";
        let outcome = run_source(src, 1_000_000);
        assert_eq!(outcome.status, ExecStatus::StepBudgetExceeded);
        assert!(outcome.answer.is_none());
    }

    #[test]
    fn division_by_zero_is_a_runtime_fail() {
        let outcome = run_source("x = 1 / 0\nprint(x)", DEFAULT_BUDGET);
        assert_eq!(outcome.status, ExecStatus::RuntimeFail);
        assert!(outcome.message.unwrap().contains("division by zero"));
    }

    #[test]
    fn undefined_name_is_a_runtime_fail() {
        let outcome = run_source("print(nope)", DEFAULT_BUDGET);
        assert_eq!(outcome.status, ExecStatus::RuntimeFail);
    }

    #[test]
    fn answer_prefers_the_printed_value() {
        let src = "def f():\n    return 1\n\ndef g():\n    return 2\n\nx = f()\nprint(99)";
        let outcome = run_source(src, DEFAULT_BUDGET);
        assert_eq!(outcome.answer, Some(AnswerValue::Int(BigInt::from(99))));
    }

    #[test]
    fn trailing_call_wins_without_a_print() {
        let src = "def f():\n    return 1\n\ndef g():\n    return 2\n\nx = f()\ny = g()";
        let outcome = run_source(src, DEFAULT_BUDGET);
        assert_eq!(outcome.answer, Some(AnswerValue::Int(BigInt::from(2))));
    }

    #[test]
    fn bare_function_is_invoked_with_zero_args() {
        let outcome = run_source("def solution():\n    return 7", DEFAULT_BUDGET);
        assert_eq!(outcome.answer, Some(AnswerValue::Int(BigInt::from(7))));
    }

    #[test]
    fn runs_are_deterministic() {
        let a = run_source(PIE_PERTURBED, DEFAULT_BUDGET);
        let b = run_source(PIE_PERTURBED, DEFAULT_BUDGET);
        assert_eq!(a, b);
    }

    #[test]
    fn python_division_and_modulo_semantics() {
        for (src, expected) in [
            ("print(7 // 2)", AnswerValue::Int(BigInt::from(3))),
            ("print(-7 // 2)", AnswerValue::Int(BigInt::from(-4))),
            ("print(-7 % 3)", AnswerValue::Int(BigInt::from(2))),
            ("print(7 / 2)", AnswerValue::Dec(3.5)),
            ("print(-7.0 % 3)", AnswerValue::Dec(2.0)),
            ("print(2 ** 10)", AnswerValue::Int(BigInt::from(1024))),
            ("print(2 ** -1)", AnswerValue::Dec(0.5)),
            ("print(min(3, 1.5, 2))", AnswerValue::Dec(1.5)),
            ("print(max(3, 1.5, 2))", AnswerValue::Int(BigInt::from(3))),
            ("print(abs(-40))", AnswerValue::Int(BigInt::from(40))),
            ("print(round(2.5))", AnswerValue::Int(BigInt::from(2))),
            ("print(round(3.5))", AnswerValue::Int(BigInt::from(4))),
            ("print(int(3.9))", AnswerValue::Int(BigInt::from(3))),
            ("print(int(-3.9))", AnswerValue::Int(BigInt::from(-3))),
            ("print(float(3))", AnswerValue::Dec(3.0)),
            ("print(sum(range(1, 5)))", AnswerValue::Int(BigInt::from(10))),
        ] {
            let outcome = run_source(src, DEFAULT_BUDGET);
            assert_eq!(outcome.answer, Some(expected), "program: {}", src);
        }
    }

    #[test]
    fn conditional_and_loop_programs_run() {
        let src = "def wage(hours):\n    if hours > 8:\n        pay = 8 * 18 + (hours - 8) * 27\n    else:\n        pay = hours * 18\n    return pay\n\ntotal = 0\nfor day in range(5):\n    total = total + wage(10)\nprint(total)";
        let outcome = run_source(src, DEFAULT_BUDGET);
        // 8*18 + 2*27 = 198 per day, 5 days = 990.
        assert_eq!(outcome.answer, Some(AnswerValue::Int(BigInt::from(990))));
    }

    #[test]
    fn oversized_integers_fail_rather_than_exhaust_memory() {
        let src = "x = 10 ** 9\ny = x ** 1000000\nprint(y)";
        let outcome = run_source(src, DEFAULT_BUDGET);
        assert_eq!(outcome.status, ExecStatus::RuntimeFail);
    }

    fn record_with(code: &str, answer: Option<AnswerField>) -> Record {
        Record {
            id: "r".into(),
            question: "q".into(),
            completion: format!("```python\n{}\n```", code),
            source: "t".into(),
            answer,
        }
    }

    #[test]
    fn filter_keeps_correct_and_rejects_failures() {
        let corpus = Corpus::new(
            vec![
                Record {
                    id: "good".into(),
                    ..record_with(
                        "def f():\n    return 60\n\nprint(f())",
                        Some(AnswerField::Number(60.into())),
                    )
                },
                Record {
                    id: "wrong".into(),
                    ..record_with(
                        "def f():\n    return 61\n\nprint(f())",
                        Some(AnswerField::Number(60.into())),
                    )
                },
                Record {
                    id: "crash".into(),
                    ..record_with("def f():\n    return 1 / 0\n\nprint(f())", Some(AnswerField::Number(60.into())))
                },
                Record {
                    id: "truthless".into(),
                    ..record_with("def f():\n    return 60\n\nprint(f())", None)
                },
            ],
            Stage::Initial,
        );
        let policy = CorrectnessFilter::Graded(GradePolicy::exact());
        let (kept, rejected, report) = filter_correct(&corpus, &policy, DEFAULT_BUDGET);
        assert_eq!(kept.records.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), vec!["good"]);
        assert_eq!(rejected.len(), 3);
        assert_eq!(report.reasons["wrong_answer"], 1);
        assert_eq!(report.reasons["runtime_fail"], 1);
        assert_eq!(report.reasons["missing_ground_truth"], 1);

        // Keep-all retains every executable record regardless of truth.
        let (kept, rejected, _) =
            filter_correct(&corpus, &CorrectnessFilter::KeepAllExecutable, DEFAULT_BUDGET);
        assert_eq!(kept.len(), 3);
        assert_eq!(rejected.records[0].id, "crash");
    }
}
