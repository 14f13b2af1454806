//! Automatic generation of numerically perturbed problems with
//! execution-validated answers.
//!
//! For each question group: the canonical class with the highest pre-dedup
//! multiplicity supplies the main path, every other class one validation
//! path. Question numbers are extracted, perturbed, and written back into
//! both the question and the code; the perturbed main path is executed and
//! its answer accepted only when every remaining path agrees exactly.
//! Draws that fail execution, go negative (when forbidden), or disagree
//! are retried under a shared attempt budget.

pub mod sites;
pub mod words;

pub use sites::{extract_numbers, link_sites, literal_values, NumberSite};
pub use words::{language_perturb, number_to_words, DEFAULT_WORD_BOUND};

use crate::canon::canonical_form_of;
use crate::corpus::{group_by_question, Corpus, GroupMember, QuestionGroup};
use crate::exec::{grade, run, AnswerValue, GradePolicy, NumericView};
use crate::lang::{parse, unparse, Expr, FunctionDef, Number, NumLit, Program, Stmt, StmtKind, UnaryOp};
use crate::seeding::group_rng;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbMode {
    Distribution,
    Language,
    Noise,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub mode: PerturbMode,
    /// Mean of the normal offset (distribution mode).
    pub mu: f64,
    /// Standard deviation of the offset; must be positive.
    pub sigma: f64,
    /// Digits of the appended fraction (noise mode).
    pub decimal_places: usize,
    pub seed: u64,
    pub retry_limit: usize,
    pub require_nonnegative: bool,
    pub require_integer: bool,
    /// Integer sites up to this value are worded (language mode).
    pub word_bound: u64,
}

impl Default for PerturbSpec {
    fn default() -> Self {
        PerturbSpec {
            mode: PerturbMode::Distribution,
            mu: 5.0,
            sigma: 1.0,
            decimal_places: 2,
            seed: 0,
            retry_limit: 50,
            require_nonnegative: true,
            require_integer: false,
            word_bound: DEFAULT_WORD_BOUND,
        }
    }
}

impl PerturbSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.retry_limit < 1 {
            return Err("retry limit must be at least 1".to_string());
        }
        if self.mode == PerturbMode::Distribution && !(self.sigma > 0.0) {
            return Err("sigma must be positive in distribution mode".to_string());
        }
        if self.mode == PerturbMode::Noise && self.decimal_places == 0 {
            return Err("decimal places must be at least 1 in noise mode".to_string());
        }
        Ok(())
    }
}

/// Adds an integer offset to a value, preserving its kind.
pub fn shifted(n: &Number, offset: i64) -> Number {
    match n {
        Number::Int(i) => Number::Int(i + offset),
        Number::Float(f) => Number::Float(f + offset as f64),
    }
}

/// Draws one perturbed value. Distribution mode adds the floor of a normal
/// draw; noise mode appends a uniform decimal fraction.
pub fn perturb_value(n: &Number, spec: &PerturbSpec, rng: &mut ChaCha8Rng) -> Number {
    match spec.mode {
        PerturbMode::Distribution => {
            let normal = Normal::new(spec.mu, spec.sigma).expect("validated sigma");
            let x: f64 = normal.sample(rng);
            shifted(n, x.floor() as i64)
        }
        PerturbMode::Noise => {
            let scale = 10u64.pow(spec.decimal_places.min(9) as u32);
            let units = rng.gen_range(1..scale);
            Number::Float(n.as_f64() + units as f64 / scale as f64)
        }
        PerturbMode::Language => n.clone(),
    }
}

/// Main/remaining decomposition of a question group by canonical class.
#[derive(Debug, Clone)]
pub struct SplitPaths {
    pub main: GroupMember,
    pub main_multiplicity: usize,
    /// One representative per non-main canonical class, by first occurrence.
    pub remaining: Vec<GroupMember>,
    /// Single class: validation degenerates to executability only.
    pub low_confidence: bool,
}

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("no parseable path in group")]
    NoParseableMain,
}

/// Picks the canonical class with the highest multiplicity as the main
/// path (ties by lowest original index) and one representative for every
/// other class.
pub fn split_paths(group: &QuestionGroup) -> Result<SplitPaths, SplitError> {
    struct Class {
        first_pos: usize,
        count: usize,
        rep: GroupMember,
    }
    let mut order: Vec<String> = Vec::new();
    let mut classes: BTreeMap<String, Class> = BTreeMap::new();
    for (pos, member) in group.members.iter().enumerate() {
        let Ok(canon) = canonical_form_of(&member.record) else {
            continue;
        };
        match classes.get_mut(&canon.digest) {
            Some(class) => class.count += 1,
            None => {
                order.push(canon.digest.clone());
                classes.insert(
                    canon.digest,
                    Class {
                        first_pos: pos,
                        count: 1,
                        rep: member.clone(),
                    },
                );
            }
        }
    }
    if order.is_empty() {
        return Err(SplitError::NoParseableMain);
    }
    let main_digest = order
        .iter()
        .max_by(|a, b| {
            let ca = &classes[*a];
            let cb = &classes[*b];
            ca.count
                .cmp(&cb.count)
                .then(cb.first_pos.cmp(&ca.first_pos))
        })
        .expect("nonempty")
        .clone();
    let main_class = &classes[&main_digest];
    let remaining: Vec<GroupMember> = order
        .iter()
        .filter(|d| **d != main_digest)
        .map(|d| classes[d].rep.clone())
        .collect();
    Ok(SplitPaths {
        main: main_class.rep.clone(),
        main_multiplicity: main_class.count,
        low_confidence: remaining.is_empty(),
        remaining,
    })
}

#[derive(Debug, Error, PartialEq)]
pub enum RewriteError {
    /// One numeric value appears at two question sites whose perturbed
    /// values differ; correspondence with code literals would be a guess.
    #[error("ambiguous binding: value {value} perturbs to different results")]
    AmbiguousBinding { value: String },
}

/// Replaces each linked literal occurrence with its site's new value.
/// Unlinked literals (structural constants) are untouched.
pub fn rewrite_code(
    program: &Program,
    sites: &[NumberSite],
    new_values: &[Number],
) -> Result<Program, RewriteError> {
    check_ambiguity(sites, new_values)?;
    let links = link_sites(sites, program);
    let mut changes: BTreeMap<usize, Number> = BTreeMap::new();
    for (link, value) in links.iter().zip(new_values) {
        if let Some(occurrence) = link {
            changes.insert(*occurrence, value.clone());
        }
    }
    Ok(replace_literals(program, &changes))
}

fn check_ambiguity(sites: &[NumberSite], new_values: &[Number]) -> Result<(), RewriteError> {
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            if sites[i].value.numeric_eq(&sites[j].value)
                && !new_values[i].numeric_eq(&new_values[j])
            {
                return Err(RewriteError::AmbiguousBinding {
                    value: sites[i].value.to_literal(),
                });
            }
        }
    }
    Ok(())
}

/// Rebuilds the program with literal occurrence `i` (in `literal_values`
/// order) replaced per `changes`. Negative replacements become unary-minus
/// expressions since the grammar has no signed literals.
fn replace_literals(program: &Program, changes: &BTreeMap<usize, Number>) -> Program {
    let mut counter = 0usize;
    let functions = program
        .functions
        .iter()
        .map(|f| FunctionDef {
            name: f.name.clone(),
            params: f.params.clone(),
            docstring: f.docstring.clone(),
            body: replace_in_stmts(&f.body, changes, &mut counter),
            line: f.line,
        })
        .collect();
    let epilogue = replace_in_stmts(&program.epilogue, changes, &mut counter);
    Program {
        functions,
        epilogue,
        diagnostics: program.diagnostics.clone(),
    }
}

fn replace_in_stmts(
    stmts: &[Stmt],
    changes: &BTreeMap<usize, Number>,
    counter: &mut usize,
) -> Vec<Stmt> {
    stmts
        .iter()
        .map(|stmt| {
            let kind = match &stmt.kind {
                StmtKind::Assign { target, value } => StmtKind::Assign {
                    target: target.clone(),
                    value: replace_in_expr(value, changes, counter),
                },
                StmtKind::AugAssign { target, op, value } => StmtKind::AugAssign {
                    target: target.clone(),
                    op: *op,
                    value: replace_in_expr(value, changes, counter),
                },
                StmtKind::Return { value } => StmtKind::Return {
                    value: value.as_ref().map(|e| replace_in_expr(e, changes, counter)),
                },
                StmtKind::Expr { value } => StmtKind::Expr {
                    value: replace_in_expr(value, changes, counter),
                },
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                } => StmtKind::If {
                    cond: replace_in_expr(cond, changes, counter),
                    then_body: replace_in_stmts(then_body, changes, counter),
                    else_body: replace_in_stmts(else_body, changes, counter),
                },
                StmtKind::ForRange {
                    var,
                    start,
                    stop,
                    step,
                    body,
                } => StmtKind::ForRange {
                    var: var.clone(),
                    start: start.as_ref().map(|e| replace_in_expr(e, changes, counter)),
                    stop: replace_in_expr(stop, changes, counter),
                    step: step.as_ref().map(|e| replace_in_expr(e, changes, counter)),
                    body: replace_in_stmts(body, changes, counter),
                },
            };
            Stmt::new(stmt.line, kind)
        })
        .collect()
}

fn replace_in_expr(
    expr: &Expr,
    changes: &BTreeMap<usize, Number>,
    counter: &mut usize,
) -> Expr {
    match expr {
        Expr::Num(_) => {
            let idx = *counter;
            *counter += 1;
            match changes.get(&idx) {
                Some(new_value) => literal_expr(new_value),
                None => expr.clone(),
            }
        }
        Expr::Str(_) | Expr::Name(_) => expr.clone(),
        Expr::Binary { op, left, right } => Expr::Binary {
            op: *op,
            left: Box::new(replace_in_expr(left, changes, counter)),
            right: Box::new(replace_in_expr(right, changes, counter)),
        },
        Expr::Compare { op, left, right } => Expr::Compare {
            op: *op,
            left: Box::new(replace_in_expr(left, changes, counter)),
            right: Box::new(replace_in_expr(right, changes, counter)),
        },
        Expr::Bool { op, left, right } => Expr::Bool {
            op: *op,
            left: Box::new(replace_in_expr(left, changes, counter)),
            right: Box::new(replace_in_expr(right, changes, counter)),
        },
        Expr::Unary { op, operand } => Expr::Unary {
            op: *op,
            operand: Box::new(replace_in_expr(operand, changes, counter)),
        },
        Expr::Call { func, args } => Expr::Call {
            func: func.clone(),
            args: args
                .iter()
                .map(|a| replace_in_expr(a, changes, counter))
                .collect(),
        },
    }
}

fn literal_expr(value: &Number) -> Expr {
    if value.is_negative() {
        let magnitude = match value {
            Number::Int(i) => Number::Int(-i.clone()),
            Number::Float(f) => Number::Float(-f),
        };
        Expr::Unary {
            op: UnaryOp::Neg,
            operand: Box::new(Expr::Num(NumLit::from_number(magnitude))),
        }
    } else {
        Expr::Num(NumLit::from_number(value.clone()))
    }
}

/// New surface text for a site, matching the old surface's shape: decimal
/// places are preserved, comma grouping is preserved for integers.
pub fn format_surface(site: &NumberSite, new_value: &Number) -> String {
    if let Some(dot) = site.surface.find('.') {
        let places = site.surface.len() - dot - 1;
        return format!("{:.*}", places, new_value.as_f64());
    }
    match new_value {
        Number::Int(i) => {
            if site.surface.contains(',') {
                comma_grouped(i)
            } else {
                i.to_string()
            }
        }
        Number::Float(f) => {
            // An integer surface that picked up a fraction (noise mode).
            let text = format!("{}", f);
            if text.contains('.') {
                text
            } else {
                format!("{:.1}", f)
            }
        }
    }
}

fn comma_grouped(i: &BigInt) -> String {
    let digits = i.abs().to_string();
    let mut grouped = String::new();
    for (idx, c) in digits.chars().enumerate() {
        if idx > 0 && (digits.len() - idx) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    if i.is_negative() {
        format!("-{}", grouped)
    } else {
        grouped
    }
}

/// Splices new surfaces into the question at the site spans.
pub fn apply_to_question(question: &str, sites: &[NumberSite], surfaces: &[String]) -> String {
    let mut out = question.to_string();
    for (site, surface) in sites.iter().zip(surfaces).rev() {
        out.replace_range(site.span.0..site.span.1, surface);
    }
    out
}

/// Rewrites docstring number occurrences in lockstep with their question
/// spans: the j-th occurrence of value v in the docstring takes the new
/// surface of the j-th question site with value v.
fn rewrite_docstring(doc: &str, sites: &[NumberSite], surfaces: &[String]) -> String {
    let doc_sites = extract_numbers(doc);
    let mut per_value_seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut replacements: Vec<(usize, usize, String)> = Vec::new();
    for doc_site in &doc_sites {
        let key = doc_site.value.to_literal();
        let ordinal = {
            let e = per_value_seen.entry(key.clone()).or_insert(0);
            let v = *e;
            *e += 1;
            v
        };
        let mut matching = sites
            .iter()
            .zip(surfaces)
            .filter(|(s, _)| s.value.numeric_eq(&doc_site.value));
        if let Some((_, surface)) = matching.nth(ordinal) {
            replacements.push((doc_site.span.0, doc_site.span.1, surface.clone()));
        }
    }
    let mut out = doc.to_string();
    for (start, end, surface) in replacements.into_iter().rev() {
        out.replace_range(start..end, &surface);
    }
    out
}

/// Per spec: all remaining answers must equal the main answer under the
/// exact policy.
#[derive(Debug, Clone)]
pub struct ValidationResult {
    pub a_main: AnswerValue,
    pub a_remains: Vec<AnswerValue>,
    pub consistent: bool,
    pub attempts: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteChange {
    pub old: String,
    pub new: String,
    pub value_old: f64,
    pub value_new: f64,
    pub span: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    pub id: String,
    pub question: String,
    /// Perturbed main-path completion: rewritten code, lockstep docstring,
    /// updated output fence.
    pub completion: String,
    pub answer: AnswerValue,
    pub seed_id: String,
    pub attempts: usize,
    pub low_confidence: bool,
    pub sites: Vec<SiteChange>,
}

impl GeneratedProblem {
    /// Wire row: a loadable corpus record plus a provenance object.
    pub fn to_json_row(&self, spec: &PerturbSpec) -> serde_json::Value {
        serde_json::json!({
            "id": self.id,
            "question": self.question,
            "completion": self.completion,
            "source": "generated",
            "answer": self.answer.to_json(),
            "provenance": {
                "seed_id": self.seed_id,
                "attempts": self.attempts,
                "low_confidence": self.low_confidence,
                "spec": spec,
                "sites": self.sites,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NoSites,
    NoParseableMain,
    AmbiguousBinding,
    Exhausted,
    MainExecFailed,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::NoSites => "no_sites",
            RejectReason::NoParseableMain => "no_parseable_main",
            RejectReason::AmbiguousBinding => "ambiguous_binding",
            RejectReason::Exhausted => "exhausted",
            RejectReason::MainExecFailed => "main_exec_failed",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Rejection {
    pub question_id: String,
    pub reason: RejectReason,
    pub attempts: usize,
}

/// Generates one perturbed problem from a question group.
pub fn generate(
    group: &QuestionGroup,
    spec: &PerturbSpec,
    budget: u64,
) -> Result<GeneratedProblem, Rejection> {
    let reject = |reason, attempts| Rejection {
        question_id: group.question_id.clone(),
        reason,
        attempts,
    };
    let split = split_paths(group).map_err(|_| reject(RejectReason::NoParseableMain, 0))?;
    if spec.mode == PerturbMode::Language {
        return generate_language(group, &split, spec, budget);
    }
    let sites = extract_numbers(&group.question);
    if sites.is_empty() {
        return Err(reject(RejectReason::NoSites, 0));
    }
    let main_code = split
        .main
        .record
        .extract_code()
        .expect("split main is parseable");
    let main_program = parse(&main_code.text).expect("split main is parseable");
    let remaining_programs: Vec<Program> = split
        .remaining
        .iter()
        .map(|m| {
            let code = m.record.extract_code().expect("split path parseable");
            parse(&code.text).expect("split path parseable")
        })
        .collect();

    let mut rng = group_rng(spec.seed, &group.question_id);
    let exact = GradePolicy::exact();
    for attempt in 1..=spec.retry_limit {
        let new_values: Vec<Number> = sites
            .iter()
            .map(|s| perturb_value(&s.value, spec, &mut rng))
            .collect();
        if let Err(RewriteError::AmbiguousBinding { .. }) = check_ambiguity(&sites, &new_values) {
            return Err(reject(RejectReason::AmbiguousBinding, attempt));
        }
        let rewritten = rewrite_code(&main_program, &sites, &new_values)
            .expect("ambiguity checked above");
        let outcome = run(&rewritten, budget);
        let Some(a_main) = outcome.answer else {
            continue;
        };
        if spec.require_nonnegative && is_negative_answer(&a_main) {
            continue;
        }
        if spec.require_integer && !is_integral_answer(&a_main) {
            continue;
        }
        let mut a_remains = Vec::with_capacity(remaining_programs.len());
        let mut all_ok = true;
        for program in &remaining_programs {
            let rewritten = rewrite_code(program, &sites, &new_values)
                .expect("ambiguity checked above");
            match run(&rewritten, budget).answer {
                Some(a) => a_remains.push(a),
                None => {
                    all_ok = false;
                    break;
                }
            }
        }
        if !all_ok {
            continue;
        }
        let validation = ValidationResult {
            consistent: a_remains.iter().all(|a| grade(a, &a_main, &exact)),
            a_main,
            a_remains,
            attempts: attempt,
        };
        if !validation.consistent {
            continue;
        }
        let a_main = validation.a_main;

        let surfaces: Vec<String> = sites
            .iter()
            .zip(&new_values)
            .map(|(s, v)| format_surface(s, v))
            .collect();
        let question = apply_to_question(&group.question, &sites, &surfaces);
        let mut final_program = rewritten;
        if let Some(func) = final_program.functions.first_mut() {
            if let Some(doc) = &func.docstring {
                func.docstring = Some(rewrite_docstring(doc, &sites, &surfaces));
            }
        }
        let code_text = unparse(&final_program);
        let completion = split
            .main
            .record
            .recover(&code_text)
            .expect("recover perturbed main")
            .replace_output(&a_main.to_string())
            .completion;
        let changes: Vec<SiteChange> = sites
            .iter()
            .zip(&surfaces)
            .zip(&new_values)
            .map(|((site, surface), value)| SiteChange {
                old: site.surface.clone(),
                new: surface.clone(),
                value_old: site.value.as_f64(),
                value_new: value.as_f64(),
                span: site.span,
            })
            .collect();
        return Ok(GeneratedProblem {
            id: format!("gen-{}", split.main.record.id),
            question,
            completion,
            answer: a_main,
            seed_id: split.main.record.id.clone(),
            attempts: attempt,
            low_confidence: split.low_confidence,
            sites: changes,
        });
    }
    Err(reject(RejectReason::Exhausted, spec.retry_limit))
}

/// Language mode: word the question's integer sites; answer and code stay
/// unchanged (the main path is executed once to pin the answer).
fn generate_language(
    group: &QuestionGroup,
    split: &SplitPaths,
    spec: &PerturbSpec,
    budget: u64,
) -> Result<GeneratedProblem, Rejection> {
    let sites = extract_numbers(&group.question);
    let convertible: Vec<&NumberSite> = sites
        .iter()
        .filter(|s| match &s.value {
            Number::Int(i) => i.to_u64().is_some_and(|v| v <= spec.word_bound),
            Number::Float(_) => false,
        })
        .collect();
    if convertible.is_empty() {
        return Err(Rejection {
            question_id: group.question_id.clone(),
            reason: RejectReason::NoSites,
            attempts: 0,
        });
    }
    let outcome = crate::exec::run_record(&split.main.record, budget);
    let Some(answer) = outcome.answer else {
        return Err(Rejection {
            question_id: group.question_id.clone(),
            reason: RejectReason::MainExecFailed,
            attempts: 1,
        });
    };
    let question = language_perturb(&group.question, spec.word_bound);
    let changes: Vec<SiteChange> = convertible
        .iter()
        .map(|site| {
            let words = match &site.value {
                Number::Int(i) => number_to_words(i.to_u64().unwrap_or(0)),
                Number::Float(_) => unreachable!("filtered above"),
            };
            SiteChange {
                old: site.surface.clone(),
                new: words,
                value_old: site.value.as_f64(),
                value_new: site.value.as_f64(),
                span: site.span,
            }
        })
        .collect();
    Ok(GeneratedProblem {
        id: format!("gen-{}", split.main.record.id),
        question,
        completion: split.main.record.completion.clone(),
        answer,
        seed_id: split.main.record.id.clone(),
        attempts: 1,
        low_confidence: split.low_confidence,
        sites: changes,
    })
}

fn is_negative_answer(answer: &AnswerValue) -> bool {
    match answer.as_numeric() {
        Some(NumericView::Int(i)) => i.is_negative(),
        Some(NumericView::Dec(f)) => f < 0.0,
        None => false,
    }
}

fn is_integral_answer(answer: &AnswerValue) -> bool {
    match answer.as_numeric() {
        Some(NumericView::Int(_)) => true,
        Some(NumericView::Dec(f)) => f.fract() == 0.0,
        None => false,
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GenerationReport {
    pub generated: usize,
    /// Rejection counts keyed by reason name.
    pub rejections: BTreeMap<String, usize>,
}

/// Runs the generator over every question group in parallel.
pub fn generate_corpus(
    corpus: &Corpus,
    spec: &PerturbSpec,
    budget: u64,
) -> (Vec<GeneratedProblem>, Vec<Rejection>, GenerationReport) {
    let groups = group_by_question(corpus);
    let results: Vec<Result<GeneratedProblem, Rejection>> = groups
        .par_iter()
        .map(|group| generate(group, spec, budget))
        .collect();
    let mut problems = Vec::new();
    let mut rejections = Vec::new();
    let mut report = GenerationReport::default();
    for result in results {
        match result {
            Ok(p) => {
                report.generated += 1;
                problems.push(p);
            }
            Err(r) => {
                *report
                    .rejections
                    .entry(r.reason.as_str().to_string())
                    .or_insert(0) += 1;
                rejections.push(r);
            }
        }
    }
    (problems, rejections, report)
}
