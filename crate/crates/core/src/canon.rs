//! Canonicalization and per-question deduplication of solution programs,
//! plus path-count statistics.
//!
//! A program's canonical form is its AST with user variables renamed to
//! lowercase letters in first-occurrence order, user functions renamed to
//! uppercase letters in definition order, docstrings dropped, and the
//! result printed in the canonical layout. Two programs that differ only in
//! naming, whitespace, or docstrings share one canonical form, which is the
//! dedup key. The canonical text is only ever a key: survivors keep their
//! original code.

use crate::corpus::{group_by_question, Corpus, Record, Stage};
use crate::lang::{
    is_builtin, parse, unparse, Expr, FunctionDef, Program, Stmt, StmtKind,
};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};

/// Injective rename maps: variables to generated lowercase names in
/// first-occurrence order, functions to uppercase names in definition
/// order. Builtins are never renamed.
#[derive(Debug, Clone, Default)]
pub struct RenameMap {
    pub variables: HashMap<String, String>,
    pub functions: HashMap<String, String>,
}

/// Generated variable names: a, b, ..., z, aa, ab, ...
pub fn lower_name(index: usize) -> String {
    spelled_name(index, b'a')
}

/// Generated function names: A, B, ..., Z, AA, AB, ...
pub fn upper_name(index: usize) -> String {
    spelled_name(index, b'A')
}

fn spelled_name(index: usize, base: u8) -> String {
    let mut n = index;
    let mut out = Vec::new();
    loop {
        out.push(base + (n % 26) as u8);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("letters are ascii")
}

impl RenameMap {
    /// Builds the maps by a deterministic left-to-right walk of the whole
    /// program: functions in definition order (parameters, then body), then
    /// the epilogue.
    pub fn build(program: &Program) -> RenameMap {
        let mut map = RenameMap::default();
        for (i, func) in program.functions.iter().enumerate() {
            map.functions.insert(func.name.clone(), upper_name(i));
        }
        let mut walker = VarWalker {
            map: &mut map,
            next: 0,
        };
        for func in &program.functions {
            for param in &func.params {
                walker.see(param);
            }
            walker.walk_stmts(&func.body);
        }
        walker.walk_stmts(&program.epilogue);
        map
    }

    fn rename_var(&self, name: &str) -> String {
        if let Some(f) = self.functions.get(name) {
            return f.clone();
        }
        if is_builtin(name) {
            return name.to_string();
        }
        self.variables
            .get(name)
            .cloned()
            .unwrap_or_else(|| name.to_string())
    }

    fn rename_callee(&self, name: &str) -> String {
        self.rename_var(name)
    }
}

struct VarWalker<'m> {
    map: &'m mut RenameMap,
    next: usize,
}

impl VarWalker<'_> {
    fn see(&mut self, name: &str) {
        if is_builtin(name)
            || self.map.functions.contains_key(name)
            || self.map.variables.contains_key(name)
        {
            return;
        }
        self.map
            .variables
            .insert(name.to_string(), lower_name(self.next));
        self.next += 1;
    }

    fn walk_stmts(&mut self, stmts: &[Stmt]) {
        for stmt in stmts {
            match &stmt.kind {
                StmtKind::Assign { target, value } => {
                    self.see(target);
                    self.walk_expr(value);
                }
                StmtKind::AugAssign { target, value, .. } => {
                    self.see(target);
                    self.walk_expr(value);
                }
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    self.walk_expr(cond);
                    self.walk_stmts(then_body);
                    self.walk_stmts(else_body);
                }
                StmtKind::ForRange {
                    var,
                    start,
                    stop,
                    step,
                    body,
                } => {
                    self.see(var);
                    if let Some(e) = start {
                        self.walk_expr(e);
                    }
                    self.walk_expr(stop);
                    if let Some(e) = step {
                        self.walk_expr(e);
                    }
                    self.walk_stmts(body);
                }
                StmtKind::Return { value } => {
                    if let Some(e) = value {
                        self.walk_expr(e);
                    }
                }
                StmtKind::Expr { value } => self.walk_expr(value),
            }
        }
    }

    fn walk_expr(&mut self, expr: &Expr) {
        match expr {
            Expr::Name(name) => self.see(name),
            Expr::Binary { left, right, .. }
            | Expr::Compare { left, right, .. }
            | Expr::Bool { left, right, .. } => {
                self.walk_expr(left);
                self.walk_expr(right);
            }
            Expr::Unary { operand, .. } => self.walk_expr(operand),
            Expr::Call { func, args } => {
                if !is_builtin(func) && !self.map.functions.contains_key(func) {
                    self.see(func);
                }
                for a in args {
                    self.walk_expr(a);
                }
            }
            Expr::Num(_) | Expr::Str(_) => {}
        }
    }
}

/// Normalized code text plus its content digest; equal text if and only if
/// equal digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub text: String,
    pub digest: String,
}

/// Canonicalizes a parsed program: rename, drop docstrings, relayout.
pub fn normalize(program: &Program) -> CanonicalForm {
    let map = RenameMap::build(program);
    let renamed = apply_rename(program, &map);
    let text = unparse(&renamed);
    let digest = hex_digest(&text);
    CanonicalForm { text, digest }
}

fn hex_digest(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

fn apply_rename(program: &Program, map: &RenameMap) -> Program {
    Program {
        functions: program
            .functions
            .iter()
            .map(|f| FunctionDef {
                name: map.functions.get(&f.name).cloned().unwrap_or_else(|| f.name.clone()),
                params: f.params.iter().map(|p| map.rename_var(p)).collect(),
                docstring: None,
                body: rename_stmts(&f.body, map),
                line: f.line,
            })
            .collect(),
        epilogue: rename_stmts(&program.epilogue, map),
        diagnostics: Vec::new(),
    }
}

fn rename_stmts(stmts: &[Stmt], map: &RenameMap) -> Vec<Stmt> {
    stmts
        .iter()
        .map(|stmt| {
            let kind = match &stmt.kind {
                StmtKind::Assign { target, value } => StmtKind::Assign {
                    target: map.rename_var(target),
                    value: rename_expr(value, map),
                },
                StmtKind::AugAssign { target, op, value } => StmtKind::AugAssign {
                    target: map.rename_var(target),
                    op: *op,
                    value: rename_expr(value, map),
                },
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                } => StmtKind::If {
                    cond: rename_expr(cond, map),
                    then_body: rename_stmts(then_body, map),
                    else_body: rename_stmts(else_body, map),
                },
                StmtKind::ForRange {
                    var,
                    start,
                    stop,
                    step,
                    body,
                } => StmtKind::ForRange {
                    var: map.rename_var(var),
                    start: start.as_ref().map(|e| rename_expr(e, map)),
                    stop: rename_expr(stop, map),
                    step: step.as_ref().map(|e| rename_expr(e, map)),
                    body: rename_stmts(body, map),
                },
                StmtKind::Return { value } => StmtKind::Return {
                    value: value.as_ref().map(|e| rename_expr(e, map)),
                },
                StmtKind::Expr { value } => StmtKind::Expr {
                    value: rename_expr(value, map),
                },
            };
            Stmt::new(stmt.line, kind)
        })
        .collect()
}

fn rename_expr(expr: &Expr, map: &RenameMap) -> Expr {
    match expr {
        Expr::Name(name) => Expr::Name(map.rename_var(name)),
        Expr::Num(n) => Expr::Num(n.clone()),
        Expr::Str(s) => Expr::Str(s.clone()),
        Expr::Binary { op, left, right } => Expr::Binary {
            op: *op,
            left: Box::new(rename_expr(left, map)),
            right: Box::new(rename_expr(right, map)),
        },
        Expr::Compare { op, left, right } => Expr::Compare {
            op: *op,
            left: Box::new(rename_expr(left, map)),
            right: Box::new(rename_expr(right, map)),
        },
        Expr::Bool { op, left, right } => Expr::Bool {
            op: *op,
            left: Box::new(rename_expr(left, map)),
            right: Box::new(rename_expr(right, map)),
        },
        Expr::Unary { op, operand } => Expr::Unary {
            op: *op,
            operand: Box::new(rename_expr(operand, map)),
        },
        Expr::Call { func, args } => Expr::Call {
            func: map.rename_callee(func),
            args: args.iter().map(|a| rename_expr(a, map)).collect(),
        },
    }
}

/// Canonicalizes a record's code block. `Err` carries the reason the
/// record must be quarantined.
pub fn canonical_form_of(record: &Record) -> Result<CanonicalForm, String> {
    let block = record.extract_code().map_err(|e| e.to_string())?;
    let program = parse(&block.text).map_err(|e| e.to_string())?;
    Ok(normalize(&program))
}

#[derive(Debug, Clone, Serialize)]
pub struct DedupGroupCounts {
    pub question_id: String,
    /// Records that entered dedup for this question (parseable ones).
    pub before: usize,
    /// Surviving records.
    pub after: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DedupReport {
    pub groups: Vec<DedupGroupCounts>,
    /// Records whose code could not be extracted or parsed; they are
    /// excluded from the output corpus.
    pub quarantined: usize,
}

/// Deduplicates per question: within each group, records with equal
/// canonical text collapse to the first occurrence. Survivors are recovered
/// with their original code; output is ordered by (question
/// first-appearance, original index).
pub fn dedup(corpus: &Corpus) -> (Corpus, DedupReport) {
    let groups = group_by_question(corpus);
    let results: Vec<(Vec<Record>, DedupGroupCounts, usize)> = groups
        .par_iter()
        .map(|group| {
            let mut quarantined = 0usize;
            let mut seen: HashMap<String, usize> = HashMap::new();
            let mut survivors: Vec<Record> = Vec::new();
            let mut considered = 0usize;
            for member in &group.members {
                let canon = match canonical_form_of(&member.record) {
                    Ok(c) => c,
                    Err(reason) => {
                        log::warn!("quarantined record `{}`: {}", member.record.id, reason);
                        quarantined += 1;
                        continue;
                    }
                };
                considered += 1;
                if seen.contains_key(&canon.text) {
                    continue;
                }
                seen.insert(canon.text, survivors.len());
                // Data recovery: splice the surviving record's own original
                // code back through the fence machinery; a byte-identity.
                let original = member
                    .record
                    .extract_code()
                    .expect("parseable record has a code block");
                let recovered = member
                    .record
                    .recover(&original.text)
                    .expect("recover with original code");
                survivors.push(recovered);
            }
            let counts = DedupGroupCounts {
                question_id: group.question_id.clone(),
                before: considered,
                after: survivors.len(),
            };
            (survivors, counts, quarantined)
        })
        .collect();

    let mut records = Vec::new();
    let mut report = DedupReport::default();
    for (survivors, counts, quarantined) in results {
        records.extend(survivors);
        report.groups.push(counts);
        report.quarantined += quarantined;
    }
    let deduped = Corpus {
        records,
        stage: Stage::Deduped,
        header: None,
    };
    (deduped, report)
}

/// A point on the k-N curve: capping every question at `k` paths leaves
/// `n` records overall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KNPoint {
    pub k: KCap,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KCap {
    Finite(usize),
    Infinite,
}

impl Serialize for KCap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            KCap::Finite(k) => serializer.serialize_u64(*k as u64),
            KCap::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl std::fmt::Display for KCap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KCap::Finite(k) => write!(f, "{}", k),
            KCap::Infinite => write!(f, "inf"),
        }
    }
}

/// N(k) = sum over questions of min(paths, k); always includes k = inf.
pub fn kn_curve(corpus: &Corpus, ks: &[usize]) -> Vec<KNPoint> {
    let sizes: Vec<usize> = group_by_question(corpus)
        .iter()
        .map(|g| g.members.len())
        .collect();
    let mut points: Vec<KNPoint> = ks
        .iter()
        .map(|&k| KNPoint {
            k: KCap::Finite(k),
            n: sizes.iter().map(|&s| s.min(k)).sum(),
        })
        .collect();
    points.push(KNPoint {
        k: KCap::Infinite,
        n: sizes.iter().sum(),
    });
    points
}

/// Renders the curve as `k,N` CSV rows.
pub fn kn_curve_csv(points: &[KNPoint]) -> String {
    let mut out = String::from("k,N\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.k, p.n));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PathStats {
    /// (paths per question, number of questions), ascending by path count.
    pub histogram: Vec<(usize, usize)>,
    pub median: f64,
    pub mean: f64,
    pub questions: usize,
    pub records: usize,
}

/// Exact path-count statistics over question groups.
pub fn path_stats(corpus: &Corpus) -> PathStats {
    let mut sizes: Vec<usize> = group_by_question(corpus)
        .iter()
        .map(|g| g.members.len())
        .collect();
    sizes.sort_unstable();
    let questions = sizes.len();
    let records: usize = sizes.iter().sum();
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for s in &sizes {
        *histogram.entry(*s).or_insert(0) += 1;
    }
    let median = if sizes.is_empty() {
        0.0
    } else if sizes.len() % 2 == 1 {
        sizes[sizes.len() / 2] as f64
    } else {
        (sizes[sizes.len() / 2 - 1] + sizes[sizes.len() / 2]) as f64 / 2.0
    };
    let mean = if sizes.is_empty() {
        0.0
    } else {
        records as f64 / questions as f64
    };
    PathStats {
        histogram: histogram.into_iter().collect(),
        median,
        mean,
        questions,
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AnswerField, Record};
    use crate::exec::{run_source, AnswerValue, DEFAULT_BUDGET};

    fn record(id: &str, question: &str, code: &str) -> Record {
        Record {
            id: id.to_string(),
            question: question.to_string(),
            completion: format!("```python\n{}\n```", code),
            source: "test".to_string(),
            answer: Some(AnswerField::Number(1.into())),
        }
    }

    #[test]
    fn alpha_equivalent_programs_share_a_canonical_form() {
        let a = parse("def solution(): x = 2; y = x / 2; return x + y").unwrap();
        let b = parse("def calc(): blue = 2; white = blue / 2; return blue + white").unwrap();
        assert_eq!(normalize(&a), normalize(&b));
    }

    #[test]
    fn builtins_are_never_renamed() {
        let p = parse("def f(a, b):\n    return min(a, b) + max(a, b)").unwrap();
        let canon = normalize(&p);
        assert!(canon.text.contains("min(a, b)"));
        assert!(canon.text.contains("max(a, b)"));
    }

    #[test]
    fn robe_program_normalizes_to_the_expected_golden_text() {
        // Hand-applied rules: function -> A; variables in first-occurrence
        // order -> a, b, c, d; docstring dropped; layout canonicalized.
        let src = "def solution():\n    \"\"\"A robe takes 2287720 bolts of blue fiber and half that much white fiber.  How many bolts in total does it take?\"\"\"\n    blue_fiber = 2287720\n    white_fiber = blue_fiber / 2\n    total_fiber = blue_fiber + white_fiber\n    result = total_fiber\n    return result";
        let canon = normalize(&parse(src).unwrap());
        let expected = "def A():\n    a = 2287720\n    b = a / 2\n    c = a + b\n    d = c\n    return d";
        assert_eq!(canon.text, expected);
        // Value semantics preserved under normalization.
        let original = run_source(src, DEFAULT_BUDGET);
        let normalized = run_source(&canon.text, DEFAULT_BUDGET);
        assert_eq!(original.answer, Some(AnswerValue::Dec(3431580.0)));
        assert_eq!(normalized.answer, original.answer);
    }

    #[test]
    fn docstrings_do_not_affect_the_key() {
        let with = parse("def f():\n    \"\"\"Question text here.\"\"\"\n    return 1").unwrap();
        let without = parse("def f():\n    return 1").unwrap();
        assert_eq!(normalize(&with), normalize(&without));
    }

    #[test]
    fn name_generation_extends_past_z() {
        assert_eq!(lower_name(0), "a");
        assert_eq!(lower_name(25), "z");
        assert_eq!(lower_name(26), "aa");
        assert_eq!(lower_name(27), "ab");
        assert_eq!(lower_name(51), "az");
        assert_eq!(lower_name(52), "ba");
        assert_eq!(upper_name(2), "C");
        assert_eq!(upper_name(28), "AC");
    }

    #[test]
    fn epilogue_names_participate_in_renaming() {
        let p = parse("def pie():\n    return 26\n\ntaken = pie()\nprint(taken)").unwrap();
        let canon = normalize(&p);
        assert_eq!(canon.text, "def A():\n    return 26\n\na = A()\nprint(a)");
    }

    #[test]
    fn dedup_collapses_renamed_duplicates_within_a_question() {
        let corpus = Corpus::new(
            vec![
                record("a", "q1", "def f():\n    x = 2\n    return x"),
                record("b", "q1", "def g():\n    y = 2\n    return y"),
                record("c", "q1", "def h():\n    z = 3\n    return z"),
            ],
            Stage::Initial,
        );
        let (deduped, report) = dedup(&corpus);
        assert_eq!(deduped.len(), 2);
        // First occurrence wins.
        assert_eq!(deduped.records[0].id, "a");
        assert_eq!(deduped.records[1].id, "c");
        // Survivors keep their original code byte-for-byte.
        assert_eq!(deduped.records[0], corpus.records[0]);
        assert_eq!(report.groups[0].before, 3);
        assert_eq!(report.groups[0].after, 2);
        assert_eq!(report.quarantined, 0);
    }

    #[test]
    fn dedup_is_idempotent() {
        let corpus = Corpus::new(
            vec![
                record("a", "q1", "def f():\n    x = 2\n    return x"),
                record("b", "q1", "def g():\n    y = 2\n    return y"),
                record("c", "q2", "def h():\n    z = 3\n    return z"),
            ],
            Stage::Initial,
        );
        let (once, _) = dedup(&corpus);
        let (twice, _) = dedup(&once);
        assert_eq!(once.records, twice.records);
    }

    #[test]
    fn identical_code_across_questions_is_kept() {
        let corpus = Corpus::new(
            vec![
                record("a", "q1", "def f():\n    return 2"),
                record("b", "q2", "def f():\n    return 2"),
            ],
            Stage::Initial,
        );
        let (deduped, _) = dedup(&corpus);
        assert_eq!(deduped.len(), 2);
    }

    #[test]
    fn unparseable_records_are_quarantined_not_fatal() {
        let corpus = Corpus::new(
            vec![
                record("a", "q1", "def f():\n    return 2"),
                record("b", "q1", "import os"),
                Record {
                    id: "c".into(),
                    question: "q1".into(),
                    completion: "no fence at all".into(),
                    source: "test".into(),
                    answer: None,
                },
            ],
            Stage::Initial,
        );
        let (deduped, report) = dedup(&corpus);
        assert_eq!(deduped.len(), 1);
        assert_eq!(report.quarantined, 2);
    }

    #[test]
    fn kn_curve_matches_the_min_sum_formula() {
        let corpus = Corpus::new(
            vec![
                record("a", "q1", "def f():\n    return 1"),
                record("b", "q1", "def f():\n    return 2"),
                record("c", "q1", "def f():\n    return 3"),
                record("d", "q2", "def f():\n    return 4"),
            ],
            Stage::Initial,
        );
        let points = kn_curve(&corpus, &[1, 2, 9]);
        assert_eq!(points[0], KNPoint { k: KCap::Finite(1), n: 2 });
        assert_eq!(points[1], KNPoint { k: KCap::Finite(2), n: 3 });
        assert_eq!(points[2], KNPoint { k: KCap::Finite(9), n: 4 });
        assert_eq!(points[3], KNPoint { k: KCap::Infinite, n: 4 });
        assert_eq!(
            kn_curve_csv(&points),
            "k,N\n1,2\n2,3\n9,4\ninf,4\n"
        );
    }

    #[test]
    fn path_stats_are_exact() {
        let mut records = Vec::new();
        for (q, n) in [("q1", 1), ("q2", 7), ("q3", 13)] {
            for i in 0..n {
                records.push(record(&format!("{}-{}", q, i), q, "def f():\n    return 1"));
            }
        }
        let stats = path_stats(&Corpus::new(records, Stage::Initial));
        assert_eq!(stats.median, 7.0);
        assert_eq!(stats.mean, 7.0);
        assert_eq!(stats.histogram, vec![(1, 1), (7, 1), (13, 1)]);
    }

    #[test]
    fn single_43_path_group_histogram() {
        let records: Vec<Record> = (0..43)
            .map(|i| record(&format!("r{}", i), "tina", "def f():\n    return 1"))
            .collect();
        let stats = path_stats(&Corpus::new(records, Stage::Initial));
        assert_eq!(stats.histogram, vec![(43, 1)]);
        assert_eq!(stats.median, 43.0);
    }
}
