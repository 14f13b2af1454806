//! Desk-scale synthetic corpus fabrication.
//!
//! Stands in for large-scale sampled reasoning paths: each question gets a
//! requested number of semantically distinct solution programs (different
//! canonical forms, same answer), each replicated under random consistent
//! renamings plus whitespace noise. The true class count per question goes
//! into a sidecar manifest, which oracle tests compare against dedup
//! output.

use super::{question_id, AnswerField, Corpus, Record, Stage};
use crate::seeding::sub_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub questions: usize,
    /// Distinct solution classes per question, cycled over questions.
    pub distinct: Vec<usize>,
    pub duplicates: DupSpec,
    pub seed: u64,
}

/// Replication factor per solution class.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DupSpec {
    /// Same duplicate count for every class.
    Uniform(usize),
    /// Per-class counts, cycled over class index; lets tests build
    /// imbalanced groups (one dominant class, several rare ones).
    PerClass(Vec<usize>),
}

impl DupSpec {
    fn for_class(&self, class_idx: usize) -> usize {
        match self {
            DupSpec::Uniform(n) => *n,
            DupSpec::PerClass(counts) => counts[class_idx % counts.len()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub question_id: String,
    pub distinct_classes: usize,
}

pub fn manifest_to_jsonl(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("manifest entry serializes"));
        out.push('\n');
    }
    out
}

const NAMES: &[&str] = &[
    "Maya", "Liam", "Aisha", "Tom", "Elena", "Ravi", "Sofia", "Kenji", "Nora", "Pablo",
];
const ITEMS: &[&str] = &[
    "marbles", "stickers", "apples", "coins", "beads", "cards", "shells", "stamps", "pebbles",
    "buttons",
];

/// Letter tag making each question text unique without introducing digits.
fn letter_tag(mut n: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (n % 26) as u8);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii letters")
}

/// Fabricates the corpus and its class-count manifest.
pub fn synthesize_corpus(spec: &SynthSpec) -> (Corpus, Vec<ManifestEntry>) {
    assert!(spec.questions >= 1, "questions must be >= 1");
    assert!(
        !spec.distinct.is_empty() && spec.distinct.iter().all(|&d| d >= 1),
        "distinct class counts must be >= 1"
    );
    let mut records = Vec::new();
    let mut manifest = Vec::new();
    for qi in 0..spec.questions {
        let mut qrng = sub_rng(spec.seed, &[0x51, qi as u64]);
        let n1: i64 = qrng.gen_range(20..=80);
        let n2: i64 = qrng.gen_range(2..=9);
        let n3: i64 = qrng.gen_range(10..=19);
        let name = NAMES[qi % NAMES.len()];
        let item = ITEMS[(qi / NAMES.len()) % ITEMS.len()];
        let question = format!(
            "On shelf {tag}, {name} keeps {n1} {item}. She adds {n2} boxes with {n3} {item} in each box. How many {item} does she keep now?",
            tag = letter_tag(qi),
        );
        let answer = n1 + n2 * n3;
        let classes = spec.distinct[qi % spec.distinct.len()];
        for ci in 0..classes {
            let dups = spec.duplicates.for_class(ci).max(1);
            for di in 0..dups {
                let mut drng = sub_rng(spec.seed, &[0xd0, qi as u64, ci as u64, di as u64]);
                let code = render_class(ci, (n1, n2, n3), &question, di > 0, &mut drng);
                let completion =
                    format!("```python\n{}\n```\n```output\n{}\n```", code, answer);
                records.push(Record {
                    id: format!("q{:04}-c{:02}-d{:02}", qi, ci, di),
                    question: question.clone(),
                    completion,
                    source: "synthetic".to_string(),
                    answer: Some(AnswerField::Number(answer.into())),
                });
            }
        }
        manifest.push(ManifestEntry {
            question_id: question_id(&question),
            distinct_classes: classes,
        });
    }
    (Corpus::new(records, Stage::Initial), manifest)
}

struct ClassNames {
    func: String,
    start: String,
    boxes: String,
    per_box: String,
    added: String,
    capped: String,
    total: String,
    loop_var: String,
    result: String,
}

impl ClassNames {
    fn canonical() -> Self {
        ClassNames {
            func: "solution".into(),
            start: "start".into(),
            boxes: "boxes".into(),
            per_box: "per_box".into(),
            added: "added".into(),
            capped: "capped".into(),
            total: "total".into(),
            loop_var: "i".into(),
            result: "result".into(),
        }
    }

    /// Fresh injective renaming of every identifier.
    fn randomized(rng: &mut ChaCha8Rng) -> Self {
        const STEMS: &[&str] = &[
            "count", "value", "qty", "amount", "tally", "num", "acc", "level", "stock", "pile",
            "held", "gain", "bulk", "load", "mass",
        ];
        let mut used: HashSet<String> = HashSet::new();
        let mut fresh = |rng: &mut ChaCha8Rng| -> String {
            loop {
                let stem = STEMS[rng.gen_range(0..STEMS.len())];
                let suffix: u32 = rng.gen_range(0..10_000);
                let name = format!("{}_{}", stem, suffix);
                if used.insert(name.clone()) {
                    return name;
                }
            }
        };
        ClassNames {
            func: fresh(rng),
            start: fresh(rng),
            boxes: fresh(rng),
            per_box: fresh(rng),
            added: fresh(rng),
            capped: fresh(rng),
            total: fresh(rng),
            loop_var: fresh(rng),
            result: fresh(rng),
        }
    }
}

/// Renders solution class `class_idx`. Classes differ structurally (shape
/// family plus a padding chain) but all evaluate to n1 + n2 * n3.
fn render_class(
    class_idx: usize,
    (n1, n2, n3): (i64, i64, i64),
    question: &str,
    noisy: bool,
    rng: &mut ChaCha8Rng,
) -> String {
    let names = if noisy {
        ClassNames::randomized(rng)
    } else {
        ClassNames::canonical()
    };
    let indent_width = if noisy { *pick(rng, &[2, 3, 4, 6, 8]) } else { 4 };
    let ind = " ".repeat(indent_width);
    let inner = " ".repeat(indent_width * 2);
    let eq = if noisy {
        *pick(rng, &[" = ", "=", "  =  ", " =  "])
    } else {
        " = "
    };
    let sp = if noisy { *pick(rng, &[" ", "", "  "]) } else { " " };

    let shape = class_idx % 3;
    let pads = class_idx / 3;

    let mut body: Vec<String> = Vec::new();
    match shape {
        0 => {
            body.push(format!("{}{}{}", names.start, eq, n1));
            body.push(format!("{}{}{}", names.boxes, eq, n2));
            body.push(format!("{}{}{}", names.per_box, eq, n3));
            body.push(format!(
                "{}{}{}{}*{}{}",
                names.added, eq, names.boxes, sp, sp, names.per_box
            ));
            body.push(format!(
                "{}{}{}{}+{}{}",
                names.total, eq, names.start, sp, sp, names.added
            ));
        }
        1 => {
            body.push(format!("{}{}{}", names.total, eq, n1));
            body.push(format!("{}{}{}", names.boxes, eq, n2));
            body.push(format!("{}{}{}", names.per_box, eq, n3));
            body.push(format!(
                "for {} in range({}):",
                names.loop_var, names.boxes
            ));
            body.push(format!(
                "@@{}{}{}{}+{}{}",
                names.total, eq, names.total, sp, sp, names.per_box
            ));
        }
        _ => {
            body.push(format!("{}{}{}", names.start, eq, n1));
            body.push(format!("{}{}{}", names.boxes, eq, n2));
            body.push(format!("{}{}{}", names.per_box, eq, n3));
            body.push(format!(
                "{}{}min({} * {}, {} * {} + 1)",
                names.added, eq, names.boxes, names.per_box, names.boxes, names.per_box
            ));
            body.push(format!(
                "{}{}max({}, {} - 1)",
                names.capped, eq, names.added, names.added
            ));
            body.push(format!(
                "{}{}{}{}+{}{}",
                names.total, eq, names.start, sp, sp, names.capped
            ));
        }
    }
    for _ in 0..pads {
        body.push(format!(
            "{}{}{}{}+{}0",
            names.total, eq, names.total, sp, sp
        ));
    }
    body.push(format!("return {}", names.total));

    let mut lines: Vec<String> = Vec::new();
    lines.push(format!("def {}():", names.func));
    lines.push(format!("{}\"\"\"{}\"\"\"", ind, question));
    for stmt in body {
        if noisy && rng.gen_bool(0.2) {
            lines.push(String::new());
        }
        if noisy && rng.gen_bool(0.1) {
            lines.push(format!("{}# step", ind));
        }
        match stmt.strip_prefix("@@") {
            Some(inner_stmt) => lines.push(format!("{}{}", inner, inner_stmt)),
            None => lines.push(format!("{}{}", ind, stmt)),
        }
    }
    lines.push(String::new());
    lines.push(format!("{}{}{}()", names.result, eq, names.func));
    lines.push(format!("print({})", names.result));
    lines.join("\n")
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, options: &'a [T]) -> &'a T {
    &options[rng.gen_range(0..options.len())]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{canonical_form_of, dedup};
    use crate::exec::{ground_truth, grade, run_record, GradePolicy, DEFAULT_BUDGET};

    #[test]
    fn record_counts_follow_the_spec_arithmetic() {
        let (corpus, manifest) = synthesize_corpus(&SynthSpec {
            questions: 1,
            distinct: vec![2],
            duplicates: DupSpec::Uniform(3),
            seed: 7,
        });
        assert_eq!(corpus.len(), 6);
        assert_eq!(manifest.len(), 1);
        assert_eq!(manifest[0].distinct_classes, 2);

        let (corpus, manifest) = synthesize_corpus(&SynthSpec {
            questions: 2,
            distinct: vec![1, 3],
            duplicates: DupSpec::Uniform(2),
            seed: 7,
        });
        assert_eq!(corpus.len(), 8);
        assert_eq!(manifest.len(), 2);
    }

    #[test]
    fn every_record_parses_and_computes_the_stored_answer() {
        let (corpus, _) = synthesize_corpus(&SynthSpec {
            questions: 4,
            distinct: vec![5, 7],
            duplicates: DupSpec::Uniform(3),
            seed: 42,
        });
        for record in &corpus.records {
            assert!(record.fence_report().conforms(), "record {}", record.id);
            let outcome = run_record(record, DEFAULT_BUDGET);
            assert!(outcome.is_ok(), "record {}: {:?}", record.id, outcome.message);
            let truth = ground_truth(record).unwrap();
            assert!(
                grade(outcome.answer.as_ref().unwrap(), &truth, &GradePolicy::exact()),
                "record {} answer mismatch",
                record.id
            );
        }
    }

    #[test]
    fn duplicates_share_a_class_and_classes_stay_distinct() {
        let (corpus, _) = synthesize_corpus(&SynthSpec {
            questions: 2,
            distinct: vec![6],
            duplicates: DupSpec::Uniform(4),
            seed: 3,
        });
        for record in &corpus.records {
            let class_of_id = &record.id[..record.id.rfind("-d").unwrap()];
            for other in &corpus.records {
                if other.question != record.question {
                    continue;
                }
                let other_class = &other.id[..other.id.rfind("-d").unwrap()];
                let same_canon = canonical_form_of(record).unwrap()
                    == canonical_form_of(other).unwrap();
                assert_eq!(
                    same_canon,
                    class_of_id == other_class,
                    "canonical collision between {} and {}",
                    record.id,
                    other.id
                );
            }
        }
    }

    #[test]
    fn dedup_recovers_exactly_the_manifest_class_counts() {
        let (corpus, manifest) = synthesize_corpus(&SynthSpec {
            questions: 5,
            distinct: vec![2, 4, 1],
            duplicates: DupSpec::PerClass(vec![5, 1, 2]),
            seed: 11,
        });
        let (deduped, report) = dedup(&corpus);
        assert_eq!(report.quarantined, 0);
        let expected_total: usize = manifest.iter().map(|m| m.distinct_classes).sum();
        assert_eq!(deduped.len(), expected_total);
        for entry in &manifest {
            let group = report
                .groups
                .iter()
                .find(|g| g.question_id == entry.question_id)
                .expect("group present");
            assert_eq!(group.after, entry.distinct_classes);
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let spec = SynthSpec {
            questions: 3,
            distinct: vec![3],
            duplicates: DupSpec::Uniform(2),
            seed: 99,
        };
        let (a, _) = synthesize_corpus(&spec);
        let (b, _) = synthesize_corpus(&spec);
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }
}
