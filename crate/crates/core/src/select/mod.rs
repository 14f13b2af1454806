//! Subset selection: random-k paths per question, cluster-as-a-filter
//! selection, distinct-solution census, and corpus mixing.

pub mod embed;
pub mod kmeans;
pub mod mix;

pub use embed::{embed_texts, tfidf_rows, ClusterConfig, Embedding};
pub use kmeans::{kmeans, KMeansResult};
pub use mix::{mix, mix_corpora, MixError, MixReport, MixSpec};

use crate::canon::canonical_form_of;
use crate::corpus::{group_by_question, Corpus, QuestionGroup, Record, Stage};
use crate::seeding::{derive_seed, group_rng};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Cluster,
}

/// How many paths to keep per question and how to pick them. `k: None`
/// means no cap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub k: Option<usize>,
    pub strategy: Strategy,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SelectionReport {
    pub questions: Vec<QuestionSelection>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuestionSelection {
    pub question_id: String,
    pub total: usize,
    pub kept: usize,
    /// Distinct canonical classes in the whole group.
    pub census_total: usize,
    /// Distinct canonical classes among the kept paths.
    pub census_kept: usize,
    /// k-means convergence within the iteration cap (cluster strategy).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

/// Distinct canonical-class count of a group. Unparseable members carry no
/// canonical form and do not count.
pub fn census(group: &QuestionGroup) -> usize {
    let mut digests: HashSet<String> = HashSet::new();
    for member in &group.members {
        if let Ok(c) = canonical_form_of(&member.record) {
            digests.insert(c.digest);
        }
    }
    digests.len()
}

/// Dispatches on the spec's strategy.
pub fn select(
    corpus: &Corpus,
    spec: &SubsetSpec,
    cfg: &ClusterConfig,
) -> (Corpus, SelectionReport) {
    match spec.strategy {
        Strategy::Random => select_random(corpus, spec),
        Strategy::Cluster => select_cluster(corpus, spec, cfg),
    }
}

/// Uniform selection of min(k, group size) paths per question, without
/// replacement, deterministic under the seed. Output keeps (question
/// order, original path order).
pub fn select_random(corpus: &Corpus, spec: &SubsetSpec) -> (Corpus, SelectionReport) {
    let groups = group_by_question(corpus);
    let picked: Vec<(Vec<Record>, QuestionSelection)> = groups
        .par_iter()
        .map(|group| {
            let total = group.members.len();
            let keep: Vec<usize> = match spec.k {
                None => (0..total).collect(),
                Some(k) if k >= total => (0..total).collect(),
                Some(k) => {
                    let mut rng = group_rng(spec.seed, &group.question_id);
                    choose_indices(total, k, &mut rng)
                }
            };
            let records: Vec<Record> = keep
                .iter()
                .map(|&i| group.members[i].record.clone())
                .collect();
            let kept_group = subgroup(group, &keep);
            let entry = QuestionSelection {
                question_id: group.question_id.clone(),
                total,
                kept: records.len(),
                census_total: census(group),
                census_kept: census(&kept_group),
                converged: None,
                degenerate: false,
            };
            (records, entry)
        })
        .collect();
    assemble(picked)
}

/// Cluster-as-a-filter: k-means over embedded canonical code, keeping the
/// member nearest each centroid. Groups at or under k keep everything.
pub fn select_cluster(
    corpus: &Corpus,
    spec: &SubsetSpec,
    cfg: &ClusterConfig,
) -> (Corpus, SelectionReport) {
    let groups = group_by_question(corpus);
    let picked: Vec<(Vec<Record>, QuestionSelection)> = groups
        .par_iter()
        .map(|group| {
            let total = group.members.len();
            let k = spec.k.unwrap_or(total);
            let mut converged = None;
            let mut degenerate = false;
            let keep: Vec<usize> = if k >= total {
                (0..total).collect()
            } else {
                // Cluster over parseable members only; the rest are
                // quarantine material, not selection candidates.
                let mut parseable: Vec<usize> = Vec::new();
                let mut texts: Vec<String> = Vec::new();
                for (i, member) in group.members.iter().enumerate() {
                    if let Ok(c) = canonical_form_of(&member.record) {
                        parseable.push(i);
                        texts.push(c.text);
                    }
                }
                if parseable.len() <= k {
                    parseable
                } else {
                    let embedding = embed_texts(&texts, cfg);
                    if embedding.degenerate {
                        degenerate = true;
                        parseable[..k].to_vec()
                    } else {
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                            spec.seed ^ cfg.seed,
                            &[u64::from_str_radix(&group.question_id, 16).unwrap_or(0)],
                        ));
                        let result = kmeans(&embedding.rows, k, cfg.kmeans_iters, &mut rng);
                        converged = Some(result.converged);
                        let reps =
                            cluster_representatives(&embedding.rows, &result, k);
                        let mut keep: Vec<usize> =
                            reps.into_iter().map(|p| parseable[p]).collect();
                        keep.sort_unstable();
                        keep
                    }
                }
            };
            let records: Vec<Record> = keep
                .iter()
                .map(|&i| group.members[i].record.clone())
                .collect();
            let kept_group = subgroup(group, &keep);
            let entry = QuestionSelection {
                question_id: group.question_id.clone(),
                total,
                kept: records.len(),
                census_total: census(group),
                census_kept: census(&kept_group),
                converged,
                degenerate,
            };
            (records, entry)
        })
        .collect();
    assemble(picked)
}

/// One representative per cluster: the member nearest its centroid, ties by
/// lowest index; clusters claim members in index order so representatives
/// are distinct, and any shortfall is filled with the lowest unchosen rows.
fn cluster_representatives(
    rows: &[Vec<f64>],
    result: &KMeansResult,
    k: usize,
) -> Vec<usize> {
    let mut claimed: HashSet<usize> = HashSet::new();
    let mut reps: Vec<usize> = Vec::with_capacity(k);
    for c in 0..k {
        let mut candidates: Vec<usize> = (0..rows.len())
            .filter(|&i| result.assignments[i] == c && !claimed.contains(&i))
            .collect();
        candidates.sort_by(|&a, &b| {
            let da = embed::squared_distance(&rows[a], &result.centroids[c]);
            let db = embed::squared_distance(&rows[b], &result.centroids[c]);
            da.partial_cmp(&db)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        if let Some(&best) = candidates.first() {
            claimed.insert(best);
            reps.push(best);
        }
    }
    let mut fill = 0usize;
    while reps.len() < k && fill < rows.len() {
        if claimed.insert(fill) {
            reps.push(fill);
        }
        fill += 1;
    }
    reps
}

fn subgroup(group: &QuestionGroup, keep: &[usize]) -> QuestionGroup {
    QuestionGroup {
        question_id: group.question_id.clone(),
        question: group.question.clone(),
        members: keep.iter().map(|&i| group.members[i].clone()).collect(),
    }
}

fn assemble(picked: Vec<(Vec<Record>, QuestionSelection)>) -> (Corpus, SelectionReport) {
    let mut records = Vec::new();
    let mut report = SelectionReport::default();
    for (recs, entry) in picked {
        records.extend(recs);
        report.questions.push(entry);
    }
    (Corpus::new(records, Stage::Selected), report)
}

/// Partial Fisher-Yates: k distinct indices from 0..n, returned sorted.
fn choose_indices(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        indices.swap(i, j);
    }
    let mut selected = indices[..k].to_vec();
    selected.sort_unstable();
    selected
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synth::{synthesize_corpus, DupSpec, SynthSpec};
    use crate::corpus::{AnswerField, Record};

    fn record(id: &str, question: &str, code: &str) -> Record {
        Record {
            id: id.to_string(),
            question: question.to_string(),
            completion: format!("```python\n{}\n```", code),
            source: "test".to_string(),
            answer: Some(AnswerField::Number(1.into())),
        }
    }

    fn small_corpus() -> Corpus {
        Corpus::new(
            vec![
                record("a", "q1", "def f():\n    return 1"),
                record("b", "q1", "def f():\n    return 2"),
                record("c", "q1", "def f():\n    return 3"),
                record("d", "q2", "def f():\n    return 4"),
            ],
            Stage::Initial,
        )
    }

    #[test]
    fn k_larger_than_group_keeps_everything() {
        let spec = SubsetSpec {
            k: Some(9),
            strategy: Strategy::Random,
            seed: 0,
        };
        let (out, report) = select_random(&small_corpus(), &spec);
        assert_eq!(out.len(), 4);
        assert_eq!(report.questions[0].kept, 3);
    }

    #[test]
    fn infinite_k_is_identity() {
        let spec = SubsetSpec {
            k: None,
            strategy: Strategy::Random,
            seed: 0,
        };
        let (out, _) = select_random(&small_corpus(), &spec);
        assert_eq!(out.records, small_corpus().records);
    }

    #[test]
    fn random_selection_is_reproducible_and_bounded() {
        let (corpus, _) = synthesize_corpus(&SynthSpec {
            questions: 3,
            distinct: vec![43],
            duplicates: DupSpec::Uniform(1),
            seed: 5,
        });
        let spec = SubsetSpec {
            k: Some(9),
            strategy: Strategy::Random,
            seed: 17,
        };
        let (a, _) = select_random(&corpus, &spec);
        let (b, _) = select_random(&corpus, &spec);
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        let groups = group_by_question(&a);
        assert!(groups.iter().all(|g| g.members.len() == 9));
        // Selection preserves original path order within groups.
        for g in &groups {
            let indices: Vec<usize> = g.members.iter().map(|m| m.index).collect();
            let mut sorted = indices.clone();
            sorted.sort_unstable();
            assert_eq!(indices, sorted);
        }
        // A different seed picks a different subset (43 choose 9 is huge).
        let other = SubsetSpec {
            seed: 18,
            ..spec.clone()
        };
        let (c, _) = select_random(&corpus, &other);
        assert_ne!(a.to_jsonl(), c.to_jsonl());
    }

    #[test]
    fn output_never_fabricates_records() {
        let (corpus, _) = synthesize_corpus(&SynthSpec {
            questions: 2,
            distinct: vec![6],
            duplicates: DupSpec::Uniform(2),
            seed: 1,
        });
        let ids: HashSet<&str> = corpus.records.iter().map(|r| r.id.as_str()).collect();
        for spec in [
            SubsetSpec {
                k: Some(3),
                strategy: Strategy::Random,
                seed: 2,
            },
            SubsetSpec {
                k: Some(3),
                strategy: Strategy::Cluster,
                seed: 2,
            },
        ] {
            let (out, _) = select(&corpus, &spec, &ClusterConfig::default());
            assert!(out.records.iter().all(|r| ids.contains(r.id.as_str())));
            for g in group_by_question(&out) {
                assert!(g.members.len() <= 3);
            }
        }
    }

    #[test]
    fn census_counts_distinct_classes() {
        let corpus = Corpus::new(
            vec![
                record("a", "q", "def f():\n    x = 1\n    return x"),
                record("b", "q", "def g():\n    y = 1\n    return y"),
                record("c", "q", "def f():\n    return 2"),
            ],
            Stage::Initial,
        );
        let groups = group_by_question(&corpus);
        assert_eq!(census(&groups[0]), 2);

        let empty = QuestionGroup {
            question_id: "0".into(),
            question: "q".into(),
            members: vec![],
        };
        assert_eq!(census(&empty), 0);
    }

    #[test]
    fn cluster_with_exactly_k_distinct_codes_keeps_all() {
        let (corpus, _) = synthesize_corpus(&SynthSpec {
            questions: 1,
            distinct: vec![4],
            duplicates: DupSpec::Uniform(1),
            seed: 3,
        });
        let spec = SubsetSpec {
            k: Some(4),
            strategy: Strategy::Cluster,
            seed: 0,
        };
        let (out, _) = select_cluster(&corpus, &spec, &ClusterConfig::default());
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn cluster_separates_a_duplicate_blob_from_a_singleton() {
        // k-1 copies of one class plus 1 of another, k=2: one survivor from
        // each class. Verified against brute force over all 2-partitions.
        let (corpus, _) = synthesize_corpus(&SynthSpec {
            questions: 1,
            distinct: vec![2],
            duplicates: DupSpec::PerClass(vec![5, 1]),
            seed: 9,
        });
        assert_eq!(corpus.len(), 6);
        let spec = SubsetSpec {
            k: Some(2),
            strategy: Strategy::Cluster,
            seed: 4,
        };
        let (out, report) = select_cluster(&corpus, &spec, &ClusterConfig::default());
        assert_eq!(out.len(), 2);
        assert_eq!(report.questions[0].census_kept, 2, "one from each class");

        // Brute-force oracle: the within-cluster-distance-minimizing
        // 2-partition puts the five duplicates together, so the optimal
        // representatives span both classes.
        let groups = group_by_question(&corpus);
        let texts: Vec<String> = groups[0]
            .members
            .iter()
            .map(|m| canonical_form_of(&m.record).unwrap().text)
            .collect();
        let emb = embed_texts(&texts, &ClusterConfig::default());
        let n = emb.rows.len();
        let mut best_cost = f64::INFINITY;
        let mut best_mask = 0u32;
        for mask in 1..(1u32 << n) - 1 {
            let cost = partition_cost(&emb.rows, mask, n);
            if cost < best_cost {
                best_cost = cost;
                best_mask = mask;
            }
        }
        let side_a: Vec<usize> = (0..n).filter(|i| best_mask & (1 << i) != 0).collect();
        let side_b: Vec<usize> = (0..n).filter(|i| best_mask & (1 << i) == 0).collect();
        // One side is exactly the singleton class (index 5).
        assert!(
            side_a == vec![5] || side_b == vec![5],
            "optimal partition isolates the singleton, got {:?} | {:?}",
            side_a,
            side_b
        );
    }

    fn partition_cost(rows: &[Vec<f64>], mask: u32, n: usize) -> f64 {
        let mut cost = 0.0;
        for side in [true, false] {
            let members: Vec<usize> = (0..n)
                .filter(|i| (mask & (1 << i) != 0) == side)
                .collect();
            if members.is_empty() {
                return f64::INFINITY;
            }
            let dims = rows[0].len();
            let mut mean = vec![0.0; dims];
            for &m in &members {
                for (s, x) in mean.iter_mut().zip(&rows[m]) {
                    *s += x;
                }
            }
            for s in mean.iter_mut() {
                *s /= members.len() as f64;
            }
            for &m in &members {
                cost += embed::squared_distance(&rows[m], &mean);
            }
        }
        cost
    }

    #[test]
    fn degenerate_groups_short_circuit_to_lowest_indices() {
        let corpus = Corpus::new(
            (0..5)
                .map(|i| record(&format!("r{}", i), "q", "def f():\n    return 1"))
                .collect(),
            Stage::Initial,
        );
        let spec = SubsetSpec {
            k: Some(2),
            strategy: Strategy::Cluster,
            seed: 0,
        };
        let (out, report) = select_cluster(&corpus, &spec, &ClusterConfig::default());
        assert_eq!(out.len(), 2);
        assert!(report.questions[0].degenerate);
        assert_eq!(out.records[0].id, "r0");
        assert_eq!(out.records[1].id, "r1");
    }
}
