//! Mixing curated subsets from multiple sources into one training corpus.

use crate::corpus::{Corpus, CorpusError, Stage};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashSet;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MixError {
    #[error("duplicate source tag `{0}`")]
    DuplicateTag(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone)]
pub struct MixSpec {
    /// (corpus path, source tag) pairs; tags must be unique.
    pub inputs: Vec<(PathBuf, String)>,
    pub shuffle_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MixReport {
    pub per_source: Vec<SourceCount>,
    pub total: usize,
    /// True when colliding record ids forced `<tag>/<id>` namespacing.
    pub ids_namespaced: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceCount {
    pub source: String,
    pub records: usize,
}

/// Loads and mixes files per the spec.
pub fn mix(spec: &MixSpec) -> Result<(Corpus, MixReport), MixError> {
    let mut corpora = Vec::with_capacity(spec.inputs.len());
    for (path, tag) in &spec.inputs {
        corpora.push((Corpus::load(path)?, tag.clone()));
    }
    mix_corpora(corpora, spec.shuffle_seed)
}

/// Concatenates the corpora with source tags rewritten. Record counts add
/// exactly; colliding ids across inputs are re-namespaced by source tag.
pub fn mix_corpora(
    inputs: Vec<(Corpus, String)>,
    shuffle_seed: Option<u64>,
) -> Result<(Corpus, MixReport), MixError> {
    let mut tags: HashSet<&str> = HashSet::new();
    for (_, tag) in &inputs {
        if !tags.insert(tag.as_str()) {
            return Err(MixError::DuplicateTag(tag.clone()));
        }
    }
    let mut all_ids: HashSet<&str> = HashSet::new();
    let mut collision = false;
    for (corpus, _) in &inputs {
        for record in &corpus.records {
            if !all_ids.insert(record.id.as_str()) {
                collision = true;
            }
        }
    }
    let mut report = MixReport {
        ids_namespaced: collision,
        ..MixReport::default()
    };
    let mut records = Vec::new();
    for (corpus, tag) in &inputs {
        report.per_source.push(SourceCount {
            source: tag.clone(),
            records: corpus.len(),
        });
        for record in &corpus.records {
            let mut record = record.clone();
            record.source = tag.clone();
            if collision {
                record.id = format!("{}/{}", tag, record.id);
            }
            records.push(record);
        }
    }
    report.total = records.len();
    if let Some(seed) = shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        records.shuffle(&mut rng);
    }
    Ok((Corpus::new(records, Stage::Mixed), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Record;

    fn corpus_of(n: usize, prefix: &str) -> Corpus {
        let records = (0..n)
            .map(|i| Record {
                id: format!("{}-{}", prefix, i),
                question: format!("q{}", i),
                completion: "```python\nx = 1\n```".into(),
                source: "orig".into(),
                answer: None,
            })
            .collect();
        Corpus::new(records, Stage::Selected)
    }

    #[test]
    fn counts_add_exactly() {
        let (mixed, report) = mix_corpora(
            vec![
                (corpus_of(2, "a"), "ds1".into()),
                (corpus_of(3, "b"), "ds2".into()),
                (corpus_of(4, "c"), "ds3".into()),
            ],
            None,
        )
        .unwrap();
        assert_eq!(mixed.len(), 9);
        assert_eq!(report.total, 9);
        let counts: Vec<usize> = report.per_source.iter().map(|s| s.records).collect();
        assert_eq!(counts, vec![2, 3, 4]);
        assert!(!report.ids_namespaced);
        assert!(mixed.records.iter().all(|r| r.source.starts_with("ds")));
    }

    #[test]
    fn single_input_is_identity_up_to_tagging() {
        let input = corpus_of(5, "a");
        let (mixed, report) = mix_corpora(vec![(input.clone(), "only".into())], None).unwrap();
        assert_eq!(mixed.len(), 5);
        assert_eq!(report.per_source.len(), 1);
        assert_eq!(
            mixed.records.iter().map(|r| &r.id).collect::<Vec<_>>(),
            input.records.iter().map(|r| &r.id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn colliding_ids_are_namespaced_by_tag() {
        let (mixed, report) = mix_corpora(
            vec![
                (corpus_of(2, "same"), "left".into()),
                (corpus_of(2, "same"), "right".into()),
            ],
            None,
        )
        .unwrap();
        assert!(report.ids_namespaced);
        let ids: HashSet<&str> = mixed.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids.len(), 4);
        assert!(ids.contains("left/same-0"));
        assert!(ids.contains("right/same-1"));
    }

    #[test]
    fn duplicate_tags_are_rejected() {
        let err = mix_corpora(
            vec![
                (corpus_of(1, "a"), "tag".into()),
                (corpus_of(1, "b"), "tag".into()),
            ],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, MixError::DuplicateTag(t) if t == "tag"));
    }

    #[test]
    fn shuffle_is_seeded_and_preserves_the_multiset() {
        let inputs = || {
            vec![
                (corpus_of(10, "a"), "x".into()),
                (corpus_of(10, "b"), "y".into()),
            ]
        };
        let (m1, _) = mix_corpora(inputs(), Some(7)).unwrap();
        let (m2, _) = mix_corpora(inputs(), Some(7)).unwrap();
        let (m3, _) = mix_corpora(inputs(), None).unwrap();
        assert_eq!(m1.records, m2.records);
        let mut shuffled: Vec<&str> = m1.records.iter().map(|r| r.id.as_str()).collect();
        let mut plain: Vec<&str> = m3.records.iter().map(|r| r.id.as_str()).collect();
        shuffled.sort_unstable();
        plain.sort_unstable();
        assert_eq!(shuffled, plain);
    }
}
