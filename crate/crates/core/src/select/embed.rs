//! Code embeddings for cluster-as-a-filter selection: token n-gram TF-IDF
//! followed by truncated SVD, with L2-normalized rows.
//!
//! Everything here is deterministic and dependency-light on purpose; the
//! representation is a config knob, not a claim about any particular
//! learned embedding.

use crate::lang::lex_content_tokens;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterConfig {
    /// Token n-gram size.
    pub ngram: usize,
    /// Target dimensionality of the SVD projection.
    pub lsa_dims: usize,
    /// Lloyd iteration cap for k-means.
    pub kmeans_iters: usize,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            ngram: 3,
            lsa_dims: 32,
            kmeans_iters: 100,
            seed: 0,
        }
    }
}

/// Embedded rows for one question group.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub rows: Vec<Vec<f64>>,
    /// All codes identical: clustering would be meaningless, callers
    /// short-circuit to a single cluster.
    pub degenerate: bool,
}

/// Token n-grams of one code text. Texts shorter than `n` tokens yield a
/// single gram covering the whole sequence.
pub fn token_ngrams(text: &str, n: usize) -> Vec<String> {
    let tokens = match lex_content_tokens(text) {
        Ok(t) => t,
        Err(_) => vec![text.to_string()],
    };
    let n = n.max(1);
    if tokens.is_empty() {
        return Vec::new();
    }
    if tokens.len() < n {
        return vec![tokens.join("\u{1f}")];
    }
    tokens
        .windows(n)
        .map(|w| w.join("\u{1f}"))
        .collect()
}

/// Dense TF-IDF rows over the sorted n-gram vocabulary, L2-normalized.
/// IDF uses the smoothed form ln((1+N)/(1+df)) + 1.
pub fn tfidf_rows(texts: &[String], ngram: usize) -> Vec<Vec<f64>> {
    let docs: Vec<Vec<String>> = texts.iter().map(|t| token_ngrams(t, ngram)).collect();
    let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &docs {
        for gram in doc {
            let next = vocab.len();
            vocab.entry(gram.as_str()).or_insert(next);
        }
    }
    // BTreeMap iteration gives lexicographic vocab order; reindex to it.
    let vocab: BTreeMap<&str, usize> = vocab
        .keys()
        .enumerate()
        .map(|(i, k)| (*k, i))
        .collect();
    let n_docs = docs.len();
    let mut df = vec![0usize; vocab.len()];
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_docs);
    let mut counts: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n_docs);
    for doc in &docs {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for gram in doc {
            *tf.entry(vocab[gram.as_str()]).or_insert(0.0) += 1.0;
        }
        for &col in tf.keys() {
            df[col] += 1;
        }
        counts.push(tf.into_iter().collect());
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    for tf in counts {
        let mut row = vec![0.0; vocab.len()];
        for (col, count) in tf {
            row[col] = count * idf[col];
        }
        l2_normalize(&mut row);
        rows.push(row);
    }
    rows
}

fn l2_normalize(row: &mut [f64]) {
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in row.iter_mut() {
            *x /= norm;
        }
    }
}

/// Embeds the canonical code texts of one group: TF-IDF, truncated SVD to
/// `lsa_dims` (capped by the matrix rank bound), then row normalization.
pub fn embed_texts(texts: &[String], cfg: &ClusterConfig) -> Embedding {
    let degenerate = texts.windows(2).all(|w| w[0] == w[1]);
    if texts.is_empty() {
        return Embedding {
            rows: Vec::new(),
            degenerate: true,
        };
    }
    let tfidf = tfidf_rows(texts, cfg.ngram);
    let n_rows = tfidf.len();
    let n_cols = tfidf[0].len();
    if degenerate || n_cols == 0 {
        return Embedding {
            rows: tfidf,
            degenerate: true,
        };
    }
    let rank_cap = cfg.lsa_dims.max(1).min(n_rows).min(n_cols);
    let flat: Vec<f64> = tfidf.iter().flatten().copied().collect();
    let matrix = DMatrix::from_row_slice(n_rows, n_cols, &flat);
    let svd = matrix.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    // Order components by singular value, descending; ties by index.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let dims: Vec<usize> = order.into_iter().take(rank_cap).collect();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_rows);
    for i in 0..n_rows {
        let mut row: Vec<f64> = dims
            .iter()
            .map(|&j| u[(i, j)] * svd.singular_values[j])
            .collect();
        l2_normalize(&mut row);
        rows.push(row);
    }
    Embedding {
        rows,
        degenerate: false,
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_codes_embed_identically() {
        let texts = vec![
            "def A():\n    a = 2\n    return a".to_string(),
            "def A():\n    a = 2\n    return a".to_string(),
        ];
        let emb = embed_texts(&texts, &ClusterConfig::default());
        assert!(emb.degenerate);
        assert_eq!(emb.rows[0], emb.rows[1]);
    }

    #[test]
    fn disjoint_token_codes_have_orthogonal_tfidf_rows() {
        let texts = vec![
            "alpha = beta + gamma".to_string(),
            "delta(epsilon, zeta)".to_string(),
        ];
        let rows = tfidf_rows(&texts, 3);
        let dot: f64 = rows[0].iter().zip(&rows[1]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12, "dot = {}", dot);
    }

    #[test]
    fn tfidf_matches_a_hand_computed_oracle_on_two_token_multisets() {
        // Two one-gram documents over a tiny shared vocabulary; the second
        // swaps a plain sum for min/max calls.
        let a = "x = y + z".to_string();
        let b = "x = min(y, z)".to_string();
        let rows = tfidf_rows(&[a.clone(), b.clone()], 1);

        // Oracle: recompute from raw token multisets with the same smoothed
        // idf, independently of the production path.
        let toks_a = ["x", "=", "y", "+", "z"];
        let toks_b = ["x", "=", "min", "(", "y", ",", "z", ")"];
        let mut vocab: Vec<&str> = toks_a
            .iter()
            .chain(toks_b.iter())
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        vocab.sort();
        let idf = |term: &str| -> f64 {
            let df = [&toks_a[..], &toks_b[..]]
                .iter()
                .filter(|doc| doc.contains(&term))
                .count();
            ((1.0 + 2.0) / (1.0 + df as f64)).ln() + 1.0
        };
        let oracle_row = |doc: &[&str]| -> Vec<f64> {
            let mut row: Vec<f64> = vocab
                .iter()
                .map(|t| doc.iter().filter(|d| d == &t).count() as f64 * idf(t))
                .collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.iter_mut().for_each(|x| *x /= norm);
            row
        };
        let oa = oracle_row(&toks_a);
        let ob = oracle_row(&toks_b);
        for (got, want) in rows[0].iter().zip(&oa) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in rows[1].iter().zip(&ob) {
            assert!((got - want).abs() < 1e-12);
        }
        // The min/max document sits at a nonzero distance from the plain one.
        let dist = squared_distance(&rows[0], &rows[1]);
        assert!(dist > 1e-6, "distance = {}", dist);
    }

    #[test]
    fn projection_keeps_identical_rows_together_and_distinct_apart() {
        let texts = vec![
            "def A():\n    a = 2\n    return a".to_string(),
            "def A():\n    a = 2\n    return a".to_string(),
            "def A():\n    a = 2\n    b = a * 3\n    return b".to_string(),
        ];
        let emb = embed_texts(&texts, &ClusterConfig::default());
        assert!(!emb.degenerate);
        assert!(squared_distance(&emb.rows[0], &emb.rows[1]) < 1e-18);
        assert!(squared_distance(&emb.rows[0], &emb.rows[2]) > 1e-6);
    }
}
