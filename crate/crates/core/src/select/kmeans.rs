//! Seeded k-means with k-means++ initialization on L2-normalized rows.
//!
//! Fully deterministic given the RNG: sampling, assignment ties, and
//! empty-cluster repair all break ties by lowest index.

use super::embed::squared_distance;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub converged: bool,
}

pub fn kmeans(rows: &[Vec<f64>], k: usize, max_iters: usize, rng: &mut ChaCha8Rng) -> KMeansResult {
    assert!(k >= 1 && k <= rows.len(), "k must be in 1..=rows");
    let mut centroids = plus_plus_init(rows, k, rng);
    let mut assignments = vec![0usize; rows.len()];
    let mut converged = false;
    for _ in 0..max_iters.max(1) {
        let new_assignments: Vec<usize> = rows
            .iter()
            .map(|row| nearest_centroid(row, &centroids))
            .collect();
        let stable = new_assignments == assignments;
        assignments = new_assignments;
        recompute_centroids(rows, &assignments, &mut centroids);
        repair_empty_clusters(rows, &mut assignments, &mut centroids);
        if stable {
            converged = true;
            break;
        }
    }
    KMeansResult {
        assignments,
        centroids,
        converged,
    }
}

fn nearest_centroid(row: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(row, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn recompute_centroids(rows: &[Vec<f64>], assignments: &[usize], centroids: &mut [Vec<f64>]) {
    let dims = rows[0].len();
    let k = centroids.len();
    let mut sums = vec![vec![0.0; dims]; k];
    let mut counts = vec![0usize; k];
    for (row, &a) in rows.iter().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(row) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            for s in sums[c].iter_mut() {
                *s /= counts[c] as f64;
            }
            centroids[c] = sums[c].clone();
        }
        // Empty clusters keep their previous centroid; repair handles them.
    }
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty_clusters(rows: &[Vec<f64>], assignments: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut worst = 0usize;
        let mut worst_d = -1.0;
        for (i, row) in rows.iter().enumerate() {
            if counts[assignments[i]] <= 1 {
                continue;
            }
            let d = squared_distance(row, &centroids[assignments[i]]);
            if d > worst_d {
                worst_d = d;
                worst = i;
            }
        }
        assignments[worst] = empty;
        centroids[empty] = rows[worst].clone();
    }
}

/// k-means++ seeding: the first center is uniform, each further center is
/// D²-sampled. A zero total distance (duplicate points) falls back to the
/// lowest-index unchosen point.
fn plus_plus_init(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut chosen: Vec<usize> = vec![rng.gen_range(0..rows.len())];
    while chosen.len() < k {
        let d2: Vec<f64> = rows
            .iter()
            .map(|row| {
                chosen
                    .iter()
                    .map(|&c| squared_distance(row, &rows[c]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = rows.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            (0..rows.len())
                .find(|i| !chosen.contains(i))
                .unwrap_or(0)
        };
        if chosen.contains(&next) {
            // Degenerate geometry; take the lowest-index unchosen point.
            match (0..rows.len()).find(|i| !chosen.contains(i)) {
                Some(i) => chosen.push(i),
                None => break,
            }
        } else {
            chosen.push(next);
        }
    }
    chosen.into_iter().map(|i| rows[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn separates_two_obvious_blobs() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![5.0, 5.0],
            vec![5.1, 5.0],
        ];
        let result = kmeans(&rows, 2, 100, &mut rng());
        assert!(result.converged);
        assert_eq!(result.assignments[0], result.assignments[1]);
        assert_eq!(result.assignments[0], result.assignments[2]);
        assert_eq!(result.assignments[3], result.assignments[4]);
        assert_ne!(result.assignments[0], result.assignments[3]);
    }

    #[test]
    fn every_cluster_ends_up_nonempty() {
        // Nine copies of one point and one outlier, k=3: repair must leave
        // no empty cluster.
        let mut rows = vec![vec![1.0, 1.0]; 9];
        rows.push(vec![-1.0, -1.0]);
        let result = kmeans(&rows, 3, 100, &mut rng());
        let mut counts = vec![0usize; 3];
        for &a in &result.assignments {
            counts[a] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0), "counts {:?}", counts);
    }

    #[test]
    fn identical_seeds_give_identical_results() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i % 5) as f64, (i / 5) as f64])
            .collect();
        let a = kmeans(&rows, 4, 100, &mut rng());
        let b = kmeans(&rows, 4, 100, &mut rng());
        assert_eq!(a.assignments, b.assignments);
    }
}
