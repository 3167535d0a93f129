//! Lloyd's k-means with k-means++ seeding.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dsa::sq_dist;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

impl KMeans {
    /// Clusters the rows of `data` into at most `k` groups (never more than
    /// there are rows). Empty clusters keep their previous centroid.
    pub fn fit<R: Rng>(data: ArrayView2<'_, f64>, k: usize, rng: &mut R) -> Self {
        let (n, d) = data.dim();
        let k = k.clamp(1, n.max(1));
        let rows: Vec<&[f64]> = data
            .rows()
            .into_iter()
            .map(|r| r.to_slice().expect("contiguous rows"))
            .collect();
        let mut centroids = plus_plus_init(&rows, k, d, rng);
        let mut assignments = vec![usize::MAX; n];
        let mut iterations = 0;
        for _ in 0..MAX_ITERATIONS {
            iterations += 1;
            let mut changed = false;
            for (i, row) in rows.iter().enumerate() {
                let c = nearest(&centroids, row);
                if assignments[i] != c {
                    assignments[i] = c;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            let mut sums = Array2::<f64>::zeros((k, d));
            let mut counts = vec![0usize; k];
            for (row, &c) in rows.iter().zip(&assignments) {
                counts[c] += 1;
                let mut s = sums.row_mut(c);
                for (acc, v) in s.iter_mut().zip(row.iter()) {
                    *acc += v;
                }
            }
            for c in 0..k {
                if counts[c] > 0 {
                    let mean = sums.row(c).mapv(|v| v / counts[c] as f64);
                    centroids.row_mut(c).assign(&mean);
                }
            }
        }
        Self {
            centroids,
            assignments,
            iterations,
        }
    }

    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x)
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (c == cluster).then_some(i))
            .collect()
    }
}

/// Nearest centroid, lowest index on ties.
fn nearest(centroids: &Array2<f64>, x: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(row.as_slice().expect("contiguous centroid"), x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

fn plus_plus_init<R: Rng>(rows: &[&[f64]], k: usize, d: usize, rng: &mut R) -> Array2<f64> {
    let n = rows.len();
    let mut centroids = Array2::zeros((k, d));
    if n == 0 {
        return centroids;
    }
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).assign(&ndarray::ArrayView1::from(rows[first]));
    let mut closest: Vec<f64> = rows.iter().map(|r| sq_dist(r, rows[first])).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                acc += w;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).assign(&ndarray::ArrayView1::from(rows[pick]));
        for (dist, r) in closest.iter_mut().zip(rows) {
            *dist = dist.min(sq_dist(r, rows[pick]));
        }
    }
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separates_two_blobs() {
        let data = array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0], [10.1, 10.0], [10.0, 10.1]];
        let km = KMeans::fit(data.view(), 2, &mut ChaCha8Rng::seed_from_u64(3));
        let a = km.assignments[0];
        assert!(km.assignments[..3].iter().all(|&c| c == a));
        assert!(km.assignments[3..].iter().all(|&c| c != a));
        assert_eq!(km.predict(&[9.0, 9.0]), km.assignments[3]);
    }

    #[test]
    fn k_capped_by_rows() {
        let data = array![[0.0], [1.0]];
        let km = KMeans::fit(data.view(), 5, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(km.k(), 2);
    }

    #[test]
    fn single_cluster_is_mean() {
        let data = array![[0.0, 2.0], [2.0, 4.0], [4.0, 0.0]];
        let km = KMeans::fit(data.view(), 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(km.centroids, array![[2.0, 2.0]]);
    }
}
