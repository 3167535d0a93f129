//! Distance-based surprise.
//!
//! For a test `x` predicted as class `c`: `x_a` is the nearest stored trace
//! of class `c`, `x_b` the stored trace of any other class nearest to
//! `x_a`, and the score is `‖x − x_a‖ / ‖x_a − x_b‖`. Nearest-neighbour
//! ties go to the lowest stored index.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureFilter;
use crate::error::{Error, Result};

/// Stored (possibly subsampled) training traces with their labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsaStore {
    pub(crate) features: FeatureFilter,
    pub(crate) ats: Array2<f64>,
    pub(crate) labels: Vec<usize>,
    pub(crate) by_class: BTreeMap<usize, Vec<usize>>,
}

impl DsaStore {
    /// Keeps `⌈n·fraction⌉` uniformly sampled rows (all rows for 1.0).
    pub fn fit(
        train: ArrayView2<'_, f64>,
        labels: &[usize],
        features: FeatureFilter,
        subsample_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        let n = train.nrows();
        if labels.len() != n {
            return Err(Error::Dimension {
                what: "training labels",
                expected: n,
                found: labels.len(),
            });
        }
        if !(subsample_fraction > 0.0 && subsample_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "dsa_subsample_fraction must lie in (0, 1], got {subsample_fraction}"
            )));
        }
        if n == 0 {
            return Err(Error::Input("DSA needs at least one training row".into()));
        }
        let keep = subsample_count(n, subsample_fraction);
        let rows: Vec<usize> = if keep == n {
            (0..n).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = rand::seq::index::sample(&mut rng, n, keep).into_vec();
            idx.sort_unstable();
            idx
        };
        let ats = features.apply(train.select(Axis(0), &rows).view());
        let labels: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_class.entry(l).or_default().push(i);
        }
        Ok(Self {
            features,
            ats,
            labels,
            by_class,
        })
    }

    pub fn stored(&self) -> usize {
        self.ats.nrows()
    }

    pub fn classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.by_class.keys().copied()
    }

    fn row(&self, i: usize) -> &[f64] {
        let d = self.ats.ncols();
        &self.ats.as_slice().expect("row-major store")[i * d..(i + 1) * d]
    }

    /// Distance from the stored trace `anchor` to the nearest stored trace
    /// of any other class.
    fn nearest_other(&self, anchor: usize) -> Option<f64> {
        let class = self.labels[anchor];
        let xa = self.row(anchor);
        let mut best: Option<f64> = None;
        for (i, &l) in self.labels.iter().enumerate() {
            if l == class {
                continue;
            }
            let d = sq_dist(xa, self.row(i));
            if best.is_none_or(|b| d < b) {
                best = Some(d);
            }
        }
        best.map(f64::sqrt)
    }

    /// Nearest stored trace of `class` using precomputed squared distances
    /// from the query to every stored row.
    fn nearest_in_class(&self, class: usize, sq: impl Fn(usize) -> f64) -> Option<(usize, f64)> {
        let members = self.by_class.get(&class)?;
        let mut best = (members[0], sq(members[0]));
        for &i in &members[1..] {
            let d = sq(i);
            if d < best.1 {
                best = (i, d);
            }
        }
        Some(best)
    }

    fn ratio(&self, anchor: usize, sq_dist_a: f64) -> Option<f64> {
        let dist_b = self.nearest_other(anchor)?;
        let s = sq_dist_a.sqrt() / dist_b;
        s.is_finite().then_some(s)
    }

    /// Sequential path: distances are computed on the fly per test.
    pub(crate) fn score_one(&self, x: &[f64], class: usize) -> Option<f64> {
        let (anchor, sq_a) = self.nearest_in_class(class, |i| sq_dist(x, self.row(i)))?;
        self.ratio(anchor, sq_a)
    }

    /// Vectorized path: one `rows × stored` distance block per call.
    pub(crate) fn score_block(&self, xs: ArrayView2<'_, f64>, classes: &[usize]) -> Vec<Option<f64>> {
        let n = self.stored();
        let b = xs.nrows();
        let mut block = vec![0.0; b * n];
        for (r, x) in xs.rows().into_iter().enumerate() {
            let x = x.as_slice().expect("contiguous test row");
            for (i, out) in block[r * n..(r + 1) * n].iter_mut().enumerate() {
                *out = sq_dist(x, self.row(i));
            }
        }
        (0..b)
            .map(|r| {
                let dists = &block[r * n..(r + 1) * n];
                let (anchor, sq_a) = self.nearest_in_class(classes[r], |i| dists[i])?;
                self.ratio(anchor, sq_a)
            })
            .collect()
    }
}

pub fn subsample_count(n: usize, fraction: f64) -> usize {
    let raw = n as f64 * fraction;
    // Guard against products such as 0.7 * 10 = 7.000000000000001.
    ((raw - 1e-9).ceil() as usize).clamp(1, n)
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A DSA scorer over a shared store. With `class` set it only serves tests
/// predicted as that class (the per-class composite's sub-models).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsaModel {
    pub(crate) store: Arc<DsaStore>,
    pub(crate) class: Option<usize>,
}

impl DsaModel {
    pub fn store(&self) -> &DsaStore {
        &self.store
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn store(train: Array2<f64>, labels: &[usize]) -> DsaStore {
        let d = train.ncols();
        DsaStore::fit(train.view(), labels, FeatureFilter::identity(d), 1.0, 0).unwrap()
    }

    #[test]
    fn worked_example() {
        let s = store(array![[0.0, 0.0], [2.0, 0.0]], &[0, 1]);
        assert_eq!(s.score_one(&[0.5, 0.0], 0), Some(0.25));
        assert_eq!(s.score_one(&[0.0, 0.0], 0), Some(0.0));
    }

    #[test]
    fn single_class_store_is_graceful() {
        let s = store(array![[0.0], [1.0]], &[0, 0]);
        assert_eq!(s.score_one(&[0.5], 0), None);
        assert_eq!(s.score_one(&[0.5], 1), None);
    }

    #[test]
    fn block_equals_sequential() {
        let s = store(
            array![[0.0, 1.0], [1.0, 1.0], [3.0, 0.0], [2.0, 2.0], [0.5, 0.1]],
            &[0, 1, 0, 1, 2],
        );
        let xs = array![[0.1, 0.9], [2.5, 0.4], [1.0, 1.0]];
        let cls = [0, 1, 2];
        let block = s.score_block(xs.view(), &cls);
        for (r, x) in xs.rows().into_iter().enumerate() {
            assert_eq!(block[r], s.score_one(x.as_slice().unwrap(), cls[r]));
        }
    }

    #[test]
    fn subsample_sizes() {
        assert_eq!(subsample_count(10, 0.5), 5);
        assert_eq!(subsample_count(11, 0.5), 6);
        assert_eq!(subsample_count(10, 0.7), 7);
        assert_eq!(subsample_count(10, 1.0), 10);
        assert_eq!(subsample_count(3, 0.01), 1);
        let train = Array2::from_shape_fn((101, 2), |(i, j)| (i * 3 + j) as f64);
        let labels: Vec<usize> = (0..101).map(|i| i % 3).collect();
        let s = DsaStore::fit(train.view(), &labels, FeatureFilter::identity(2), 0.5, 7).unwrap();
        assert_eq!(s.stored(), 51);
    }

    #[test]
    fn bad_fraction() {
        let train = array![[0.0], [1.0]];
        for f in [0.0, 1.5, f64::NAN] {
            assert!(DsaStore::fit(train.view(), &[0, 1], FeatureFilter::identity(1), f, 0).is_err());
        }
    }
}
