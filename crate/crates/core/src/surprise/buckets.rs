//! Surprise coverage: equal-width buckets over `[0, U]`.

use super::SurpriseScores;
use crate::bitmatrix::BitMatrix;
use crate::coverage::{CoverageProfile, ProfileSource};
use crate::error::{Error, Result};

/// Buckets `scores` into `n_buckets` adjacent ranges over `[0, U]`, where
/// `U` is `upper` or, when absent, the largest score. Negative scores of
/// likelihood-based variants are clamped into the first bucket.
pub fn surprise_profile(
    scores: &SurpriseScores,
    n_buckets: usize,
    upper: Option<f64>,
) -> Result<CoverageProfile> {
    bucketize(&scores.scores, n_buckets, upper, scores.variant.is_likelihood())
}

/// Each in-range value covers exactly one bucket; `U` itself falls in the
/// last one. Values above `U` (and below 0 unless `clamp_negative`) cover
/// nothing. A non-positive `U` yields an all-false profile.
pub fn bucketize(
    values: &[f64],
    n_buckets: usize,
    upper: Option<f64>,
    clamp_negative: bool,
) -> Result<CoverageProfile> {
    if n_buckets == 0 {
        return Err(Error::Config("surprise coverage needs at least one bucket".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("non-finite surprise value {bad}")));
    }
    if let Some(u) = upper {
        if !u.is_finite() {
            return Err(Error::Config(format!("surprise upper bound must be finite, got {u}")));
        }
    }
    let u = upper.unwrap_or_else(|| values.iter().copied().fold(0.0, f64::max));
    let mut bits = BitMatrix::zeros(values.len(), n_buckets);
    if u <= 0.0 {
        log::warn!("surprise upper bound {u} <= 0; coverage profile is empty");
    } else {
        for (i, &v) in values.iter().enumerate() {
            let v = if clamp_negative { v.max(0.0) } else { v };
            if !(0.0..=u).contains(&v) {
                continue;
            }
            let bucket = ((v * n_buckets as f64 / u).floor() as usize).min(n_buckets - 1);
            bits.set(i, bucket);
        }
    }
    Ok(CoverageProfile {
        bits,
        targets_per_neuron: n_buckets,
        source: ProfileSource::Surprise {
            buckets: n_buckets,
            upper: u,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(p: &CoverageProfile) -> Vec<Vec<bool>> {
        (0..p.tests()).map(|i| p.bits.row_bits(i).collect()).collect()
    }

    #[test]
    fn two_buckets_dynamic_upper() {
        let p = bucketize(&[0.1, 0.5, 1.0], 2, None, false).unwrap();
        assert_eq!(
            rows(&p),
            vec![vec![true, false], vec![false, true], vec![false, true]]
        );
    }

    #[test]
    fn single_bucket() {
        let p = bucketize(&[0.0, 0.3, 7.0], 1, None, false).unwrap();
        assert!(rows(&p).iter().all(|r| r == &vec![true]));
    }

    #[test]
    fn fixed_upper_excludes() {
        let p = bucketize(&[-0.5, 0.5, 2.0], 4, Some(1.0), false).unwrap();
        assert_eq!(p.covered(0), 0);
        assert!(p.bits.get(1, 2));
        assert_eq!(p.covered(2), 0);
    }

    #[test]
    fn negative_likelihood_clamped() {
        let p = bucketize(&[-0.5, 0.5], 2, Some(1.0), true).unwrap();
        assert!(p.bits.get(0, 0));
    }

    #[test]
    fn all_zero_scores() {
        let p = bucketize(&[0.0, 0.0], 3, None, false).unwrap();
        assert_eq!(p.covered(0) + p.covered(1), 0);
    }

    #[test]
    fn errors() {
        assert!(bucketize(&[0.1], 0, None, false).is_err());
        assert!(bucketize(&[f64::NAN], 2, None, false).is_err());
    }
}
