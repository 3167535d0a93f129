//! Test orderings from coverage profiles (CTM, CAM) or scalar scores.
//!
//! Ties are always broken by ascending test index.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coverage::CoverageProfile;
use crate::error::{Error, Result};
use crate::io::{read_csv, write_csv};

/// A test ordering. `order[0]` runs first; `scores[i]` is the score test
/// `i` was ranked by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// 0-based position of each test in the ordering.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (rank, &t) in self.order.iter().enumerate() {
            pos[t] = rank;
        }
        pos
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.order.len()];
        self.order.iter().all(|&t| t < seen.len() && !std::mem::replace(&mut seen[t], true))
    }

    /// Writes `rank,test_index,score` rows; ranks start at 1.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            &["rank", "test_index", "score"],
            self.order.iter().enumerate().map(|(r, &t)| {
                [(r + 1).to_string(), t.to_string(), self.scores[t].to_string()]
            }),
        )
    }

    /// Reads a ranking written by [`Ranking::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Self> {
        let (header, rows) = read_csv(path)?;
        if header != ["rank", "test_index", "score"] {
            return Err(Error::malformed(path, format!("unexpected ranking header {header:?}")));
        }
        let n = rows.len();
        let mut order = Vec::with_capacity(n);
        let mut scores = vec![f64::NAN; n];
        for (r, row) in rows.iter().enumerate() {
            let bad = || Error::malformed(path, format!("bad ranking row {}", r + 1));
            if row.len() != 3 || row[0].parse::<usize>().ok() != Some(r + 1) {
                return Err(bad());
            }
            let t: usize = row[1].parse().map_err(|_| bad())?;
            if t >= n {
                return Err(bad());
            }
            scores[t] = row[2].parse().map_err(|_| bad())?;
            order.push(t);
        }
        let ranking = Ranking { order, scores };
        if !ranking.is_permutation() {
            return Err(Error::malformed(path, "test indices are not a permutation"));
        }
        Ok(ranking)
    }
}

/// Descending by key, ascending index on ties.
fn sorted_desc<K: Copy, F: Fn(K, K) -> Ordering>(keys: &[K], cmp: F) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| cmp(keys[b], keys[a]).then(a.cmp(&b)));
    order
}

/// Coverage-total method: descending coverage ratio.
pub fn ctm_order(profile: &CoverageProfile) -> Ranking {
    let counts: Vec<usize> = (0..profile.tests()).map(|i| profile.covered(i)).collect();
    Ranking {
        order: sorted_desc(&counts, |a, b| a.cmp(&b)),
        scores: profile.coverage_ratios(),
    }
}

/// Coverage-additional method: repeatedly picks the test adding the most
/// not-yet-covered targets. Once no test adds anything, the rest follow in
/// CTM order with score 0. Scores are the gains at selection time.
pub fn cam_order(profile: &CoverageProfile) -> Ranking {
    let bits = &profile.bits;
    let n = bits.rows();
    let mut covered = vec![0u64; bits.words_per_row()];
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    let mut scores = vec![0.0; n];

    while !remaining.is_empty() {
        let mut best: Option<(usize, usize)> = None;
        for (slot, &t) in remaining.iter().enumerate() {
            let gain = bits.count_row_and_not(t, &covered);
            // `remaining` stays in ascending index order, so strict `>`
            // keeps the lowest index on ties.
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((slot, gain));
            }
        }
        let (slot, gain) = best.expect("remaining is nonempty");
        if gain == 0 {
            break;
        }
        let t = remaining.remove(slot);
        bits.or_row_into(t, &mut covered);
        scores[t] = gain as f64;
        order.push(t);
    }

    if !remaining.is_empty() {
        let counts: Vec<usize> = remaining.iter().map(|&t| bits.count_row(t)).collect();
        order.extend(sorted_desc(&counts, |a, b| a.cmp(&b)).into_iter().map(|i| remaining[i]));
    }
    Ranking { order, scores }
}

/// Descending by score.
pub fn score_order(scores: &[f64]) -> Result<Ranking> {
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Input(format!("NaN score for test {i}")));
    }
    Ok(Ranking {
        order: sorted_desc(scores, |a: f64, b: f64| a.partial_cmp(&b).expect("no NaN")),
        scores: scores.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitmatrix::BitMatrix;
    use crate::coverage::ProfileSource;

    fn profile(rows: &[&[usize]], targets: usize) -> CoverageProfile {
        let mut bits = BitMatrix::zeros(rows.len(), targets);
        for (i, r) in rows.iter().enumerate() {
            for &c in *r {
                bits.set(i, c);
            }
        }
        CoverageProfile {
            bits,
            targets_per_neuron: 1,
            source: ProfileSource::Surprise {
                buckets: targets,
                upper: 1.0,
            },
        }
    }

    #[test]
    fn ctm_ties_by_index() {
        let p = profile(&[&[0, 1, 2], &[0, 1], &[1, 2, 3]], 4);
        let r = ctm_order(&p);
        assert_eq!(r.order, vec![0, 2, 1]);
        assert_eq!(r.scores, vec![0.75, 0.5, 0.75]);
        let same = profile(&[&[1], &[1], &[1]], 3);
        assert_eq!(ctm_order(&same).order, vec![0, 1, 2]);
        assert_eq!(ctm_order(&profile(&[&[0]], 1)).order, vec![0]);
    }

    #[test]
    fn cam_greedy_example() {
        // targets 1..=5 mapped to columns 0..=4
        let p = profile(&[&[0, 1, 2], &[3, 4], &[0, 1]], 5);
        let r = cam_order(&p);
        assert_eq!(r.order, vec![0, 1, 2]);
        assert_eq!(r.scores, vec![3.0, 2.0, 0.0]);
    }

    #[test]
    fn cam_disjoint_equal() {
        let p = profile(&[&[0, 1], &[2, 3], &[4, 5]], 6);
        assert_eq!(cam_order(&p).order, vec![0, 1, 2]);
        assert_eq!(ctm_order(&p).order, vec![0, 1, 2]);
    }

    #[test]
    fn cam_tail_follows_ctm() {
        let p = profile(&[&[0], &[0, 1, 2], &[1], &[0, 1]], 3);
        let r = cam_order(&p);
        assert_eq!(r.order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn score_order_examples() {
        assert_eq!(score_order(&[0.1, 0.9, 0.5]).unwrap().order, vec![1, 2, 0]);
        assert_eq!(score_order(&[0.5, 0.5]).unwrap().order, vec![0, 1]);
        assert_eq!(score_order(&[0.0, -0.0]).unwrap().order, vec![0, 1]);
        assert!(score_order(&[0.1, f64::NAN]).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let r = score_order(&[0.1, 0.9, 1.0 / 3.0]).unwrap();
        r.write_csv(&path).unwrap();
        assert_eq!(Ranking::read_csv(&path).unwrap(), r);
        std::fs::write(&path, "rank,test_index,score\n1,0,0.5\n2,0,0.5\n").unwrap();
        assert!(Ranking::read_csv(&path).is_err());
    }

    #[test]
    fn positions_and_permutation() {
        let r = score_order(&[0.1, 0.9, 0.5]).unwrap();
        assert_eq!(r.positions(), vec![2, 0, 1]);
        assert!(r.is_permutation());
    }
}
