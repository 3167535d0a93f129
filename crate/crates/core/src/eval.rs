//! Ranking evaluation: APFD, active-learning selection, and the paired
//! statistics used to compare approaches across runs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::io::write_csv;
use crate::prioritize::Ranking;

/// Largest number of nonzero differences for which the Wilcoxon p-value is
/// computed from the exact null distribution.
pub const WILCOXON_EXACT_MAX: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApfdResult {
    pub apfd: f64,
    pub n_tests: usize,
    pub n_faults: usize,
}

/// Average percentage of faults detected, treating every misclassified test
/// as one fault revealed by that test alone:
/// `1 − Σ TF_i / (N·M) + 1 / (2N)` with `TF_i` the 1-based rank of the i-th
/// misclassified test.
pub fn apfd(ranking: &Ranking, misclassified: &[bool]) -> Result<ApfdResult> {
    let n = ranking.len();
    if misclassified.len() != n {
        return Err(Error::Dimension {
            what: "misclassification flags",
            expected: n,
            found: misclassified.len(),
        });
    }
    let mut rank_sum = 0usize;
    let mut faults = 0usize;
    for (rank, &t) in ranking.order.iter().enumerate() {
        if misclassified[t] {
            rank_sum += rank + 1;
            faults += 1;
        }
    }
    if faults == 0 {
        return Err(Error::NoFaults);
    }
    let (nf, mf) = (n as f64, faults as f64);
    Ok(ApfdResult {
        apfd: 1.0 - rank_sum as f64 / (nf * mf) + 1.0 / (2.0 * nf),
        n_tests: n,
        n_faults: faults,
    })
}

/// The first `⌈fraction·N⌉` tests of the ranking.
pub fn select_active(ranking: &Ranking, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!(
            "selection fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let n = ranking.len();
    let k = (((n as f64 * fraction) - 1e-9).ceil().max(0.0) as usize).min(n);
    Ok(ranking.order[..k].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    /// Sum of ranks of the positive differences.
    pub w_plus: f64,
    /// Pairs left after dropping zero differences.
    pub n_used: usize,
    pub exact: bool,
    /// Every difference was zero; `p_value` is 1 by convention.
    pub all_zero: bool,
}

/// Two-sided Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are dropped and tied absolute differences get average
/// ranks. Up to [`WILCOXON_EXACT_MAX`] pairs the p-value comes from the
/// exact permutation distribution of `W+` (ties included); above that from
/// the normal approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            what: "paired sample",
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Input("Wilcoxon inputs must be finite".into()));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        log::warn!("Wilcoxon: all paired differences are zero; p = 1");
        return Ok(WilcoxonResult {
            p_value: 1.0,
            w_plus: 0.0,
            n_used: 0,
            exact: true,
            all_zero: true,
        });
    }
    if n < 5 {
        log::warn!("Wilcoxon: only {n} nonzero differences; the test has little power");
    }
    // Doubled average ranks keep ties integral.
    let doubled = doubled_ranks(&diffs);
    let w2: u64 = diffs
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, &r)| r)
        .sum();
    let total2: u64 = doubled.iter().sum();
    let w_plus = w2 as f64 / 2.0;

    if n <= WILCOXON_EXACT_MAX {
        // dist[s] = number of sign assignments with doubled W+ == s.
        let mut dist = vec![0u64; total2 as usize + 1];
        dist[0] = 1;
        let mut reach = 0usize;
        for &r in &doubled {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if dist[s] > 0 {
                    dist[s + r] += dist[s];
                }
            }
            reach += r;
        }
        // |2·W+ − total| measured in doubled units.
        let dev = (2 * w2 as i64 - total2 as i64).abs();
        let extreme: u64 = dist
            .iter()
            .enumerate()
            .filter(|(s, _)| (2 * *s as i64 - total2 as i64).abs() >= dev)
            .map(|(_, &c)| c)
            .sum();
        let p = (extreme as f64 / 2f64.powi(n as i32)).min(1.0);
        return Ok(WilcoxonResult {
            p_value: p,
            w_plus,
            n_used: n,
            exact: true,
            all_zero: false,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = doubled.clone();
    sorted.sort_unstable();
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * normal.sf(z)).min(1.0);
    Ok(WilcoxonResult {
        p_value: p,
        w_plus,
        n_used: n,
        exact: false,
        all_zero: false,
    })
}

/// Twice the average rank of each `|d|` (1-based).
fn doubled_ranks(diffs: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..diffs.len()).collect();
    idx.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && diffs[idx[j + 1]].abs() == diffs[idx[i]].abs() {
            j += 1;
        }
        // Average of ranks i+1..=j+1, doubled.
        let r2 = (i + 1 + j + 1) as u64;
        for &k in &idx[i..=j] {
            ranks[k] = r2;
        }
        i = j + 1;
    }
    ranks
}

/// Paired Vargha-Delaney A: share of matched pairs where `x` wins, ties
/// counting one half.
pub fn vargha_delaney_a12_paired(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            what: "paired sample",
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::Input("A12 needs at least one pair".into()));
    }
    let wins: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| match a.partial_cmp(b) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Equal) => 0.5,
            _ => 0.0,
        })
        .sum();
    Ok(wins / x.len() as f64)
}

pub fn bonferroni(p: f64, comparisons: usize) -> f64 {
    (p * comparisons.max(1) as f64).min(1.0)
}

/// Number of unordered pairs among `approaches`.
pub fn pairwise_comparisons(approaches: usize) -> usize {
    approaches * approaches.saturating_sub(1) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub approach_a: String,
    pub approach_b: String,
    pub p_value: f64,
    pub p_value_bonferroni: f64,
    pub a12: f64,
    pub n_pairs: usize,
}

/// All pairwise comparisons between approaches, each given as per-run
/// values (e.g. APFDs of the same runs in the same order). The Bonferroni
/// factor is the number of pairs.
pub fn stats_matrix(approaches: &[(String, Vec<f64>)]) -> Result<Vec<StatResult>> {
    let factor = pairwise_comparisons(approaches.len());
    let mut out = Vec::with_capacity(factor);
    for (i, (name_a, a)) in approaches.iter().enumerate() {
        for (name_b, b) in &approaches[i + 1..] {
            let w = wilcoxon_signed_rank(a, b)
                .map_err(|e| e.context(format!("{name_a} vs {name_b}")))?;
            out.push(StatResult {
                approach_a: name_a.clone(),
                approach_b: name_b.clone(),
                p_value: w.p_value,
                p_value_bonferroni: bonferroni(w.p_value, factor),
                a12: vargha_delaney_a12_paired(a, b)?,
                n_pairs: a.len(),
            });
        }
    }
    Ok(out)
}

pub fn write_stats_csv(path: &Path, stats: &[StatResult]) -> Result<()> {
    write_csv(
        path,
        &["approach_a", "approach_b", "p", "p_bonferroni", "a12"],
        stats.iter().map(|s| {
            [
                s.approach_a.clone(),
                s.approach_b.clone(),
                s.p_value.to_string(),
                s.p_value_bonferroni.to_string(),
                s.a12.to_string(),
            ]
        }),
    )
}
