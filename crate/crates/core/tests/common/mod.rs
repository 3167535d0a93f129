//! Reference implementations written directly from the definitions, kept
//! deliberately naive so they share no code paths with the library.

#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;

/// Column-wise min, max, and population standard deviation.
pub fn naive_stats(train: &Array2<f64>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (n, a) = train.dim();
    let mut min = Vec::new();
    let mut max = Vec::new();
    let mut std = Vec::new();
    for j in 0..a {
        let col: Vec<f64> = (0..n).map(|i| train[[i, j]]).collect();
        min.push(col.iter().cloned().fold(f64::INFINITY, f64::min));
        max.push(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        std.push(var.sqrt());
    }
    (min, max, std)
}

#[derive(Debug, Clone, Copy)]
pub enum NaiveCriterion {
    Nac(f64),
    Kmnc(usize),
    Nbc(f64),
    Snac(f64),
    Tknc(usize),
}

/// Coverage bits per test, targets laid out neuron-major (`KMNC`: k targets
/// per neuron, `NBC`: low then high).
pub fn naive_coverage(
    test: &Array2<f64>,
    layer_offsets: &[usize],
    stats: &(Vec<f64>, Vec<f64>, Vec<f64>),
    criterion: NaiveCriterion,
) -> Vec<Vec<bool>> {
    let (min, max, std) = stats;
    let (rows, a) = test.dim();
    let mut out = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut bits = Vec::new();
        match criterion {
            NaiveCriterion::Nac(k) => {
                for j in 0..a {
                    bits.push(test[[i, j]] > k);
                }
            }
            NaiveCriterion::Kmnc(k) => {
                for j in 0..a {
                    let v = test[[i, j]];
                    let w = (max[j] - min[j]) / k as f64;
                    for s in 0..k {
                        let covered = if min[j] == max[j] {
                            s == 0 && v == min[j]
                        } else {
                            let lo = min[j] + s as f64 * w;
                            let hi = min[j] + (s + 1) as f64 * w;
                            let in_range = v >= min[j] && v <= max[j];
                            in_range && v >= lo && (v < hi || (s == k - 1 && v <= max[j]))
                        };
                        bits.push(covered);
                    }
                }
            }
            NaiveCriterion::Nbc(k) => {
                for j in 0..a {
                    let v = test[[i, j]];
                    bits.push(v < min[j] - k * std[j]);
                    bits.push(v > max[j] + k * std[j]);
                }
            }
            NaiveCriterion::Snac(k) => {
                for j in 0..a {
                    bits.push(test[[i, j]] > max[j] + k * std[j]);
                }
            }
            NaiveCriterion::Tknc(k) => {
                bits = vec![false; a];
                let mut bounds = layer_offsets.to_vec();
                bounds.push(a);
                for l in bounds.windows(2) {
                    let mut vals: Vec<f64> = (l[0]..l[1]).map(|j| test[[i, j]]).collect();
                    vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
                    let cutoff = vals[k - 1];
                    for j in l[0]..l[1] {
                        bits[j] = test[[i, j]] >= cutoff;
                    }
                }
            }
        }
        out.push(bits);
    }
    out
}

/// Greedy additional-coverage order by exhaustive marginal-gain scan, then
/// the remainder by descending total coverage (ties: lower index first).
pub fn naive_cam(rows: &[Vec<bool>]) -> (Vec<usize>, Vec<usize>) {
    let targets = rows.first().map_or(0, Vec::len);
    let mut covered = vec![false; targets];
    let mut remaining: Vec<usize> = (0..rows.len()).collect();
    let mut order = Vec::new();
    let mut gains = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for &t in &remaining {
            let gain = (0..targets).filter(|&c| rows[t][c] && !covered[c]).count();
            match best {
                Some((_, g)) if g >= gain => {}
                _ => best = Some((t, gain)),
            }
        }
        match best {
            Some((t, g)) if g > 0 => {
                for c in 0..targets {
                    covered[c] |= rows[t][c];
                }
                order.push(t);
                gains.push(g);
                remaining.retain(|&r| r != t);
            }
            _ => break,
        }
    }
    let mut tail = remaining.clone();
    tail.sort_by_key(|&t| (std::cmp::Reverse(rows[t].iter().filter(|&&b| b).count()), t));
    for t in tail {
        order.push(t);
        gains.push(0);
    }
    (order, gains)
}

/// DSA by quadratic scan: nearest same-class stored trace `x_a`, then the
/// nearest other-class stored trace to `x_a`. Non-finite ratios and missing
/// classes score 0.
pub fn naive_dsa(train: &Array2<f64>, labels: &[usize], test: &Array2<f64>, predicted: &[usize]) -> Vec<f64> {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let row = |m: &Array2<f64>, i: usize| m.row(i).to_vec();
    (0..test.nrows())
        .map(|t| {
            let x = row(test, t);
            let mut anchor: Option<(usize, f64)> = None;
            for i in 0..train.nrows() {
                if labels[i] != predicted[t] {
                    continue;
                }
                let d = dist(&x, &row(train, i));
                if anchor.is_none_or(|(_, b)| d < b) {
                    anchor = Some((i, d));
                }
            }
            let Some((a, dist_a)) = anchor else { return 0.0 };
            let xa = row(train, a);
            let dist_b = (0..train.nrows())
                .filter(|&i| labels[i] != labels[a])
                .map(|i| dist(&xa, &row(train, i)))
                .fold(f64::INFINITY, f64::min);
            let s = dist_a / dist_b;
            if s.is_finite() {
                s
            } else {
                0.0
            }
        })
        .collect()
}

/// Trapezoidal area under the fault-detection curve: after executing `i`
/// tests the detected fraction is `d_i / M`, interpolated linearly between
/// consecutive tests.
pub fn apfd_area(order: &[usize], faults: &[bool]) -> f64 {
    let n = order.len() as f64;
    let m = faults.iter().filter(|&&f| f).count() as f64;
    let mut detected = 0.0;
    let mut area = 0.0;
    for &t in order {
        let before = detected;
        if faults[t] {
            detected += 1.0;
        }
        area += (before + detected) / (2.0 * m) / n;
    }
    area
}

/// Two-sided Wilcoxon p-value by enumerating all sign assignments of the
/// average ranks of the nonzero differences.
pub fn wilcoxon_enumerated(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    let ranks: Vec<f64> = d
        .iter()
        .map(|v| {
            let below = d.iter().filter(|w| w.abs() < v.abs()).count() as f64;
            let equal = d.iter().filter(|w| w.abs() == v.abs()).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let total: f64 = ranks.iter().sum();
    let mean = total / 2.0;
    let observed: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let dev = (observed - mean).abs();
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if (w - mean).abs() >= dev - 1e-9 {
            extreme += 1;
        }
    }
    (extreme as f64 / (1u64 << n) as f64).min(1.0)
}

/// Paired A12 by counting wins and ties.
pub fn a12_counting(x: &[f64], y: &[f64]) -> f64 {
    let wins = x.iter().zip(y).filter(|(a, b)| a > b).count() as f64;
    let ties = x.iter().zip(y).filter(|(a, b)| a == b).count() as f64;
    (wins + 0.5 * ties) / x.len() as f64
}

/// A matrix with entries drawn uniformly from a coarse grid, so boundary
/// values and ties occur often.
pub fn grid_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, steps: i32) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-steps..=steps) as f64 / 4.0)
}

/// Uniform random matrix in [lo, hi).
pub fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(lo..hi))
}
