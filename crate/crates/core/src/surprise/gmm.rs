//! Full-covariance Gaussian mixture fitted by EM, for multimodal LSA.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kmeans::KMeans;
use super::linalg::{regularized_cholesky, Cholesky};

pub const MAX_EM_ITERATIONS: usize = 100;
/// Convergence threshold on the mean per-sample log-likelihood.
pub const EM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Component {
    weight: f64,
    mean: Array1<f64>,
    covariance: Cholesky,
}

impl Component {
    fn log_pdf(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        let mut v: Vec<f64> = x.iter().zip(self.mean.iter()).map(|(a, m)| a - m).collect();
        let q = self.covariance.quad_form_inverse(&mut v);
        -0.5 * q - 0.5 * d * (2.0 * PI).ln() - self.covariance.half_log_det()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    components: Vec<Component>,
    iterations: usize,
}

impl GaussianMixture {
    /// EM initialised from a k-means partition. Components whose covariance
    /// cannot be factored, or which lose all responsibility, are dropped.
    pub fn fit<R: Rng>(
        data: ArrayView2<'_, f64>,
        k: usize,
        epsilon_scale: f64,
        rng: &mut R,
    ) -> Self {
        let n = data.nrows();
        let km = KMeans::fit(data, k, rng);
        let mut resp = Array2::<f64>::zeros((n, km.k()));
        for (i, &c) in km.assignments.iter().enumerate() {
            resp[[i, c]] = 1.0;
        }
        let mut components = m_step(data, &resp, epsilon_scale);
        let mut prev = f64::NEG_INFINITY;
        let mut iterations = 0;
        while iterations < MAX_EM_ITERATIONS && !components.is_empty() {
            iterations += 1;
            let (ll, next_resp) = e_step(data, &components);
            if !ll.is_finite() || (ll - prev).abs() < EM_TOLERANCE {
                break;
            }
            prev = ll;
            let next = m_step(data, &next_resp, epsilon_scale);
            if next.is_empty() {
                break;
            }
            components = next;
        }
        Self {
            components,
            iterations,
        }
    }

    pub fn components(&self) -> usize {
        self.components.len()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        log_sum_exp(self.components.iter().map(|c| c.weight.ln() + c.log_pdf(x)))
    }
}

fn m_step(data: ArrayView2<'_, f64>, resp: &Array2<f64>, epsilon_scale: f64) -> Vec<Component> {
    let n = data.nrows() as f64;
    let d = data.ncols();
    let mut out = Vec::new();
    for r in resp.axis_iter(Axis(1)) {
        let nk: f64 = r.sum();
        if nk <= 10.0 * f64::EPSILON {
            continue;
        }
        let mean = r.dot(&data) / nk;
        let mut cov = Array2::<f64>::zeros((d, d));
        for (x, &w) in data.rows().into_iter().zip(r.iter()) {
            if w == 0.0 {
                continue;
            }
            let diff = &x - &mean;
            for a in 0..d {
                let wa = w * diff[a];
                for b in 0..=a {
                    cov[[a, b]] += wa * diff[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..=a {
                cov[[a, b]] /= nk;
                cov[[b, a]] = cov[[a, b]];
            }
        }
        if let Some(reg) = regularized_cholesky(&cov, epsilon_scale) {
            out.push(Component {
                weight: nk / n,
                mean,
                covariance: reg.cholesky,
            });
        }
    }
    let total: f64 = out.iter().map(|c| c.weight).sum();
    for c in &mut out {
        c.weight /= total;
    }
    out
}

fn e_step(data: ArrayView2<'_, f64>, components: &[Component]) -> (f64, Array2<f64>) {
    let n = data.nrows();
    let mut resp = Array2::<f64>::zeros((n, components.len()));
    let mut total = 0.0;
    let mut lp = vec![0.0; components.len()];
    for (i, x) in data.rows().into_iter().enumerate() {
        let x = x.to_vec();
        for (slot, c) in lp.iter_mut().zip(components) {
            *slot = c.weight.ln() + c.log_pdf(&x);
        }
        let ll = log_sum_exp(lp.iter().copied());
        total += ll;
        for (k, &v) in lp.iter().enumerate() {
            resp[[i, k]] = (v - ll).exp();
        }
    }
    (total / n.max(1) as f64, resp)
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_component_is_gaussian_mle() {
        let data = array![[0.0, 1.0], [2.0, 0.0], [1.0, 3.0], [3.0, 2.0]];
        let g = GaussianMixture::fit(data.view(), 1, 1e-6, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(g.components(), 1);
        // Compare with the closed-form ML Gaussian.
        let (mean, cov) = super::super::linalg::mean_and_covariance(data.view(), 0);
        let chol = Cholesky::factor(&cov).unwrap();
        let x = [1.0, 1.0];
        let mut v = vec![x[0] - mean[0], x[1] - mean[1]];
        let q = chol.quad_form_inverse(&mut v);
        let expected = -0.5 * q - (2.0 * PI).ln() - chol.half_log_det();
        assert!((g.log_density(&x) - expected).abs() < 1e-10);
    }

    #[test]
    fn two_blobs_get_two_components() {
        let data = array![
            [0.0, 0.0],
            [0.2, 0.1],
            [0.1, 0.3],
            [-0.1, 0.2],
            [8.0, 8.0],
            [8.2, 8.1],
            [8.1, 7.8],
            [7.9, 8.3]
        ];
        let g = GaussianMixture::fit(data.view(), 2, 1e-6, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(g.components(), 2);
        let w = g.weights();
        assert!((w[0] - 0.5).abs() < 1e-6 && (w[1] - 0.5).abs() < 1e-6);
        assert!(g.log_density(&[0.1, 0.1]) > g.log_density(&[4.0, 4.0]));
    }

    #[test]
    fn lse() {
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(v.iter().copied()) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY].into_iter()), f64::NEG_INFINITY);
    }
}
