//! Likelihood-based surprise: negative log density under a Gaussian KDE.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::features::FeatureFilter;
use super::linalg::{mean_and_covariance, regularized_cholesky, Cholesky};
use crate::error::{Error, Result};

/// Gaussian kernel density estimate with a full kernel covariance `H`.
///
/// Training points are stored pre-whitened by the Cholesky factor of `H`,
/// so a query costs one triangular solve plus `n` squared distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianKde {
    center: Array1<f64>,
    whitened: Array2<f64>,
    kernel: Cholesky,
    log_norm: f64,
}

impl GaussianKde {
    /// `None` when `kernel_covariance` is not positive definite.
    pub fn new(points: ArrayView2<'_, f64>, kernel_covariance: &Array2<f64>) -> Option<Self> {
        Cholesky::factor(kernel_covariance).map(|k| Self::from_factor(points, k))
    }

    pub fn from_factor(points: ArrayView2<'_, f64>, kernel: Cholesky) -> Self {
        let (n, d) = points.dim();
        let center = points
            .mean_axis(ndarray::Axis(0))
            .unwrap_or_else(|| Array1::zeros(d));
        let mut whitened = Array2::zeros((n, d));
        let mut buf = vec![0.0; d];
        for (i, row) in points.rows().into_iter().enumerate() {
            for (b, (&x, &c)) in buf.iter_mut().zip(row.iter().zip(center.iter())) {
                *b = x - c;
            }
            kernel.solve_lower_in_place(&mut buf);
            whitened.row_mut(i).assign(&ndarray::ArrayView1::from(&buf[..]));
        }
        let log_norm = (n as f64).ln() + 0.5 * d as f64 * (2.0 * PI).ln() + kernel.half_log_det();
        Self {
            center,
            whitened,
            kernel,
            log_norm,
        }
    }

    pub fn points(&self) -> usize {
        self.whitened.nrows()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut z: Vec<f64> = x.iter().zip(self.center.iter()).map(|(a, c)| a - c).collect();
        self.kernel.solve_lower_in_place(&mut z);
        let mut max = f64::NEG_INFINITY;
        let exps: Vec<f64> = self
            .whitened
            .rows()
            .into_iter()
            .map(|w| {
                let q: f64 = w.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                let e = -0.5 * q;
                max = max.max(e);
                e
            })
            .collect();
        if !max.is_finite() {
            return f64::NEG_INFINITY;
        }
        let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
        max + sum.ln() - self.log_norm
    }
}

/// Scott's rule bandwidth factor `n^(-1/(d+4))`.
pub fn scott_factor(n: usize, d: usize) -> f64 {
    (n as f64).powf(-1.0 / (d as f64 + 4.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaModel {
    pub(crate) features: FeatureFilter,
    /// `None` when the covariance could not be factored even with ε.
    pub(crate) kde: Option<GaussianKde>,
    pub(crate) bandwidth_factor: f64,
    pub(crate) epsilon: Option<f64>,
}

impl LsaModel {
    /// The KDE kernel covariance is the training covariance (plus ε on the
    /// diagonal when needed) scaled by the squared Scott factor.
    pub fn fit(
        train: ArrayView2<'_, f64>,
        features: FeatureFilter,
        epsilon_scale: f64,
    ) -> Result<Self> {
        if train.nrows() < 2 {
            return Err(Error::Input("LSA needs at least 2 training rows".into()));
        }
        let data = features.apply(train);
        let (n, d) = data.dim();
        let (_, cov) = mean_and_covariance(data.view(), 1);
        let factor = scott_factor(n, d);
        let (kde, epsilon) = match regularized_cholesky(&cov, epsilon_scale) {
            Some(reg) => {
                let kernel = reg.cholesky.scaled(factor);
                (Some(GaussianKde::from_factor(data.view(), kernel)), Some(reg.epsilon))
            }
            None => {
                log::warn!("LSA covariance could not be regularized; scores fall back to 0");
                (None, None)
            }
        };
        Ok(Self {
            features,
            kde,
            bandwidth_factor: factor,
            epsilon,
        })
    }

    pub fn features(&self) -> &FeatureFilter {
        &self.features
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn is_degenerate(&self) -> bool {
        self.kde.is_none()
    }

    pub(crate) fn score_filtered(&self, x: &[f64]) -> Option<f64> {
        let s = -self.kde.as_ref()?.log_density(x);
        s.is_finite().then_some(s)
    }
}
