//! Mahalanobis-distance surprise.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::linalg::{mean_and_covariance, regularized_cholesky, Cholesky};

/// Mean and factored (maximum-likelihood) covariance of a set of traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mahalanobis {
    mean: Array1<f64>,
    /// `None` when even the regularized covariance could not be factored.
    covariance: Option<Cholesky>,
    epsilon: Option<f64>,
}

impl Mahalanobis {
    pub fn fit(data: ArrayView2<'_, f64>, epsilon_scale: f64) -> Self {
        let (mean, cov) = mean_and_covariance(data, 0);
        match regularized_cholesky(&cov, epsilon_scale) {
            Some(reg) => Self {
                mean,
                covariance: Some(reg.cholesky),
                epsilon: Some(reg.epsilon),
            },
            None => {
                log::warn!("MDSA covariance could not be regularized; scores fall back to 0");
                Self {
                    mean,
                    covariance: None,
                    epsilon: None,
                }
            }
        }
    }

    /// A placeholder that scores every input as a graceful failure.
    pub fn degenerate(dim: usize) -> Self {
        Self {
            mean: Array1::zeros(dim),
            covariance: None,
            epsilon: None,
        }
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn is_degenerate(&self) -> bool {
        self.covariance.is_none()
    }

    /// Inverse of the (regularized) covariance.
    pub fn inverse_covariance(&self) -> Option<Array2<f64>> {
        self.covariance.as_ref().map(Cholesky::inverse)
    }

    pub fn distance(&self, x: &[f64]) -> Option<f64> {
        let chol = self.covariance.as_ref()?;
        let mut v: Vec<f64> = x.iter().zip(self.mean.iter()).map(|(a, m)| a - m).collect();
        let d = chol.quad_form_inverse(&mut v).max(0.0).sqrt();
        d.is_finite().then_some(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_covariance_is_euclidean() {
        // Four points with zero mean and identity ML covariance.
        let s = std::f64::consts::SQRT_2;
        let data = array![[s, 0.0], [-s, 0.0], [0.0, s], [0.0, -s]];
        let m = Mahalanobis::fit(data.view(), 1e-6);
        assert_eq!(m.epsilon(), Some(0.0));
        let inv = m.inverse_covariance().unwrap();
        let eye = Array2::<f64>::eye(2);
        assert!((&inv - &eye).iter().all(|v| v.abs() < 1e-9));
        assert!((m.distance(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_is_regularized() {
        let data = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        let m = Mahalanobis::fit(data.view(), 1e-6);
        assert!(m.epsilon().unwrap() > 0.0);
        assert!(m.distance(&[1.0, -1.0]).unwrap().is_finite());
    }
}
