//! Dense symmetric linear algebra for covariance handling.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Doublings of ε attempted after the first regularized factorization.
pub const MAX_EPSILON_DOUBLINGS: u32 = 10;

/// Column means and covariance; `ddof` is 0 for the maximum-likelihood
/// estimate and 1 for the unbiased one.
pub fn mean_and_covariance(data: ArrayView2<'_, f64>, ddof: usize) -> (Array1<f64>, Array2<f64>) {
    let n = data.nrows();
    let d = data.ncols();
    let mean = data.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(d));
    let centered = &data - &mean;
    let denom = n.saturating_sub(ddof).max(1) as f64;
    let cov = centered.t().dot(&centered) / denom;
    (mean, cov)
}

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    /// Factors a symmetric matrix. Fails when a pivot is not finite or not
    /// larger than `1e-12` times the largest diagonal entry.
    pub fn factor(a: &Array2<f64>) -> Option<Self> {
        let n = a.nrows();
        let max_diag = a.diag().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let tol = 1e-12 * max_diag;
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !d.is_finite() || d <= tol {
                return None;
            }
            let ljj = d.sqrt();
            l[[j, j]] = ljj;
            for i in j + 1..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / ljj;
            }
        }
        Some(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor_matrix(&self) -> &Array2<f64> {
        &self.l
    }

    /// Solves `L·y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.l.row(i);
            let mut s = b[i];
            for k in 0..i {
                s -= row[k] * b[k];
            }
            b[i] = s / row[i];
        }
    }

    /// Squared Mahalanobis norm `vᵀ A⁻¹ v`; `v` is overwritten.
    pub fn quad_form_inverse(&self, v: &mut [f64]) -> f64 {
        self.solve_lower_in_place(v);
        v.iter().map(|x| x * x).sum()
    }

    /// `ln det L`, i.e. half the log-determinant of `A`.
    pub fn half_log_det(&self) -> f64 {
        self.l.diag().iter().map(|v| v.ln()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            l: &self.l * factor,
        }
    }

    /// `A⁻¹`, computed column by column from the factor.
    pub fn inverse(&self) -> Array2<f64> {
        let n = self.dim();
        let mut inv = Array2::zeros((n, n));
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            self.solve_lower_in_place(&mut col);
            // Back substitution with Lᵀ.
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in i + 1..n {
                    s -= self.l[[k, i]] * col[k];
                }
                col[i] = s / self.l[[i, i]];
            }
            for i in 0..n {
                inv[[i, j]] = col[i];
            }
        }
        inv
    }
}

/// A factorization together with the ε that made it succeed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regularized {
    pub cholesky: Cholesky,
    pub epsilon: f64,
}

/// Factors `cov`, adding ε to the diagonal only when needed. The first
/// attempt is unregularized; then ε starts at `scale` times the mean
/// diagonal (or `scale` itself for an all-zero diagonal) and doubles up to
/// [`MAX_EPSILON_DOUBLINGS`] times. `None` when every attempt fails.
pub fn regularized_cholesky(cov: &Array2<f64>, scale: f64) -> Option<Regularized> {
    if let Some(cholesky) = Cholesky::factor(cov) {
        return Some(Regularized {
            cholesky,
            epsilon: 0.0,
        });
    }
    let n = cov.nrows();
    let mean_diag = cov.diag().sum() / n.max(1) as f64;
    let mut epsilon = if mean_diag.is_finite() && mean_diag > 0.0 {
        scale * mean_diag
    } else {
        scale
    };
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return None;
    }
    for _ in 0..=MAX_EPSILON_DOUBLINGS {
        let mut shifted = cov.clone();
        shifted.diag_mut().mapv_inplace(|v| v + epsilon);
        if let Some(cholesky) = Cholesky::factor(&shifted) {
            return Some(Regularized { cholesky, epsilon });
        }
        epsilon *= 2.0;
    }
    None
}
