use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns kept for surprise computation, chosen by training variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFilter {
    input_dim: usize,
    retained: Vec<usize>,
}

impl FeatureFilter {
    pub fn identity(dim: usize) -> Self {
        Self {
            input_dim: dim,
            retained: (0..dim).collect(),
        }
    }

    /// Drops columns whose population variance is below `min_variance`,
    /// then keeps the `max_features` highest-variance columns (ties favour
    /// lower indices). Retained columns stay in ascending order.
    pub fn fit(
        data: ArrayView2<'_, f64>,
        min_variance: f64,
        max_features: Option<usize>,
    ) -> Result<Self> {
        let dim = data.ncols();
        let variances = data.var_axis(Axis(0), 0.0);
        let mut candidates: Vec<usize> = (0..dim).filter(|&j| variances[j] >= min_variance).collect();
        if let Some(limit) = max_features {
            if candidates.len() > limit {
                candidates.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]).then(a.cmp(&b)));
                candidates.truncate(limit);
                candidates.sort_unstable();
            }
        }
        if candidates.is_empty() {
            return Err(Error::Input(format!(
                "no feature has training variance >= {min_variance}"
            )));
        }
        Ok(Self {
            input_dim: dim,
            retained: candidates,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn output_dim(&self) -> usize {
        self.retained.len()
    }

    pub fn is_identity(&self) -> bool {
        self.retained.len() == self.input_dim
    }

    pub fn apply(&self, data: ArrayView2<'_, f64>) -> Array2<f64> {
        if self.is_identity() {
            data.to_owned()
        } else {
            data.select(Axis(1), &self.retained)
        }
    }

    pub fn apply_row(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.retained.iter().map(|&j| row[j]));
    }
}
