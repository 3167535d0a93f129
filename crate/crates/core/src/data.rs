//! Shared data model: activation traces, softmax outputs and labels.
//!
//! Every container validates its invariants on construction and is
//! immutable afterwards, so a single instance can be shared freely across
//! worker threads.

use std::ops::Range;

use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum absolute deviation of a softmax row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Activation traces: one row per input, one column per neuron, with the
/// columns partitioned into consecutive DNN layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationMatrix {
    values: Array2<f64>,
    layer_offsets: Vec<usize>,
}

impl ActivationMatrix {
    pub fn new(values: Array2<f64>, layer_offsets: Vec<usize>) -> Result<Self> {
        let values = standard_layout(values);
        check_finite(values.view())?;
        check_layer_offsets(&layer_offsets, values.ncols())?;
        Ok(Self {
            values,
            layer_offsets,
        })
    }

    /// All columns form a single layer.
    pub fn single_layer(values: Array2<f64>) -> Result<Self> {
        Self::new(values, vec![0])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Input(format!(
                    "row {i} has {} values, expected {cols}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        let values = Array2::from_shape_vec((rows.len(), cols), flat)
            .map_err(|e| Error::Input(e.to_string()))?;
        Self::single_layer(values)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn layer_offsets(&self) -> &[usize] {
        &self.layer_offsets
    }

    /// Column ranges of each layer, in order.
    pub fn layers(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let cols = self.cols();
        self.layer_offsets.iter().enumerate().map(move |(i, &start)| {
            let end = self.layer_offsets.get(i + 1).copied().unwrap_or(cols);
            start..end
        })
    }

    /// Copies the listed rows into a new matrix with the same layer partition.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), rows),
            layer_offsets: self.layer_offsets.clone(),
        }
    }

    /// Splits the matrix into consecutive row blocks of at most `batch_size`.
    pub fn split_rows(&self, batch_size: usize) -> Vec<Self> {
        let batch_size = batch_size.max(1);
        (0..self.rows())
            .step_by(batch_size)
            .map(|start| {
                let end = (start + batch_size).min(self.rows());
                Self {
                    values: self.values.slice(s![start..end, ..]).to_owned(),
                    layer_offsets: self.layer_offsets.clone(),
                }
            })
            .collect()
    }
}

/// Per-input class probabilities; rows lie on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxMatrix {
    values: Array2<f64>,
}

impl SoftmaxMatrix {
    /// Validates the rows and divides each row by its sum, which is within
    /// [`ROW_SUM_TOLERANCE`] of one.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let mut values = standard_layout(values);
        if values.ncols() < 2 {
            return Err(Error::Input(format!(
                "softmax needs at least 2 classes, found {}",
                values.ncols()
            )));
        }
        check_finite(values.view())?;
        for (i, mut row) in values.axis_iter_mut(Axis(0)).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum { row: i, sum });
            }
            if let Some(&bad) = row
                .iter()
                .find(|&&v| !(-ROW_SUM_TOLERANCE..=1.0 + ROW_SUM_TOLERANCE).contains(&v))
            {
                return Err(Error::ProbabilityRange { row: i, value: bad });
            }
            if sum != 1.0 {
                row.mapv_inplace(|v| (v / sum).clamp(0.0, 1.0));
            } else {
                row.mapv_inplace(|v| v.clamp(0.0, 1.0));
            }
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Input("ragged softmax rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), cols), flat)
            .map_err(|e| Error::Input(e.to_string()))?;
        Self::new(values)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn classes(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        // Standard layout is guaranteed: values are only built from owned
        // row-major arrays.
        let cols = self.classes();
        &self.values.as_slice().expect("row-major softmax")[i * cols..(i + 1) * cols]
    }

    /// Predicted class per row; ties go to the lowest class index.
    pub fn argmax(&self) -> LabelVector {
        argmax_predictions(self)
    }
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = c;
        }
    }
    best
}

pub fn argmax_predictions(softmax: &SoftmaxMatrix) -> LabelVector {
    let labels = (0..softmax.rows())
        .map(|i| argmax_row(softmax.row(i)))
        .collect();
    LabelVector {
        labels,
        classes: Some(softmax.classes()),
    }
}

/// Class labels, either ground truth or predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    classes: Option<usize>,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Self {
        Self {
            labels,
            classes: None,
        }
    }

    /// Validates that every label lies in `[0, classes)`.
    pub fn with_classes(raw: &[i64], classes: usize) -> Result<Self> {
        let labels = raw
            .iter()
            .enumerate()
            .map(|(index, &label)| {
                if label < 0 || label as u64 >= classes as u64 {
                    Err(Error::LabelRange {
                        index,
                        label,
                        classes,
                    })
                } else {
                    Ok(label as usize)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            labels,
            classes: Some(classes),
        })
    }

    /// Accepts any nonnegative labels.
    pub fn from_i64(raw: &[i64]) -> Result<Self> {
        let labels = raw
            .iter()
            .enumerate()
            .map(|(index, &label)| {
                usize::try_from(label).map_err(|_| Error::LabelRange {
                    index,
                    label,
                    classes: 0,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self::new(labels))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> Option<usize> {
        self.classes
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }
}

/// A test set with its activations, softmax outputs, and labels.
#[derive(Debug, Clone)]
pub struct TestSet {
    pub activations: ActivationMatrix,
    pub softmax: SoftmaxMatrix,
    pub true_labels: LabelVector,
    predicted_labels: LabelVector,
}

impl TestSet {
    pub fn new(
        activations: ActivationMatrix,
        softmax: SoftmaxMatrix,
        true_labels: LabelVector,
    ) -> Result<Self> {
        let n = activations.rows();
        for (what, found) in [
            ("softmax rows", softmax.rows()),
            ("true labels", true_labels.len()),
        ] {
            if found != n {
                return Err(Error::Dimension {
                    what,
                    expected: n,
                    found,
                });
            }
        }
        let predicted_labels = softmax.argmax();
        Ok(Self {
            activations,
            softmax,
            true_labels,
            predicted_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.activations.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn predicted_labels(&self) -> &LabelVector {
        &self.predicted_labels
    }

    /// True where the prediction disagrees with the ground truth.
    pub fn misclassified(&self) -> Vec<bool> {
        self.predicted_labels
            .as_slice()
            .iter()
            .zip(self.true_labels.as_slice())
            .map(|(p, t)| p != t)
            .collect()
    }
}

/// Softmax outputs of `T` stochastic forward passes (e.g. MC-Dropout).
#[derive(Debug, Clone)]
pub struct StochasticPredictionStack {
    passes: Vec<SoftmaxMatrix>,
}

impl StochasticPredictionStack {
    pub fn new(passes: Vec<SoftmaxMatrix>) -> Result<Self> {
        let first = passes
            .first()
            .ok_or_else(|| Error::Input("stochastic stack needs at least one pass".into()))?;
        let (rows, classes) = (first.rows(), first.classes());
        for p in &passes {
            if p.rows() != rows {
                return Err(Error::Dimension {
                    what: "stochastic pass rows",
                    expected: rows,
                    found: p.rows(),
                });
            }
            if p.classes() != classes {
                return Err(Error::Dimension {
                    what: "stochastic pass classes",
                    expected: classes,
                    found: p.classes(),
                });
            }
        }
        Ok(Self { passes })
    }

    /// Builds from a `T × tests × C` tensor.
    pub fn from_array(samples: Array3<f64>) -> Result<Self> {
        let passes = samples
            .axis_iter(Axis(0))
            .map(|slice| SoftmaxMatrix::new(slice.to_owned()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(passes)
    }

    pub fn passes(&self) -> &[SoftmaxMatrix] {
        &self.passes
    }

    pub fn samples(&self) -> usize {
        self.passes.len()
    }

    pub fn tests(&self) -> usize {
        self.passes[0].rows()
    }

    pub fn classes(&self) -> usize {
        self.passes[0].classes()
    }
}

fn standard_layout(values: Array2<f64>) -> Array2<f64> {
    if values.is_standard_layout() {
        values
    } else {
        values.as_standard_layout().into_owned()
    }
}

fn check_finite(values: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), v) in values.indexed_iter() {
        if v.is_nan() {
            return Err(Error::NaN { row, col });
        }
        if v.is_infinite() {
            return Err(Error::Input(format!(
                "infinite value at row {row}, column {col}"
            )));
        }
    }
    Ok(())
}

fn check_layer_offsets(offsets: &[usize], cols: usize) -> Result<()> {
    if offsets.first() != Some(&0) {
        return Err(Error::Layers("offsets must start at 0".into()));
    }
    if offsets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Layers("offsets must be strictly increasing".into()));
    }
    let last = *offsets.last().unwrap();
    if last >= cols && !(cols == 0 && offsets.len() == 1) {
        return Err(Error::Layers(format!(
            "last layer starting at column {last} is empty ({cols} columns)"
        )));
    }
    Ok(())
}
