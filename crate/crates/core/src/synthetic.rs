//! Seeded synthetic traces for demonstrations, tests, and benchmarks.
//!
//! A scenario stands in for a trained classifier: each class has a
//! Gaussian cluster of activation traces, and the "model" predicts by a
//! softmax over negative squared distances to the class centres. Some test
//! inputs are pulled towards a foreign class, so they are both more
//! surprising and more often misclassified, which gives every
//! prioritization approach something to find.

use std::path::Path;

use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{ActivationMatrix, LabelVector, SoftmaxMatrix, StochasticPredictionStack};
use crate::error::{Error, Result};
use crate::experiment::DatasetPaths;
use crate::io::{write_activations, write_labels, write_npy};

/// Shape and difficulty of a synthetic scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub train: usize,
    pub test: usize,
    pub classes: usize,
    /// Neurons per layer; the trace concatenates all layers.
    pub layer_widths: Vec<usize>,
    /// Distance scale between class centres.
    pub separation: f64,
    /// Within-class standard deviation.
    pub spread: f64,
    /// Share of test inputs pulled towards another class.
    pub shifted_fraction: f64,
    /// Softmax temperature of the nearest-centre "model".
    pub temperature: f64,
    /// Stochastic forward passes to simulate; 0 for none.
    pub dropout_passes: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            train: 600,
            test: 300,
            classes: 3,
            layer_widths: vec![6, 4],
            separation: 3.0,
            spread: 1.0,
            shifted_fraction: 0.3,
            temperature: 2.0,
            dropout_passes: 0,
            seed: 0,
        }
    }
}

/// Generated training and test data.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub train_activations: ActivationMatrix,
    pub train_labels: LabelVector,
    pub test_activations: ActivationMatrix,
    pub test_softmax: SoftmaxMatrix,
    pub test_labels: LabelVector,
    pub stochastic: Option<StochasticPredictionStack>,
}

impl Scenario {
    pub fn generate(cfg: &ScenarioConfig) -> Result<Self> {
        if cfg.classes < 2 || cfg.layer_widths.is_empty() || cfg.layer_widths.contains(&0) {
            return Err(Error::Config(
                "a scenario needs at least 2 classes and nonempty layers".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let dims: usize = cfg.layer_widths.iter().sum();
        let mut offsets = Vec::with_capacity(cfg.layer_widths.len());
        let mut acc = 0;
        for w in &cfg.layer_widths {
            offsets.push(acc);
            acc += w;
        }
        let centres = normal_matrix(&mut rng, cfg.classes, dims) * cfg.separation;

        let sample = |rng: &mut ChaCha8Rng, n: usize, shifted: f64| {
            let mut values = Array2::zeros((n, dims));
            let mut labels = Vec::with_capacity(n);
            for i in 0..n {
                let c = i % cfg.classes;
                let mut point = centres.row(c).to_owned();
                if rng.gen::<f64>() < shifted {
                    let other = (c + 1 + rng.gen_range(0..cfg.classes - 1)) % cfg.classes;
                    let w: f64 = rng.gen_range(0.3..0.8);
                    point = &point * (1.0 - w) + &centres.row(other) * w;
                }
                for j in 0..dims {
                    let z: f64 = rng.sample(StandardNormal);
                    values[[i, j]] = point[j] + cfg.spread * z;
                }
                labels.push(c);
            }
            (values, labels)
        };
        let (train_values, train_labels) = sample(&mut rng, cfg.train, 0.0);
        let (test_values, test_labels) = sample(&mut rng, cfg.test, cfg.shifted_fraction);

        let logits = nearest_centre_logits(&test_values, &centres, cfg.temperature);
        let test_softmax = SoftmaxMatrix::new(softmax_rows(&logits))?;
        let stochastic = if cfg.dropout_passes > 0 {
            let (n, c) = logits.dim();
            let mut stack = Array3::zeros((cfg.dropout_passes, n, c));
            for t in 0..cfg.dropout_passes {
                let mut noisy = logits.clone();
                noisy.mapv_inplace(|v| v + rng.sample::<f64, _>(StandardNormal));
                stack.index_axis_mut(ndarray::Axis(0), t).assign(&softmax_rows(&noisy));
            }
            Some(StochasticPredictionStack::from_array(stack)?)
        } else {
            None
        };

        Ok(Self {
            train_activations: ActivationMatrix::new(train_values, offsets.clone())?,
            train_labels: labels(&train_labels, cfg.classes)?,
            test_activations: ActivationMatrix::new(test_values, offsets)?,
            test_softmax,
            test_labels: labels(&test_labels, cfg.classes)?,
            stochastic,
        })
    }

    /// Misclassification flags of the simulated model.
    pub fn misclassified(&self) -> Vec<bool> {
        let predicted = self.test_softmax.argmax();
        self.test_labels
            .as_slice()
            .iter()
            .zip(predicted.as_slice())
            .map(|(t, p)| t != p)
            .collect()
    }

    /// Writes the scenario as `.npy` files (plus layer sidecars) into `dir`
    /// and returns the paths in configuration form.
    pub fn write_npy_files(&self, dir: &Path) -> Result<DatasetPaths> {
        let paths = DatasetPaths {
            train_activations: dir.join("train_ats.npy"),
            train_labels: dir.join("train_labels.npy"),
            test_activations: dir.join("test_ats.npy"),
            test_softmax: dir.join("test_softmax.npy"),
            test_labels: dir.join("test_labels.npy"),
            stochastic_predictions: self.stochastic.as_ref().map(|_| dir.join("dropout.npy")),
        };
        write_activations(&paths.train_activations, &self.train_activations)?;
        write_labels(&paths.train_labels, self.train_labels.as_slice())?;
        write_activations(&paths.test_activations, &self.test_activations)?;
        write_npy(&paths.test_softmax, &self.test_softmax.values())?;
        write_labels(&paths.test_labels, self.test_labels.as_slice())?;
        if let (Some(stack), Some(path)) = (&self.stochastic, &paths.stochastic_predictions) {
            let (t, n, c) = (stack.samples(), stack.tests(), stack.classes());
            let mut all = Array3::zeros((t, n, c));
            for (k, pass) in stack.passes().iter().enumerate() {
                all.index_axis_mut(ndarray::Axis(0), k).assign(&pass.values());
            }
            write_npy(path, &all)?;
        }
        Ok(paths)
    }
}

fn labels(raw: &[usize], classes: usize) -> Result<LabelVector> {
    let raw: Vec<i64> = raw.iter().map(|&l| l as i64).collect();
    LabelVector::with_classes(&raw, classes)
}

/// A `rows × cols` matrix of independent standard normal draws.
pub fn normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Softmax rows drawn from random normal logits scaled by `sharpness`.
pub fn random_softmax<R: Rng>(rng: &mut R, rows: usize, classes: usize, sharpness: f64) -> SoftmaxMatrix {
    let logits = normal_matrix(rng, rows, classes) * sharpness;
    SoftmaxMatrix::new(softmax_rows(&logits)).expect("softmax rows are valid by construction")
}

fn nearest_centre_logits(points: &Array2<f64>, centres: &Array2<f64>, temperature: f64) -> Array2<f64> {
    let mut logits = Array2::zeros((points.nrows(), centres.nrows()));
    for (i, p) in points.rows().into_iter().enumerate() {
        for (c, m) in centres.rows().into_iter().enumerate() {
            let d: f64 = p.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum();
            logits[[i, c]] = -d / temperature;
        }
    }
    logits
}

/// Row-wise numerically stable softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row /= sum;
    }
    out
}

/// A length-`n` vector of standard normal draws.
pub fn normal_vector<R: Rng>(rng: &mut R, n: usize) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || rng.sample(StandardNormal))
}
