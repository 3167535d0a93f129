//! Softmax- and dropout-based uncertainty scores. Every metric is oriented
//! so that a higher score means the prediction is more likely wrong.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{argmax_row, SoftmaxMatrix, StochasticPredictionStack};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UncertaintyMetric {
    DeepGini,
    VanillaSm,
    Pcs,
    Entropy,
    McDropoutVr,
}

impl UncertaintyMetric {
    pub const ALL: [UncertaintyMetric; 5] = [
        UncertaintyMetric::DeepGini,
        UncertaintyMetric::VanillaSm,
        UncertaintyMetric::Pcs,
        UncertaintyMetric::Entropy,
        UncertaintyMetric::McDropoutVr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UncertaintyMetric::DeepGini => "DeepGini",
            UncertaintyMetric::VanillaSm => "VanillaSM",
            UncertaintyMetric::Pcs => "PCS",
            UncertaintyMetric::Entropy => "Entropy",
            UncertaintyMetric::McDropoutVr => "MC-Dropout",
        }
    }

    /// True for metrics computed from a single softmax output.
    pub fn uses_softmax(self) -> bool {
        self != UncertaintyMetric::McDropoutVr
    }

    /// Scores a softmax matrix; `None` for the dropout metric.
    pub fn score_softmax(self, softmax: &SoftmaxMatrix) -> Option<UncertaintyScores> {
        Some(match self {
            UncertaintyMetric::DeepGini => deepgini(softmax),
            UncertaintyMetric::VanillaSm => vanilla_softmax(softmax),
            UncertaintyMetric::Pcs => pcs(softmax),
            UncertaintyMetric::Entropy => entropy(softmax),
            UncertaintyMetric::McDropoutVr => return None,
        })
    }
}

impl fmt::Display for UncertaintyMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UncertaintyMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "deepgini" | "gini" => UncertaintyMetric::DeepGini,
            "vanillasm" | "vanillasoftmax" | "softmax" => UncertaintyMetric::VanillaSm,
            "pcs" | "predictionconfidencescore" => UncertaintyMetric::Pcs,
            "entropy" | "softmaxentropy" => UncertaintyMetric::Entropy,
            "mcdropout" | "mcdropoutvr" | "variationratio" => UncertaintyMetric::McDropoutVr,
            _ => return Err(Error::Config(format!("unknown uncertainty metric {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyScores {
    pub metric: UncertaintyMetric,
    pub scores: Vec<f64>,
}

fn per_row(softmax: &SoftmaxMatrix, metric: UncertaintyMetric, f: impl Fn(&[f64]) -> f64) -> UncertaintyScores {
    UncertaintyScores {
        metric,
        scores: (0..softmax.rows()).map(|i| f(softmax.row(i))).collect(),
    }
}

/// `1 − Σ_c p_c²`.
pub fn deepgini(softmax: &SoftmaxMatrix) -> UncertaintyScores {
    per_row(softmax, UncertaintyMetric::DeepGini, |row| {
        1.0 - row.iter().map(|p| p * p).sum::<f64>()
    })
}

/// `1 − max_c p_c`.
pub fn vanilla_softmax(softmax: &SoftmaxMatrix) -> UncertaintyScores {
    per_row(softmax, UncertaintyMetric::VanillaSm, |row| {
        1.0 - row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    })
}

/// `1 − (top1 − top2)`: one minus the margin between the two most likely
/// classes.
pub fn pcs(softmax: &SoftmaxMatrix) -> UncertaintyScores {
    per_row(softmax, UncertaintyMetric::Pcs, |row| {
        let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &p in row {
            if p > first {
                second = first;
                first = p;
            } else if p > second {
                second = p;
            }
        }
        1.0 - (first - second)
    })
}

/// Shannon entropy in nats, with `0·ln 0 = 0`.
pub fn entropy(softmax: &SoftmaxMatrix) -> UncertaintyScores {
    per_row(softmax, UncertaintyMetric::Entropy, |row| {
        row.iter()
            .filter(|&&p| p > 0.0)
            .fold(0.0, |acc, &p| acc - p * p.ln())
    })
}

/// Variation ratio over `T` stochastic passes: one minus the share of passes
/// predicting the modal class (ties: lowest class index).
pub fn mc_dropout_variation_ratio(stack: &StochasticPredictionStack) -> UncertaintyScores {
    let t = stack.samples();
    let mut counts = vec![0usize; stack.classes()];
    let scores = (0..stack.tests())
        .map(|i| {
            counts.iter_mut().for_each(|c| *c = 0);
            for pass in stack.passes() {
                counts[argmax_row(pass.row(i))] += 1;
            }
            let modal = counts.iter().copied().max().unwrap_or(0);
            1.0 - modal as f64 / t as f64
        })
        .collect();
    UncertaintyScores {
        metric: UncertaintyMetric::McDropoutVr,
        scores,
    }
}
