//! Softmax-based uncertainty scores and the Monte-Carlo dropout variation
//! ratio, each used to rank the test set.
//!
//! Run with `cargo run --example uncertainty_scores`.

use std::error::Error;

use dnn_tip::data::SoftmaxMatrix;
use dnn_tip::eval::apfd;
use dnn_tip::prioritize::score_order;
use dnn_tip::synthetic::{Scenario, ScenarioConfig};
use dnn_tip::uncertainty::{mc_dropout_variation_ratio, UncertaintyMetric};

fn main() -> Result<(), Box<dyn Error>> {
    // The metrics on a few hand-written outputs.
    let softmax = SoftmaxMatrix::from_rows(&[
        vec![1.0, 0.0, 0.0],
        vec![0.5, 0.3, 0.2],
        vec![0.4, 0.4, 0.2],
    ])?;
    for metric in UncertaintyMetric::ALL.into_iter().filter(|m| m.uses_softmax()) {
        let s = metric.score_softmax(&softmax).expect("softmax metric");
        println!("{:<10} {:?}", metric.name(), s.scores);
    }

    // Ranking a synthetic test set.
    let scenario = Scenario::generate(&ScenarioConfig {
        dropout_passes: 50,
        ..Default::default()
    })?;
    let faults = scenario.misclassified();
    for metric in UncertaintyMetric::ALL {
        let scores = match metric.score_softmax(&scenario.test_softmax) {
            Some(s) => s,
            None => mc_dropout_variation_ratio(scenario.stochastic.as_ref().expect("dropout passes")),
        };
        let result = apfd(&score_order(&scores.scores)?, &faults)?;
        println!("{:<10} APFD {:.4}", metric.name(), result.apfd);
    }
    Ok(())
}
