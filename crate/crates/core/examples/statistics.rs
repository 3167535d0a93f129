//! Comparing approaches across runs: Wilcoxon signed-rank test, paired
//! Vargha-Delaney A12, and Bonferroni correction.
//!
//! Each run is a separately generated scenario standing in for one trained
//! model.
//!
//! Run with `cargo run --example statistics`.

use std::error::Error;

use dnn_tip::eval::{apfd, pairwise_comparisons, stats_matrix, wilcoxon_signed_rank};
use dnn_tip::prioritize::score_order;
use dnn_tip::surprise::{fit_sa, sa_score, SaConfig, SaVariant};
use dnn_tip::synthetic::{Scenario, ScenarioConfig};
use dnn_tip::uncertainty::{deepgini, pcs};

fn main() -> Result<(), Box<dyn Error>> {
    let runs = 8;
    let mut table: Vec<(String, Vec<f64>)> = ["DeepGini", "PCS", "MDSA"]
        .iter()
        .map(|n| (n.to_string(), Vec::new()))
        .collect();
    for seed in 0..runs {
        let s = Scenario::generate(&ScenarioConfig {
            seed,
            train: 300,
            test: 200,
            ..Default::default()
        })?;
        let faults = s.misclassified();
        let mdsa = fit_sa(&s.train_activations, &s.train_labels, &SaConfig::new(SaVariant::Mdsa))?;
        let scores = [
            deepgini(&s.test_softmax).scores,
            pcs(&s.test_softmax).scores,
            sa_score(&mdsa, &s.test_activations, &s.test_softmax.argmax())?.scores,
        ];
        for ((_, values), sc) in table.iter_mut().zip(scores) {
            values.push(apfd(&score_order(&sc)?, &faults)?.apfd);
        }
    }

    println!("{} approaches -> Bonferroni factor {}", table.len(), pairwise_comparisons(table.len()));
    for s in stats_matrix(&table)? {
        println!(
            "{:<8} vs {:<8} p={:.4} p_bonf={:.4} A12={:.3}",
            s.approach_a, s.approach_b, s.p_value, s.p_value_bonferroni, s.a12
        );
    }

    let w = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[0.0; 6])?;
    println!("six positive differences: exact two-sided p = {}", w.p_value);
    println!("39 approaches would need {} comparisons", pairwise_comparisons(39));
    Ok(())
}

#[cfg(test)]
mod tests {
    #[test]
    fn example_runs() {
        super::main().unwrap();
    }
}
