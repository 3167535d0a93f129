//! Neuron coverage criteria turned into test orderings.
//!
//! Fits per-neuron statistics on the training traces, builds the coverage
//! profile of the test set under every criterion, and ranks by total
//! coverage (CTM) and by additional coverage (CAM). APFD shows how early
//! each ordering finds the misclassified inputs.
//!
//! Run with `cargo run --example neuron_coverage`.

use std::error::Error;

use dnn_tip::coverage::{coverage_profile, fit_neuron_stats, stream_profiles, Criterion, NcConfig};
use dnn_tip::eval::apfd;
use dnn_tip::prioritize::{cam_order, ctm_order};
use dnn_tip::synthetic::{Scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let scenario = Scenario::generate(&ScenarioConfig::default())?;
    let faults = scenario.misclassified();
    let stats = fit_neuron_stats(&scenario.train_activations)?;

    let criteria = [
        Criterion::Nac { threshold: 0.75 },
        Criterion::Kmnc { sections: 2 },
        Criterion::Nbc { k: 0.0 },
        Criterion::Snac { k: 0.0 },
        Criterion::Tknc { top: 1 },
    ];
    println!("{:<10} {:>8} {:>10} {:>10}", "criterion", "targets", "APFD CTM", "APFD CAM");
    for criterion in criteria {
        let cfg = NcConfig::new(criterion).with_batch_size(64);
        let profile = coverage_profile(&scenario.test_activations, &stats, &cfg)?;
        let ctm = apfd(&ctm_order(&profile), &faults)?.apfd;
        let cam = apfd(&cam_order(&profile), &faults)?.apfd;
        println!("{:<10} {:>8} {:>10.4} {:>10.4}", criterion.to_string(), profile.targets(), ctm, cam);
    }

    // Large test sets can be streamed batch by batch; the result does not
    // depend on where the batches are cut.
    let cfg = NcConfig::new(Criterion::Kmnc { sections: 2 });
    let whole = coverage_profile(&scenario.test_activations, &stats, &cfg)?;
    let streamed = stream_profiles(scenario.test_activations.split_rows(37), &stats, &cfg)?;
    assert_eq!(whole, streamed);
    println!("streamed profile matches the in-memory one");
    Ok(())
}
