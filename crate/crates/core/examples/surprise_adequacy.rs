//! Surprise adequacy: every variant, plain and per-class, used both as a
//! score and as surprise coverage. Also shows the model container.
//!
//! Run with `cargo run --example surprise_adequacy`.

use std::error::Error;

use dnn_tip::eval::apfd;
use dnn_tip::prioritize::{cam_order, ctm_order, score_order};
use dnn_tip::surprise::{fit_sa, load_model, sa_score, sa_score_batched, save_model, surprise_profile, SaConfig, SaVariant};
use dnn_tip::synthetic::{Scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let scenario = Scenario::generate(&ScenarioConfig::default())?;
    let faults = scenario.misclassified();
    let predicted = scenario.test_softmax.argmax();

    println!("{:<9} {:>11} {:>9} {:>9} {:>7}", "approach", "APFD score", "APFD CTM", "APFD CAM", "zeros");
    for per_class in [false, true] {
        for variant in SaVariant::ALL {
            let cfg = SaConfig::new(variant).per_class(per_class);
            let model = fit_sa(&scenario.train_activations, &scenario.train_labels, &cfg)?;
            let scores = sa_score(&model, &scenario.test_activations, &predicted)?;
            let profile = surprise_profile(&scores, 1000, None)?;
            let name = if per_class { format!("PC-{variant}") } else { variant.to_string() };
            println!(
                "{:<9} {:>11.4} {:>9.4} {:>9.4} {:>7}",
                name,
                apfd(&score_order(&scores.scores)?, &faults)?.apfd,
                apfd(&ctm_order(&profile), &faults)?.apfd,
                apfd(&cam_order(&profile), &faults)?.apfd,
                scores.graceful_zeros,
            );
        }
    }

    // DSA can be scored in parallel chunks; the result is identical.
    let dsa = fit_sa(&scenario.train_activations, &scenario.train_labels, &SaConfig::new(SaVariant::Dsa))?;
    let sequential = sa_score(&dsa, &scenario.test_activations, &predicted)?;
    let parallel = sa_score_batched(&dsa, &scenario.test_activations, &predicted, 16, 4)?;
    assert_eq!(sequential, parallel);

    // Fitted models round-trip through a versioned binary container.
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("pc-mdsa.tipsam");
    let model = fit_sa(
        &scenario.train_activations,
        &scenario.train_labels,
        &SaConfig::new(SaVariant::Mdsa).per_class(true),
    )?;
    save_model(&path, &model)?;
    assert_eq!(load_model(&path)?, model);
    println!("saved and reloaded PC-MDSA ({} bytes)", std::fs::metadata(&path)?.len());
    Ok(())
}
