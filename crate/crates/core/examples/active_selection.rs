//! Picking the top-ranked share of an unlabelled pool for labelling.
//!
//! Run with `cargo run --example active_selection`.

use std::error::Error;

use dnn_tip::eval::select_active;
use dnn_tip::io::write_csv;
use dnn_tip::prioritize::score_order;
use dnn_tip::synthetic::{Scenario, ScenarioConfig};
use dnn_tip::uncertainty::vanilla_softmax;

fn main() -> Result<(), Box<dyn Error>> {
    let scenario = Scenario::generate(&ScenarioConfig {
        test: 500,
        ..Default::default()
    })?;
    let faults = scenario.misclassified();
    let ranking = score_order(&vanilla_softmax(&scenario.test_softmax).scores)?;

    let base_rate = faults.iter().filter(|&&f| f).count() as f64 / faults.len() as f64;
    for fraction in [0.1, 0.2, 0.5] {
        let picked = select_active(&ranking, fraction)?;
        let hit = picked.iter().filter(|&&t| faults[t]).count() as f64 / picked.len() as f64;
        println!(
            "fraction {fraction}: {} inputs selected, {:.1}% misclassified (pool: {:.1}%)",
            picked.len(),
            100.0 * hit,
            100.0 * base_rate
        );
    }

    // The selected indices are what an external retraining job consumes.
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("selected.csv");
    let picked = select_active(&ranking, 0.2)?;
    write_csv(
        &path,
        &["rank", "test_index"],
        picked.iter().enumerate().map(|(r, t)| [(r + 1).to_string(), t.to_string()]),
    )?;
    println!("wrote {} indices to {}", picked.len(), path.display());
    Ok(())
}
