//! Reading and writing the on-disk formats: `.npy` arrays with a layer
//! sidecar, the CSV fallback, bit-packed coverage profiles, and scores.
//!
//! Run with `cargo run --example array_io`.

use std::error::Error;

use dnn_tip::coverage::{coverage_profile, fit_neuron_stats, read_profile, write_profile, Criterion, NcConfig};
use dnn_tip::io::{layer_sidecar_path, load_activations, load_softmax, write_activations, write_scores_csv};
use dnn_tip::synthetic::{Scenario, ScenarioConfig};
use dnn_tip::uncertainty::deepgini;

fn main() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let scenario = Scenario::generate(&ScenarioConfig::default())?;

    // Activations with two layers: the layer boundaries travel in a JSON
    // sidecar next to the array.
    let ats = dir.path().join("test_ats.npy");
    write_activations(&ats, &scenario.test_activations)?;
    let sidecar = std::fs::read_to_string(layer_sidecar_path(&ats))?;
    println!("sidecar {}: {sidecar}", layer_sidecar_path(&ats).display());
    let loaded = load_activations(&ats)?;
    assert_eq!(loaded, scenario.test_activations);
    println!("loaded {} x {} activations, layers {:?}", loaded.rows(), loaded.cols(), loaded.layer_offsets());

    // CSV fallback: one header row, then numbers.
    let csv = dir.path().join("softmax.csv");
    std::fs::write(&csv, "p0,p1,p2\n0.7,0.2,0.1\n0.1,0.1,0.8\n")?;
    let softmax = load_softmax(&csv)?;
    println!("CSV softmax: {} rows, {} classes", softmax.rows(), softmax.classes());

    // Malformed input is rejected with a typed error, never coerced.
    std::fs::write(&csv, "p0,p1\n0.9,0.3\n")?;
    println!("bad row sum: {}", load_softmax(&csv).unwrap_err());

    // Coverage profiles are stored bit-packed behind a JSON header.
    let stats = fit_neuron_stats(&scenario.train_activations)?;
    let profile = coverage_profile(&loaded, &stats, &NcConfig::new(Criterion::Kmnc { sections: 2 }))?;
    let prof_path = dir.path().join("kmnc2.tipcov");
    write_profile(&prof_path, &profile)?;
    let size = std::fs::metadata(&prof_path)?.len();
    println!(
        "profile {} tests x {} targets written in {size} bytes",
        profile.tests(),
        profile.targets()
    );
    assert_eq!(read_profile(&prof_path)?, profile);

    // Per-test scores as test_index,score.
    let scores_path = dir.path().join("deepgini.csv");
    write_scores_csv(&scores_path, &deepgini(&scenario.test_softmax).scores)?;
    let head: Vec<String> = std::fs::read_to_string(&scores_path)?.lines().take(3).map(str::to_owned).collect();
    println!("scores CSV starts: {head:?}");
    Ok(())
}
