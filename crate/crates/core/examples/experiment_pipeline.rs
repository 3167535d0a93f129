//! A full experiment through the command-line front end: write recorded
//! traces for two runs, describe the experiment in JSON, then `fit`,
//! `prioritize`, `evaluate`, and `stats`.
//!
//! Run with `cargo run --example experiment_pipeline`. The same steps work
//! from a shell with the `dnn-tip` binary.

use std::error::Error;

use dnn_tip::cli;
use dnn_tip::synthetic::{Scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let mut runs = Vec::new();
    for seed in [1u64, 2] {
        let data_dir = dir.path().join(format!("data-{seed}"));
        let scenario = Scenario::generate(&ScenarioConfig {
            seed,
            dropout_passes: 20,
            ..Default::default()
        })?;
        let paths = scenario.write_npy_files(&data_dir)?;
        runs.push(serde_json::json!({"name": format!("model-{seed}"), "seed": seed, "data": paths}));
    }
    let config = serde_json::json!({
        "runs": runs,
        "approaches": ["NAC-0.75-CTM", "KMNC-2-CAM", "DSA", "PC-MDSA", "LSA-CAM", "DeepGini", "PCS", "MC-Dropout"],
        "selection_fractions": [0.1, 0.2],
        "out_dir": "out",
    });
    let config_path = dir.path().join("experiment.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config)?)?;

    for command in ["fit", "prioritize", "evaluate", "stats"] {
        let code = cli::run(["dnn-tip", command, "--config", config_path.to_str().unwrap(), "--threads", "2"]);
        println!("dnn-tip {command} -> exit {code}");
        assert_eq!(code, cli::EXIT_OK);
    }

    let out = dir.path().join("out");
    println!("\napfd.csv:\n{}", std::fs::read_to_string(out.join("apfd.csv"))?);
    println!("stats.csv:\n{}", std::fs::read_to_string(out.join("stats.csv"))?);

    // Configuration mistakes exit with 2, data problems with 3.
    std::fs::write(&config_path, r#"{"approaches": ["NAC-0.75"]}"#)?;
    println!("bad approach -> exit {}", cli::run(["dnn-tip", "fit", "--config", config_path.to_str().unwrap()]));
    let missing = serde_json::json!({"runs": [{"name": "x", "seed": 0, "data": {
        "train_activations": "nope.npy", "train_labels": "nope.npy", "test_activations": "nope.npy",
        "test_softmax": "nope.npy", "test_labels": "nope.npy"}}], "approaches": ["DSA"]});
    std::fs::write(&config_path, missing.to_string())?;
    println!("missing data -> exit {}", cli::run(["dnn-tip", "fit", "--config", config_path.to_str().unwrap()]));
    Ok(())
}
