//! APFD of a ranking, and why 0.5 is the bar a random ordering sets.
//!
//! Run with `cargo run --example apfd_evaluation`.

use std::error::Error;

use dnn_tip::eval::apfd;
use dnn_tip::prioritize::{score_order, Ranking};
use dnn_tip::synthetic::{Scenario, ScenarioConfig};
use dnn_tip::uncertainty::deepgini;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn Error>> {
    // Four tests, the two misclassified ones ranked first.
    let ranking = Ranking {
        order: vec![0, 1, 2, 3],
        scores: vec![4.0, 3.0, 2.0, 1.0],
    };
    let r = apfd(&ranking, &[true, true, false, false])?;
    println!("N={} M={} APFD={}", r.n_tests, r.n_faults, r.apfd);

    // A useful ranking beats random orderings.
    let scenario = Scenario::generate(&ScenarioConfig::default())?;
    let faults = scenario.misclassified();
    let gini = apfd(&score_order(&deepgini(&scenario.test_softmax).scores)?, &faults)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 200;
    let mut order: Vec<usize> = (0..faults.len()).collect();
    let mut total = 0.0;
    for _ in 0..trials {
        order.shuffle(&mut rng);
        let random = Ranking {
            order: order.clone(),
            scores: vec![0.0; faults.len()],
        };
        total += apfd(&random, &faults)?.apfd;
    }
    println!("DeepGini APFD {:.4}, mean random APFD {:.4}", gini.apfd, total / trials as f64);

    // With no misclassified tests APFD is undefined, and says so.
    println!("no faults: {}", apfd(&ranking, &[false; 4]).unwrap_err());
    Ok(())
}
