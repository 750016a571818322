//! Full active-learning run at desk scale, CEAL next to the random-acquisition
//! baseline on the same data and seed.
//!
//! ```text
//! cargo run --release --example active_learning_loop -- [ITERATIONS]
//! ```

use ceal::orchestrator::{run_with, RunConfig, Strategy};
use ceal::predictor::RefPredictor;
use ceal::synthdata::{generate_samples, SynthParams};

fn main() -> ceal::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let data = generate_samples(500, &SynthParams::default(), 3)?;
    for strategy in [Strategy::Ceal, Strategy::Random] {
        let config = RunConfig {
            n_labeled: 150,
            n_unlabeled: 250,
            n_test: 100,
            iterations,
            strategy,
            ..RunConfig::default()
        };
        let log = run_with(&config, &data, || RefPredictor::new(0.5), |o| {
            eprintln!(
                "[{}] iteration {} done: {} labeled, {} pseudo",
                strategy.as_str(),
                o.record.iteration,
                o.record.n_labeled,
                o.record.n_pseudo
            );
        })?;
        println!(
            "== {} (seed model mean Dice {:.4}, {} oracle queries)",
            strategy.as_str(),
            log.initial_test_dice.0,
            log.oracle_queries
        );
        print!("{}", String::from_utf8_lossy(&log.to_csv()?));
    }
    Ok(())
}
