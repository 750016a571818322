//! One round of complementary sample selection: score the unlabeled pool,
//! pick oracle queries from the three buckets and pseudo-label the confident
//! remainder.

use ceal::orchestrator::{init_pools, score_pool, RunConfig};
use ceal::predictor::{RefPredictor, StochasticPredictor};
use ceal::rng::{self, Phase};
use ceal::selection::{pseudo_threshold, select_complementary};
use ceal::synthdata::{generate_samples, SynthParams};

fn main() -> ceal::Result<()> {
    let data = generate_samples(300, &SynthParams::default(), 21)?;
    let config = RunConfig {
        n_labeled: 60,
        n_unlabeled: 200,
        n_test: 40,
        ..RunConfig::default()
    };
    let pool = init_pools(&data, &config)?;
    let (_, train) = pool.training_set();
    let mut model = RefPredictor::new(config.mc.dropout_p);
    model.train(&train, &config.train, &mut rng::seeded(1))?;

    let scored = score_pool(&pool, &model, &config, 0)?;
    let empties = scored.iter().filter(|r| r.is_empty_prediction()).count();
    println!("scored {} pool samples, {empties} with no detection", scored.len());

    let mut r = rng::stream(config.seed, &[0, Phase::Select as u64]);
    let sel = select_complementary(&scored, &config.quotas, &config.pseudo, 0, &mut r)?;
    let score_of = |id: u64| scored.iter().find(|s| s.id == id).map_or(f64::NAN, |s| s.raw_score);

    println!("no-detection queries: {:?}", sel.no_detection);
    println!("most-uncertain queries (highest raw score first):");
    for id in &sel.most_uncertain {
        println!("  {id:>4}  raw {:.3}", score_of(*id));
    }
    println!("random queries: {:?}", sel.random);
    println!(
        "{} pseudo-labels below threshold {:.2}; {} oracle queries in total",
        sel.pseudo.len(),
        pseudo_threshold(&config.pseudo, 0),
        sel.oracle_count()
    );
    Ok(())
}
