//! Distance-weighted uncertainty scores for a handful of pool samples,
//! including the fallback for empty predictions.

use ceal::distance::score_sample;
use ceal::imaging::binarize;
use ceal::predictor::{RefPredictor, StochasticPredictor, TrainConfig, TrainSample};
use ceal::rng;
use ceal::synthdata::{generate_samples, SynthParams};
use ceal::uncertainty::{mc_predict, McConfig};

fn main() -> ceal::Result<()> {
    let params = SynthParams::default();
    let train: Vec<TrainSample> = generate_samples(40, &params, 10)?
        .into_iter()
        .map(|s| TrainSample { image: s.image, target: s.mask })
        .collect();
    let mut model = RefPredictor::new(0.5);
    model.train(&train, &TrainConfig::default(), &mut rng::seeded(0))?;

    println!("{:>4} {:>8} {:>12} {:>10} {:>6} {:>10}", "id", "gt_area", "pred_area", "raw", "norm", "fallback");
    for s in generate_samples(12, &params, 11)? {
        let (mean, var) = mc_predict(&model, &s.image, &McConfig::default(), &mut rng::seeded(s.id))?;
        let pred = binarize(&mean, 0.5)?;
        let (score, degenerate) = score_sample(&var, &pred)?;
        println!(
            "{:>4} {:>8} {:>12} {:>10.4} {:>6.4} {:>10}",
            s.id,
            s.mask.count(),
            pred.count(),
            score.raw,
            score.normalized,
            degenerate
        );
    }
    Ok(())
}
