//! Monte Carlo dropout on the reference predictor: mean prediction and
//! per-pixel variance for one held-out image.

use ceal::imaging::binarize;
use ceal::metrics::dice;
use ceal::predictor::{RefPredictor, StochasticPredictor, TrainConfig, TrainSample};
use ceal::rng;
use ceal::synthdata::{generate_samples, SynthParams};
use ceal::uncertainty::{mc_predict, McConfig};

fn main() -> ceal::Result<()> {
    let params = SynthParams::default();
    let train: Vec<TrainSample> = generate_samples(60, &params, 1)?
        .into_iter()
        .map(|s| TrainSample { image: s.image, target: s.mask })
        .collect();
    let mut model = RefPredictor::new(0.5);
    model.train(&train, &TrainConfig::default(), &mut rng::seeded(2))?;

    let test = generate_samples(5, &params, 3)?;
    let s = test.iter().find(|s| !s.mask.is_all_zero()).expect("a lesion sample");
    let (mean, var) = mc_predict(&model, &s.image, &McConfig::default(), &mut rng::seeded(4))?;
    let pred = binarize(&mean, 0.5)?;
    println!("sample {}: Dice of the MC mean {:.3}", s.id, dice(&pred, &s.mask)?);

    let vmax = var.data().iter().cloned().fold(0.0, f64::max);
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    println!("variance (max {vmax:.4}), darker = more uncertain:");
    for y in 0..var.height() {
        let row: String = (0..var.width())
            .map(|x| {
                let v = if vmax > 0.0 { var.get(x, y) / vmax } else { 0.0 };
                shades[((v * 9.0).round() as usize).min(9)]
            })
            .collect();
        println!("  |{row}|");
    }
    Ok(())
}
