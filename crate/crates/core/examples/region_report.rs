//! Uncertainty/accuracy region table for the unlabeled pool after a short run,
//! with a histogram of raw scores.

use ceal::metrics::{region_counts, region_histogram, RegionLabel};
use ceal::orchestrator::{run, RunConfig};
use ceal::predictor::RefPredictor;
use ceal::synthdata::{generate_samples, SynthParams};

fn main() -> ceal::Result<()> {
    let data = generate_samples(300, &SynthParams::default(), 8)?;
    let config = RunConfig {
        n_labeled: 80,
        n_unlabeled: 180,
        n_test: 40,
        iterations: 2,
        ..RunConfig::default()
    };
    let log = run(&config, &data, || RefPredictor::new(0.5))?;
    let rows = &log.final_regions;

    let counts = region_counts(rows);
    let names = [
        (RegionLabel::R1Undetected, "certain but wrong (includes missed lesions)"),
        (RegionLabel::R2UncertainCorrect, "uncertain but correct"),
        (RegionLabel::R3CertainCorrect, "certain and correct"),
        (RegionLabel::R4UncertainWrong, "uncertain and wrong"),
    ];
    for (label, text) in names {
        println!("{} {:>4}  {text}", label.as_str(), counts[label.index()]);
    }

    let scores: Vec<f64> = rows.iter().map(|r| r.score.raw).collect();
    let h = region_histogram(&scores, 8)?;
    let peak = h.counts.iter().copied().max().unwrap_or(1).max(1);
    println!("raw score histogram:");
    for (i, c) in h.counts.iter().enumerate() {
        let bar = "#".repeat(c * 40 / peak);
        println!("  [{:>8.2}, {:>8.2}) {c:>4} {bar}", h.edges[i], h.edges[i + 1]);
    }
    Ok(())
}
