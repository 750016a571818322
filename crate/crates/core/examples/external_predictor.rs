//! Driving the loop's scoring through the external-process protocol.
//!
//! The example doubles as its own external predictor: when invoked as
//! `external_predictor serve <input.pgm> <outdir> <T> <p_d> <seed>` it writes
//! `T` UMAP pass files produced by a reference model trained on startup.

use std::path::Path;

use ceal::distance::score_sample;
use ceal::imaging::{binarize, read_pgm, write_pgm};
use ceal::predictor::{
    external_predict, write_umap, RefPredictor, StochasticPredictor, TrainConfig, TrainSample, UmapFile,
};
use ceal::rng;
use ceal::synthdata::{generate_samples, SynthParams};
use ceal::uncertainty::{McConfig, VarianceAccumulator};

/// The served model: a reference predictor trained on a fixed synthetic set,
/// so every invocation behaves identically.
fn served_model() -> ceal::Result<RefPredictor> {
    let train: Vec<TrainSample> = generate_samples(40, &SynthParams::default(), 99)?
        .into_iter()
        .map(|s| TrainSample { image: s.image, target: s.mask })
        .collect();
    let mut m = RefPredictor::new(0.5);
    m.train(&train, &TrainConfig::default(), &mut rng::seeded(99))?;
    Ok(m)
}

fn serve(args: &[String]) -> ceal::Result<()> {
    let [input, outdir, t, p, seed] = args else {
        return Err(ceal::Error::Argument("usage: serve <input> <outdir> <T> <p_d> <seed>".into()));
    };
    let bytes = std::fs::read(input).map_err(|e| ceal::Error::io(input, e))?;
    let img = read_pgm(&bytes)?;
    let t: usize = t.parse().map_err(|_| ceal::Error::Argument("bad T".into()))?;
    let p: f64 = p.parse().map_err(|_| ceal::Error::Argument("bad p_d".into()))?;
    let seed: u64 = seed.parse().map_err(|_| ceal::Error::Argument("bad seed".into()))?;
    let model = served_model()?;
    let mut r = rng::seeded(seed);
    for i in 0..t {
        let pass = if p > 0.0 {
            model.predict_stochastic(&img, p, &mut r)?
        } else {
            model.predict_deterministic(&img)?
        };
        let path = Path::new(outdir).join(format!("pass_{i:03}.umap"));
        let bytes = write_umap(&UmapFile::from_f64(pass.width(), pass.height(), pass.data()));
        std::fs::write(&path, bytes).map_err(|e| ceal::Error::io(&path, e))?;
    }
    Ok(())
}

fn main() -> ceal::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    if args.get(1).map(String::as_str) == Some("serve") {
        return serve(&args[2..]);
    }

    let exe = std::env::current_exe().map_err(|e| ceal::Error::io("current_exe", e))?;
    let cmd = format!("{} serve", exe.display());
    let work = std::env::temp_dir().join("ceal_example_external");
    std::fs::create_dir_all(&work).map_err(|e| ceal::Error::io(&work, e))?;

    let cfg = McConfig::default();
    for s in generate_samples(4, &SynthParams::default(), 5)? {
        let img_path = work.join(format!("img_{:05}.pgm", s.id));
        std::fs::write(&img_path, write_pgm(&s.image)).map_err(|e| ceal::Error::io(&img_path, e))?;
        let passes = external_predict(&cmd, &img_path, cfg.t_steps, cfg.dropout_p, s.id, &work.join("passes"))?;

        let mut acc = VarianceAccumulator::new(s.image.width(), s.image.height());
        for p in &passes {
            acc.update(p)?;
        }
        let (mean, var) = acc.finalize()?;
        let pred = binarize(&mean, 0.5)?;
        let (score, degenerate) = score_sample(&var, &pred)?;
        println!(
            "sample {}: {} passes, predicted area {:>3} (truth {:>3}), raw score {:.4}{}",
            s.id,
            passes.len(),
            pred.count(),
            s.mask.count(),
            score.raw,
            if degenerate { " (fallback)" } else { "" }
        );
    }
    Ok(())
}
