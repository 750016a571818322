//! Stochastic segmenters.
//!
//! [`StochasticPredictor`] is what the active-learning loop drives. Two
//! implementations ship: [`RefPredictor`], a per-pixel logistic model on
//! patch features with inverted feature dropout, and [`ExternalPredictor`],
//! which shells out to any program speaking the UMAP pass protocol.

mod external;
mod features;

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, GrayImage, ProbMap};
use crate::rng::Rng;
use crate::uncertainty::McConfig;

pub use external::{external_predict, read_umap, write_umap, ExternalPredictor, UmapFile, UMAP_MAGIC};
pub use features::{extract_features, FeatureGrid, BOX_RADII, FEATURE_COUNT};

/// Image plus the mask used as its training target (ground truth or pseudo-label).
#[derive(Clone, Debug)]
pub struct TrainSample {
    pub image: Arc<GrayImage>,
    pub target: Arc<BinaryMask>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Adds the horizontal, vertical and combined flips of every sample.
    pub augment: bool,
    pub batch_size: usize,
    pub max_pixels_per_image: usize,
    /// Apply feature dropout during SGD (one mask per batch).
    pub dropout: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2,
            learning_rate: 0.1,
            augment: true,
            batch_size: 256,
            max_pixels_per_image: 4096,
            dropout: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Argument("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.max_pixels_per_image == 0 {
            return Err(Error::Argument(
                "batch_size and max_pixels_per_image must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A segmenter that can be trained and queried with or without dropout.
pub trait StochasticPredictor: Send + Sync {
    fn train(&mut self, samples: &[TrainSample], cfg: &TrainConfig, rng: &mut Rng) -> Result<()>;

    /// One forward pass with a fresh dropout realisation.
    fn predict_stochastic(&self, img: &GrayImage, dropout_p: f64, rng: &mut Rng) -> Result<ProbMap>;

    fn predict_deterministic(&self, img: &GrayImage) -> Result<ProbMap>;

    /// Feeds `cfg.t_steps` stochastic passes to `sink`. Implementations that
    /// produce all passes at once (external processes) override this.
    fn stochastic_passes(
        &self,
        img: &GrayImage,
        cfg: &McConfig,
        rng: &mut Rng,
        sink: &mut dyn FnMut(ProbMap) -> Result<()>,
    ) -> Result<()> {
        for _ in 0..cfg.t_steps {
            sink(self.predict_stochastic(img, cfg.dropout_p, rng)?)?;
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Logistic regression over [`FEATURE_COUNT`] patch features plus a bias.
///
/// Features are standardised as `(x - shift) / scale` before the weights and
/// dropout apply. A model built with [`RefPredictor::new`] fits the
/// standardisation to its first training set and keeps it afterwards; models
/// built from explicit weights use the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct RefPredictor {
    weights: [f64; FEATURE_COUNT + 1],
    shift: [f64; FEATURE_COUNT],
    scale: [f64; FEATURE_COUNT],
    standardized: bool,
    dropout_p: f64,
}

impl RefPredictor {
    /// Zero-initialised model.
    pub fn new(dropout_p: f64) -> Self {
        assert!(
            dropout_p > 0.0 && dropout_p < 1.0,
            "dropout_p must be in (0, 1), got {dropout_p}"
        );
        Self {
            weights: [0.0; FEATURE_COUNT + 1],
            shift: [0.0; FEATURE_COUNT],
            scale: [1.0; FEATURE_COUNT],
            standardized: false,
            dropout_p,
        }
    }

    pub fn with_weights(weights: [f64; FEATURE_COUNT + 1], dropout_p: f64) -> Result<Self> {
        if !(dropout_p > 0.0 && dropout_p < 1.0) {
            return Err(Error::Argument(format!("dropout_p {dropout_p} outside (0, 1)")));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Argument("weights must be finite".into()));
        }
        Ok(Self {
            weights,
            shift: [0.0; FEATURE_COUNT],
            scale: [1.0; FEATURE_COUNT],
            standardized: true,
            dropout_p,
        })
    }

    /// Per-feature `(shift, scale)` applied before the weights.
    pub fn standardization(&self) -> ([f64; FEATURE_COUNT], [f64; FEATURE_COUNT]) {
        (self.shift, self.scale)
    }

    pub fn set_standardization(&mut self, shift: [f64; FEATURE_COUNT], scale: [f64; FEATURE_COUNT]) -> Result<()> {
        if shift.iter().chain(&scale).any(|v| !v.is_finite()) || scale.iter().any(|&v| v <= 0.0) {
            return Err(Error::Argument("standardization needs finite shifts and positive scales".into()));
        }
        self.shift = shift;
        self.scale = scale;
        self.standardized = true;
        Ok(())
    }

    /// Feature weights followed by the bias.
    pub fn weights(&self) -> &[f64; FEATURE_COUNT + 1] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64; FEATURE_COUNT + 1] {
        &mut self.weights
    }

    pub fn dropout_p(&self) -> f64 {
        self.dropout_p
    }

    /// Draws one inverted-dropout multiplier per feature: `0` with
    /// probability `p`, `1 / (1 - p)` otherwise.
    fn dropout_scales(p: f64, rng: &mut Rng) -> [f64; FEATURE_COUNT] {
        let keep = 1.0 / (1.0 - p);
        std::array::from_fn(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
    }

    fn logit(&self, f: &[f64], scales: Option<&[f64; FEATURE_COUNT]>) -> f64 {
        let mut z = self.weights[FEATURE_COUNT];
        for k in 0..FEATURE_COUNT {
            let x = (f[k] - self.shift[k]) / self.scale[k];
            z += match scales {
                None => x * self.weights[k],
                Some(s) => x * self.weights[k] * s[k],
            };
        }
        z
    }

    fn predict_features(&self, f: &FeatureGrid, scales: Option<&[f64; FEATURE_COUNT]>) -> ProbMap {
        let n = f.width() * f.height();
        let data = (0..n).map(|i| sigmoid(self.logit(f.pixel(i), scales))).collect();
        ProbMap::new(f.width(), f.height(), data).expect("dimensions match by construction")
    }

    /// Forward pass. With `dropout` set, one feature mask drawn from the
    /// generator is shared by every pixel of the pass.
    pub fn predict(&self, img: &GrayImage, dropout: Option<(f64, &mut Rng)>) -> ProbMap {
        let f = extract_features(img);
        match dropout {
            None => self.predict_features(&f, None),
            Some((p, rng)) => {
                let s = Self::dropout_scales(p, rng);
                self.predict_features(&f, Some(&s))
            }
        }
    }

    /// Mean pixel cross-entropy of the deterministic model on `samples`.
    pub fn loss(&self, samples: &[TrainSample]) -> f64 {
        let mut total = 0.0;
        let mut n = 0usize;
        for s in samples {
            let p = self.predict(&s.image, None);
            for (&q, &y) in p.data().iter().zip(s.target.data()) {
                let q = q.clamp(1e-12, 1.0 - 1e-12);
                total -= if y == 1 { q.ln() } else { (1.0 - q).ln() };
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            total / n as f64
        }
    }

    /// Plain-text model file: a header line then `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::from("ceal-ref-model 1\n");
        let _ = writeln!(s, "dropout_p={}", self.dropout_p);
        let ws: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        let _ = writeln!(s, "weights={}", ws.join(" "));
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "shift={}", join(&self.shift));
        let _ = writeln!(s, "scale={}", join(&self.scale));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        fn floats(field: &'static str, v: &str, n: usize) -> Result<Vec<f64>> {
            let xs: Vec<f64> = v
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e: std::num::ParseFloatError| Error::format(field, e.to_string()))?;
            if xs.len() != n {
                return Err(Error::format(field, format!("expected {n} values, got {}", xs.len())));
            }
            Ok(xs)
        }
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("ceal-ref-model 1") {
            return Err(Error::format("model header", "expected \"ceal-ref-model 1\""));
        }
        let (mut dropout_p, mut weights, mut shift, mut scale) = (None, None, None, None);
        for line in lines.map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format("model line", format!("expected key=value: {line}")))?;
            match k.trim() {
                "dropout_p" => {
                    dropout_p = Some(v.trim().parse::<f64>().map_err(|e| Error::format("dropout_p", e.to_string()))?)
                }
                "weights" => weights = Some(floats("weights", v, FEATURE_COUNT + 1)?),
                "shift" => shift = Some(floats("shift", v, FEATURE_COUNT)?),
                "scale" => scale = Some(floats("scale", v, FEATURE_COUNT)?),
                other => return Err(Error::format("model line", format!("unknown key {other}"))),
            }
        }
        let weights = weights.ok_or_else(|| Error::format("weights", "missing"))?;
        let mut m = Self::with_weights(
            weights.try_into().expect("length checked"),
            dropout_p.ok_or_else(|| Error::format("dropout_p", "missing"))?,
        )?;
        if let (Some(sh), Some(sc)) = (shift, scale) {
            m.set_standardization(sh.try_into().expect("length checked"), sc.try_into().expect("length checked"))
                .map_err(|e| Error::format("scale", e.to_string()))?;
        }
        Ok(m)
    }
}

/// Training set after optional flip augmentation: each sample followed by its
/// horizontal, vertical and combined flips. The result is closed under
/// horizontal and vertical flipping.
pub fn augmented_set(samples: &[TrainSample], augment: bool) -> Vec<TrainSample> {
    if !augment {
        return samples.to_vec();
    }
    let mut out = Vec::with_capacity(samples.len() * 4);
    for s in samples {
        let hi = s.image.flip_horizontal();
        let ht = s.target.flip_horizontal();
        out.push(s.clone());
        out.push(TrainSample {
            image: Arc::new(s.image.flip_vertical()),
            target: Arc::new(s.target.flip_vertical()),
        });
        out.push(TrainSample {
            image: Arc::new(hi.flip_vertical()),
            target: Arc::new(ht.flip_vertical()),
        });
        out.push(TrainSample {
            image: Arc::new(hi),
            target: Arc::new(ht),
        });
    }
    out
}

/// Pixel indices visited in one epoch. Images that fit in the budget use
/// every pixel; larger ones draw a class-balanced subsample without
/// replacement, topping up from the larger class when the smaller runs out.
fn epoch_pixels(target: &BinaryMask, max_pixels: usize, rng: &mut Rng) -> Vec<u32> {
    let n = target.len();
    if n <= max_pixels {
        return (0..n as u32).collect();
    }
    let k = max_pixels;
    let (fg, bg): (Vec<u32>, Vec<u32>) = (0..n as u32).partition(|&i| target.data()[i as usize] == 1);
    let k_fg = (k / 2).max(k.saturating_sub(bg.len())).min(fg.len());
    let k_bg = k - k_fg;
    let mut out = Vec::with_capacity(k);
    out.extend(rand::seq::index::sample(rng, fg.len(), k_fg).into_iter().map(|i| fg[i]));
    out.extend(rand::seq::index::sample(rng, bg.len(), k_bg).into_iter().map(|i| bg[i]));
    out
}

/// Per-feature mean and standard deviation over every pixel of `grids`;
/// near-constant features keep unit scale.
fn fit_standardization(grids: &[FeatureGrid]) -> ([f64; FEATURE_COUNT], [f64; FEATURE_COUNT]) {
    let mut mean = [0.0; FEATURE_COUNT];
    let mut m2 = [0.0; FEATURE_COUNT];
    let mut n = 0.0;
    for px in grids.iter().flat_map(|g| g.data().chunks_exact(FEATURE_COUNT)) {
        n += 1.0;
        for k in 0..FEATURE_COUNT {
            let d = px[k] - mean[k];
            mean[k] += d / n;
            m2[k] += d * (px[k] - mean[k]);
        }
    }
    let scale = std::array::from_fn(|k| {
        let sd = if n > 0.0 { (m2[k] / n).sqrt() } else { 0.0 };
        if sd > 1e-9 { sd } else { 1.0 }
    });
    (mean, scale)
}

/// Trains `model` in place by mini-batch SGD on the logistic loss.
pub fn ref_train(model: &mut RefPredictor, samples: &[TrainSample], cfg: &TrainConfig, rng: &mut Rng) -> Result<()> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let set = augmented_set(samples, cfg.augment);
    // f32 keeps the per-call cache small; weights and sums stay f64.
    let grids: Vec<FeatureGrid> = set.iter().map(|s| extract_features(&s.image)).collect();
    if !model.standardized {
        let (shift, scale) = fit_standardization(&grids);
        model.set_standardization(shift, scale)?;
    }
    let (shift, scale) = (model.shift, model.scale);
    let cache: Vec<Vec<f32>> = grids
        .iter()
        .map(|g| {
            g.data()
                .chunks_exact(FEATURE_COUNT)
                .flat_map(|px| (0..FEATURE_COUNT).map(move |k| ((px[k] - shift[k]) / scale[k]) as f32))
                .collect()
        })
        .collect();

    let mut order: Vec<(u32, u32)> = Vec::new();
    for _ in 0..cfg.epochs {
        order.clear();
        for (i, s) in set.iter().enumerate() {
            for px in epoch_pixels(&s.target, cfg.max_pixels_per_image, rng) {
                order.push((i as u32, px));
            }
        }
        order.shuffle(rng);

        for batch in order.chunks(cfg.batch_size) {
            let scales = if cfg.dropout {
                RefPredictor::dropout_scales(model.dropout_p, rng)
            } else {
                [1.0; FEATURE_COUNT]
            };
            let mut grad = [0.0f64; FEATURE_COUNT + 1];
            for &(img, px) in batch {
                let f = &cache[img as usize][px as usize * FEATURE_COUNT..(px as usize + 1) * FEATURE_COUNT];
                let mut z = model.weights[FEATURE_COUNT];
                for k in 0..FEATURE_COUNT {
                    z += model.weights[k] * f[k] as f64 * scales[k];
                }
                let y = set[img as usize].target.data()[px as usize] as f64;
                let err = sigmoid(z) - y;
                for k in 0..FEATURE_COUNT {
                    grad[k] += err * f[k] as f64 * scales[k];
                }
                grad[FEATURE_COUNT] += err;
            }
            let step = cfg.learning_rate / batch.len() as f64;
            for (w, g) in model.weights.iter_mut().zip(grad) {
                *w -= step * g;
            }
        }
    }
    Ok(())
}

impl StochasticPredictor for RefPredictor {
    fn train(&mut self, samples: &[TrainSample], cfg: &TrainConfig, rng: &mut Rng) -> Result<()> {
        ref_train(self, samples, cfg, rng)
    }

    fn predict_stochastic(&self, img: &GrayImage, dropout_p: f64, rng: &mut Rng) -> Result<ProbMap> {
        if !(dropout_p > 0.0 && dropout_p < 1.0) {
            return Err(Error::Argument(format!("dropout_p {dropout_p} outside (0, 1)")));
        }
        Ok(self.predict(img, Some((dropout_p, rng))))
    }

    fn predict_deterministic(&self, img: &GrayImage) -> Result<ProbMap> {
        Ok(self.predict(img, None))
    }

    fn stochastic_passes(
        &self,
        img: &GrayImage,
        cfg: &McConfig,
        rng: &mut Rng,
        sink: &mut dyn FnMut(ProbMap) -> Result<()>,
    ) -> Result<()> {
        cfg.validate()?;
        let f = extract_features(img);
        for _ in 0..cfg.t_steps {
            let s = Self::dropout_scales(cfg.dropout_p, rng);
            sink(self.predict_features(&f, Some(&s)))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::dice;
    use crate::rng;
    use crate::synthdata::{generate_samples, SynthParams};
    use crate::uncertainty::mc_predict;
    use proptest::prelude::*;

    fn to_train(samples: &[crate::synthdata::Sample]) -> Vec<TrainSample> {
        samples
            .iter()
            .map(|s| TrainSample {
                image: s.image.clone(),
                target: s.mask.clone(),
            })
            .collect()
    }

    fn random_model(seed: u64) -> RefPredictor {
        let mut r = rng::seeded(seed);
        let w = std::array::from_fn(|_| r.random_range(-1.0..1.0));
        RefPredictor::with_weights(w, 0.5).unwrap()
    }

    #[test]
    fn deterministic_is_repeatable() {
        let m = random_model(1);
        let img = GrayImage::new(4, 4, (0..16).map(|i| i as f64 / 15.0).collect()).unwrap();
        assert_eq!(m.predict(&img, None), m.predict(&img, None));
    }

    #[test]
    fn zero_weights_give_half() {
        let m = RefPredictor::new(0.5);
        let img = GrayImage::new(3, 3, (0..9).map(|i| i as f64 / 8.0).collect()).unwrap();
        assert!(m.predict(&img, None).data().iter().all(|&p| p == 0.5));
        let p = m.predict_stochastic(&img, 0.5, &mut rng::seeded(3)).unwrap();
        assert!(p.data().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn outputs_in_unit_interval_for_extreme_weights() {
        let m = RefPredictor::with_weights([1e6; FEATURE_COUNT + 1], 0.5).unwrap();
        let img = GrayImage::filled(3, 3, 1.0);
        for p in m.predict(&img, None).data() {
            assert!((0.0..=1.0).contains(p));
        }
    }

    #[test]
    fn dropout_masks_are_shared_across_pixels() {
        // With a single nonzero feature weight on a constant image every pixel
        // sees the same logit, so a shared mask yields a constant map.
        let mut w = [0.0; FEATURE_COUNT + 1];
        w[0] = 2.0;
        let m = RefPredictor::with_weights(w, 0.5).unwrap();
        let img = GrayImage::filled(5, 5, 0.9);
        let mut r = rng::seeded(11);
        for _ in 0..20 {
            let p = m.predict_stochastic(&img, 0.5, &mut r).unwrap();
            assert!(p.data().iter().all(|&v| v == p.data()[0]));
        }
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let mut m = RefPredictor::new(0.5);
        let err = ref_train(&mut m, &[], &TrainConfig::default(), &mut rng::seeded(0));
        assert!(matches!(err, Err(Error::Argument(_))));
    }

    #[test]
    fn training_is_deterministic() {
        let p = SynthParams { image_size: 16, min_axis: 2.0, max_axis: 6.0, ..SynthParams::default() };
        let set = to_train(&generate_samples(6, &p, 1).unwrap());
        let mut a = RefPredictor::new(0.5);
        let mut b = RefPredictor::new(0.5);
        ref_train(&mut a, &set, &TrainConfig::default(), &mut rng::seeded(4)).unwrap();
        ref_train(&mut b, &set, &TrainConfig::default(), &mut rng::seeded(4)).unwrap();
        assert_eq!(a.weights(), b.weights());
        assert_ne!(a.weights(), RefPredictor::new(0.5).weights());
    }

    #[test]
    fn noise_free_training_reaches_high_dice() {
        let p = SynthParams {
            noise_sigma: 0.0,
            distractor_count: 0,
            empty_fraction: 0.0,
            ..SynthParams::default()
        };
        let train = to_train(&generate_samples(60, &p, 1).unwrap());
        let held_out = generate_samples(30, &p, 2).unwrap();
        let mut m = RefPredictor::new(0.5);
        ref_train(&mut m, &train, &TrainConfig::default(), &mut rng::seeded(7)).unwrap();
        let mean: f64 = held_out
            .iter()
            .map(|s| {
                let pred = crate::imaging::binarize(&m.predict(&s.image, None), 0.5).unwrap();
                dice(&pred, &s.mask).unwrap()
            })
            .sum::<f64>()
            / held_out.len() as f64;
        assert!(mean >= 0.95, "held-out dice {mean}");
    }

    #[test]
    fn training_lowers_loss() {
        let p = SynthParams::default();
        let set = to_train(&generate_samples(10, &p, 3).unwrap());
        for seed in 0..4 {
            let mut m = random_model(100 + seed);
            let before = m.loss(&set);
            ref_train(&mut m, &set, &TrainConfig::default(), &mut rng::seeded(seed)).unwrap();
            let after = m.loss(&set);
            assert!(after <= before, "seed {seed}: {before} -> {after}");
        }
    }

    #[test]
    fn model_text_round_trip() {
        let m = random_model(9);
        let back = RefPredictor::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(RefPredictor::from_text("nope").is_err());

        let set = to_train(&generate_samples(4, &SynthParams::default(), 5).unwrap());
        let mut trained = RefPredictor::new(0.5);
        ref_train(&mut trained, &set, &TrainConfig::default(), &mut rng::seeded(1)).unwrap();
        assert_ne!(trained.standardization().1, [1.0; FEATURE_COUNT]);
        assert_eq!(RefPredictor::from_text(&trained.to_text()).unwrap(), trained);
        assert!(RefPredictor::from_text("ceal-ref-model 1\ndropout_p=0.5\nweights=1 2\n").is_err());
    }

    #[test]
    fn mc_passes_match_predict_stochastic_stream() {
        let m = random_model(12);
        let img = GrayImage::new(4, 3, (0..12).map(|i| (i % 5) as f64 / 4.0).collect()).unwrap();
        let cfg = McConfig { t_steps: 4, dropout_p: 0.5 };
        let mut via_trait = Vec::new();
        m.stochastic_passes(&img, &cfg, &mut rng::seeded(6), &mut |p| {
            via_trait.push(p);
            Ok(())
        })
        .unwrap();
        let mut r = rng::seeded(6);
        let direct: Vec<ProbMap> = (0..4).map(|_| m.predict_stochastic(&img, 0.5, &mut r).unwrap()).collect();
        assert_eq!(via_trait, direct);
        let (_, var) = mc_predict(&m, &img, &cfg, &mut rng::seeded(6)).unwrap();
        assert!(var.data().iter().all(|&v| (0.0..=0.25).contains(&v)));
    }

    fn canonical(set: &[TrainSample]) -> Vec<(Vec<u64>, Vec<u8>)> {
        let mut v: Vec<_> = set
            .iter()
            .map(|s| (s.image.data().iter().map(|x| x.to_bits()).collect(), s.target.data().to_vec()))
            .collect();
        v.sort();
        v
    }

    proptest! {
        #[test]
        fn augmentation_closed_under_flips(seed in 0u64..1000, n in 1usize..4) {
            let p = SynthParams { image_size: 12, min_axis: 2.0, max_axis: 5.0, ..SynthParams::default() };
            let set = to_train(&generate_samples(n, &p, seed).unwrap());
            let aug = augmented_set(&set, true);
            prop_assert_eq!(aug.len(), 4 * n);
            let flipped: Vec<TrainSample> = aug
                .iter()
                .map(|s| TrainSample {
                    image: Arc::new(s.image.flip_horizontal()),
                    target: Arc::new(s.target.flip_horizontal()),
                })
                .collect();
            prop_assert_eq!(canonical(&aug), canonical(&flipped));
        }
    }
}
