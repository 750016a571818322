//! Monte-Carlo dropout uncertainty: per-pixel mean and population variance
//! over `T` stochastic passes, accumulated in one streaming pass.

use crate::error::{Error, Result};
use crate::imaging::{GrayImage, ProbMap};
use crate::predictor::StochasticPredictor;
use crate::rng::Rng;

pub use crate::imaging::UncertaintyMap;

/// Number of passes and dropout rate for MC inference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub t_steps: usize,
    pub dropout_p: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            t_steps: 10,
            dropout_p: 0.5,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_steps < 2 {
            return Err(Error::Argument(format!(
                "t_steps must be >= 2, got {}",
                self.t_steps
            )));
        }
        if !(self.dropout_p > 0.0 && self.dropout_p < 1.0) {
            return Err(Error::Argument(format!(
                "dropout_p must be in (0, 1), got {}",
                self.dropout_p
            )));
        }
        Ok(())
    }
}

/// Per-pixel Welford accumulator over a sequence of probability maps.
#[derive(Clone, Debug)]
pub struct VarianceAccumulator {
    width: usize,
    height: usize,
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VarianceAccumulator {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "accumulator dimensions must be positive");
        let n = width * height;
        Self {
            width,
            height,
            count: 0,
            mean: vec![0.0; n],
            m2: vec![0.0; n],
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Running sum of squared deviations from the mean.
    pub fn m2(&self) -> &[f64] {
        &self.m2
    }

    pub fn update(&mut self, p: &ProbMap) -> Result<()> {
        if p.dims() != self.dims() {
            return Err(Error::Argument(format!(
                "prediction is {:?}, accumulator is {:?}",
                p.dims(),
                self.dims()
            )));
        }
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(p.data()) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
        Ok(())
    }

    /// Pairwise merge of two partial accumulations (Chan et al.).
    pub fn merge(&mut self, other: &VarianceAccumulator) -> Result<()> {
        if other.dims() != self.dims() {
            return Err(Error::Argument("cannot merge accumulators of different size".into()));
        }
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other.clone();
            return Ok(());
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
        Ok(())
    }

    /// Mean map and population variance `M2 / count`.
    pub fn finalize(&self) -> Result<(ProbMap, UncertaintyMap)> {
        if self.count < 2 {
            return Err(Error::State(format!(
                "need at least 2 passes to finalize, have {}",
                self.count
            )));
        }
        let n = self.count as f64;
        let mean = self.mean.iter().map(|m| m.clamp(0.0, 1.0)).collect();
        let var = self.m2.iter().map(|m2| (m2 / n).max(0.0)).collect();
        Ok((
            ProbMap::new(self.width, self.height, mean)?,
            UncertaintyMap::new(self.width, self.height, var)?,
        ))
    }
}

/// Runs `cfg.t_steps` stochastic passes and returns the mean prediction and
/// the per-pixel variance.
pub fn mc_predict<P: StochasticPredictor + ?Sized>(
    pred: &P,
    img: &GrayImage,
    cfg: &McConfig,
    rng: &mut Rng,
) -> Result<(ProbMap, UncertaintyMap)> {
    cfg.validate()?;
    let mut acc = VarianceAccumulator::new(img.width(), img.height());
    let mut passes = 0usize;
    pred.stochastic_passes(img, cfg, rng, &mut |p| {
        passes += 1;
        acc.update(&p)
    })?;
    if passes != cfg.t_steps {
        return Err(Error::State(format!(
            "predictor produced {passes} passes, expected {}",
            cfg.t_steps
        )));
    }
    acc.finalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::RefPredictor;
    use crate::rng;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng as _;

    fn map(v: &[f64]) -> ProbMap {
        ProbMap::new(v.len(), 1, v.to_vec()).unwrap()
    }

    /// Two-pass population variance, the reference the accumulator is checked against.
    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mu = xs.iter().sum::<f64>() / n;
        (mu, xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n)
    }

    #[test]
    fn finalize_needs_two_updates() {
        let mut acc = VarianceAccumulator::new(2, 2);
        assert!(matches!(acc.finalize(), Err(Error::State(_))));
        acc.update(&ProbMap::filled(2, 2, 0.3)).unwrap();
        assert!(matches!(acc.finalize(), Err(Error::State(_))));
        acc.update(&ProbMap::filled(2, 2, 0.3)).unwrap();
        let (m, v) = acc.finalize().unwrap();
        assert_eq!(m.dims(), (2, 2));
        assert_eq!(v.dims(), (2, 2));
    }

    #[test]
    fn two_point_step() {
        let mut acc = VarianceAccumulator::new(1, 1);
        acc.update(&map(&[0.0])).unwrap();
        acc.update(&map(&[1.0])).unwrap();
        assert_eq!(acc.mean(), &[0.5]);
        assert_eq!(acc.m2(), &[0.5]);
        assert_eq!(acc.finalize().unwrap().1.data(), &[0.25]);
    }

    #[test]
    fn identical_updates_zero_m2() {
        let mut acc = VarianceAccumulator::new(3, 1);
        for _ in 0..7 {
            acc.update(&map(&[0.1, 0.5, 0.7])).unwrap();
        }
        assert_eq!(acc.m2(), &[0.0, 0.0, 0.0]);
        let (_, v) = acc.finalize().unwrap();
        assert!(v.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let mut acc = VarianceAccumulator::new(2, 1);
        assert!(matches!(acc.update(&map(&[0.0])), Err(Error::Argument(_))));
    }

    #[test]
    fn ten_random_passes_match_two_pass() {
        let mut r = rng::seeded(4);
        let passes: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..16).map(|_| r.random::<f64>()).collect())
            .collect();
        let mut acc = VarianceAccumulator::new(4, 4);
        for p in &passes {
            acc.update(&ProbMap::new(4, 4, p.clone()).unwrap()).unwrap();
        }
        let (mean, var) = acc.finalize().unwrap();
        for i in 0..16 {
            let col: Vec<f64> = passes.iter().map(|p| p[i]).collect();
            let (mu, v) = two_pass(&col);
            assert!((mean.data()[i] - mu).abs() < 1e-12);
            assert!((var.data()[i] - v).abs() < 1e-10);
        }
    }

    #[test]
    fn merge_matches_sequential() {
        let mut r = rng::seeded(8);
        let passes: Vec<ProbMap> = (0..9)
            .map(|_| ProbMap::new(3, 1, (0..3).map(|_| r.random()).collect()).unwrap())
            .collect();
        let mut seq = VarianceAccumulator::new(3, 1);
        passes.iter().for_each(|p| seq.update(p).unwrap());
        let mut a = VarianceAccumulator::new(3, 1);
        let mut b = VarianceAccumulator::new(3, 1);
        passes[..4].iter().for_each(|p| a.update(p).unwrap());
        passes[4..].iter().for_each(|p| b.update(p).unwrap());
        a.merge(&b).unwrap();
        let (m1, v1) = seq.finalize().unwrap();
        let (m2, v2) = a.finalize().unwrap();
        for i in 0..3 {
            assert!((m1.data()[i] - m2.data()[i]).abs() < 1e-12);
            assert!((v1.data()[i] - v2.data()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn mc_config_validation() {
        assert!(McConfig { t_steps: 1, dropout_p: 0.5 }.validate().is_err());
        assert!(McConfig { t_steps: 10, dropout_p: 0.0 }.validate().is_err());
        assert!(McConfig { t_steps: 10, dropout_p: 1.0 }.validate().is_err());
        let d = McConfig::default();
        assert_eq!((d.t_steps, d.dropout_p), (10, 0.5));
    }

    #[test]
    fn bias_only_model_has_zero_variance() {
        let mut model = RefPredictor::new(0.5);
        model.weights_mut()[crate::predictor::FEATURE_COUNT] = 1.3;
        let img = GrayImage::filled(5, 4, 0.4);
        let cfg = McConfig { t_steps: 6, dropout_p: 0.5 };
        let (_, var) = mc_predict(&model, &img, &cfg, &mut rng::seeded(1)).unwrap();
        assert!(var.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mc_predict_is_seed_stable() {
        let mut model = RefPredictor::new(0.5);
        for (i, w) in model.weights_mut().iter_mut().enumerate() {
            *w = (i as f64 - 4.0) * 0.7;
        }
        let img = GrayImage::new(3, 3, (0..9).map(|i| i as f64 / 9.0).collect()).unwrap();
        let cfg = McConfig::default();
        let a = mc_predict(&model, &img, &cfg, &mut rng::seeded(5)).unwrap();
        let b = mc_predict(&model, &img, &cfg, &mut rng::seeded(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.1.data().iter().any(|&v| v > 0.0));
        assert!(a.1.data().iter().all(|&v| (0.0..=0.25).contains(&v)));
    }

    proptest! {
        #[test]
        fn streaming_matches_two_pass(
            xs in prop::collection::vec(0.0f64..=1.0, 2..=100),
            seed in any::<u64>(),
        ) {
            let mut acc = VarianceAccumulator::new(1, 1);
            for &x in &xs {
                acc.update(&map(&[x])).unwrap();
            }
            let (_, var) = acc.finalize().unwrap();
            let (_, v) = two_pass(&xs);
            prop_assert!((var.data()[0] - v).abs() <= 1e-10);
            prop_assert!(var.data()[0] <= 0.25);

            let mut shuffled = xs.clone();
            shuffled.shuffle(&mut rng::seeded(seed));
            let mut acc2 = VarianceAccumulator::new(1, 1);
            for &x in &shuffled {
                acc2.update(&map(&[x])).unwrap();
            }
            let (_, var2) = acc2.finalize().unwrap();
            prop_assert!((var.data()[0] - var2.data()[0]).abs() <= 1e-12);
        }
    }
}
