//! Synthetic "lesion" datasets: rotated ellipses on a flat background with
//! lesion-like distractor blobs and clamped Gaussian noise.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{read_mask_pgm, read_pgm, write_mask_pgm, write_pgm, BinaryMask, GrayImage};
use crate::rng::{self, Phase, Rng};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub image_size: usize,
    pub min_axis: f64,
    pub max_axis: f64,
    pub fg_level: f64,
    pub bg_level: f64,
    pub noise_sigma: f64,
    pub distractor_count: usize,
    pub empty_fraction: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            image_size: 32,
            min_axis: 3.0,
            max_axis: 10.0,
            fg_level: 0.35,
            bg_level: 0.65,
            noise_sigma: 0.1,
            distractor_count: 2,
            empty_fraction: 0.1,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let half = self.image_size as f64 / 2.0;
        if !(self.min_axis > 0.0 && self.min_axis <= self.max_axis && self.max_axis < half) {
            return Err(Error::Argument(format!(
                "need 0 < min_axis ({}) <= max_axis ({}) < image_size/2 ({half})",
                self.min_axis, self.max_axis
            )));
        }
        if self.fg_level == self.bg_level {
            return Err(Error::Argument("fg_level must differ from bg_level".into()));
        }
        for (name, v) in [("fg_level", self.fg_level), ("bg_level", self.bg_level)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Argument(format!("{name} {v} outside [0, 1]")));
            }
        }
        if self.noise_sigma.is_nan() || self.noise_sigma < 0.0 {
            return Err(Error::Argument("noise_sigma must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.empty_fraction) {
            return Err(Error::Argument(format!(
                "empty_fraction {} outside [0, 1]",
                self.empty_fraction
            )));
        }
        Ok(())
    }
}

/// One standard normal deviate pair by Box–Muller.
fn box_muller(rng: &mut Rng) -> (f64, f64) {
    // 1 - U keeps the log argument in (0, 1].
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Renders one (image, mask) pair. The output depends only on `params` and
/// the generator state.
pub fn generate_sample(params: &SynthParams, rng: &mut Rng) -> (GrayImage, BinaryMask) {
    let size = params.image_size;
    let empty = rng.random::<f64>() < params.empty_fraction;

    let mask = if empty {
        BinaryMask::zeros(size, size)
    } else {
        let a = rng.random_range(params.min_axis..=params.max_axis);
        let b = rng.random_range(params.min_axis..=params.max_axis);
        let theta = rng.random_range(0.0..PI);
        let r = a.max(b);
        let hi = (size - 1) as f64 - r;
        let cx = if hi > r { rng.random_range(r..=hi) } else { (size - 1) as f64 / 2.0 };
        let cy = if hi > r { rng.random_range(r..=hi) } else { (size - 1) as f64 / 2.0 };
        let (s, c) = theta.sin_cos();
        BinaryMask::from_fn(size, size, |x, y| {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let u = (dx * c + dy * s) / a;
            let v = (-dx * s + dy * c) / b;
            u * u + v * v <= 1.0
        })
    };

    let mut data: Vec<f64> = mask
        .data()
        .iter()
        .map(|&m| if m == 1 { params.fg_level } else { params.bg_level })
        .collect();

    let contrast = params.fg_level - params.bg_level;
    for _ in 0..params.distractor_count {
        let cx = rng.random_range(0.0..size as f64);
        let cy = rng.random_range(0.0..size as f64);
        let sigma = rng.random_range(1.0..=params.min_axis.max(1.0));
        let amplitude = rng.random_range(0.4..=0.9) * contrast;
        for y in 0..size {
            for x in 0..size {
                let i = y * size + x;
                if mask.data()[i] == 1 {
                    continue;
                }
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                data[i] += amplitude * (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
    }

    if params.noise_sigma > 0.0 {
        let mut i = 0;
        while i < data.len() {
            let (z0, z1) = box_muller(rng);
            data[i] += params.noise_sigma * z0;
            if i + 1 < data.len() {
                data[i + 1] += params.noise_sigma * z1;
            }
            i += 2;
        }
    }
    for v in &mut data {
        *v = v.clamp(0.0, 1.0);
    }

    let image = GrayImage::new(size, size, data).expect("dimensions match by construction");
    (image, mask)
}

/// An image with its ground-truth mask.
#[derive(Clone, Debug)]
pub struct Sample {
    pub id: u64,
    pub image: Arc<GrayImage>,
    pub mask: Arc<BinaryMask>,
}

/// Generates `n` samples in memory. Sample `i` draws from the stream keyed by
/// `(seed, i)`, so the result does not depend on evaluation order.
pub fn generate_samples(n: usize, params: &SynthParams, seed: u64) -> Result<Vec<Sample>> {
    params.validate()?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = rng::stream(seed, &[Phase::Generate as u64, id]);
            let (image, mask) = generate_sample(params, &mut rng);
            Sample {
                id,
                image: Arc::new(image),
                mask: Arc::new(mask),
            }
        })
        .collect())
}

pub fn image_file_name(id: u64) -> String {
    format!("img_{id:05}.pgm")
}

pub fn mask_file_name(id: u64) -> String {
    format!("msk_{id:05}.pgm")
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub path: PathBuf,
    pub ids: Vec<u64>,
}

/// Writes `n` samples plus a manifest into `out_dir`.
pub fn generate_dataset(n: usize, params: &SynthParams, seed: u64, out_dir: &Path) -> Result<Manifest> {
    let samples = generate_samples(n, params, seed)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for s in &samples {
        let p = out_dir.join(image_file_name(s.id));
        fs::write(&p, write_pgm(&s.image)).map_err(|e| Error::io(&p, e))?;
        let p = out_dir.join(mask_file_name(s.id));
        fs::write(&p, write_mask_pgm(&s.mask)).map_err(|e| Error::io(&p, e))?;
    }
    let ids: Vec<u64> = samples.iter().map(|s| s.id).collect();
    let path = out_dir.join(MANIFEST_FILE);
    let text: String = ids.iter().map(|id| format!("{id:05}\n")).collect();
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(Manifest { path, ids })
}

/// Loads a dataset directory laid out as [`generate_dataset`] writes it.
pub fn load_dataset(dir: &Path) -> Result<Vec<Sample>> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut ids = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id = line.parse::<u64>().map_err(|_| {
            Error::Config(format!("{}:{}: bad sample id {line:?}", path.display(), lineno + 1))
        })?;
        ids.push(id);
    }
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .map(|id| {
            let ip = dir.join(image_file_name(id));
            let mp = dir.join(mask_file_name(id));
            let image = read_pgm(&fs::read(&ip).map_err(|e| Error::io(&ip, e))?)?;
            let mask = read_mask_pgm(&fs::read(&mp).map_err(|e| Error::io(&mp, e))?)?;
            if image.dims() != mask.dims() {
                return Err(Error::Consistency(format!(
                    "sample {id}: image {:?} and mask {:?} differ in size",
                    image.dims(),
                    mask.dims()
                )));
            }
            Ok(Sample {
                id,
                image: Arc::new(image),
                mask: Arc::new(mask),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{binarize, ProbMap};
    use crate::metrics::dice;

    fn clean() -> SynthParams {
        SynthParams {
            noise_sigma: 0.0,
            distractor_count: 0,
            empty_fraction: 0.0,
            fg_level: 0.8,
            bg_level: 0.2,
            ..SynthParams::default()
        }
    }

    #[test]
    fn noise_free_levels_exact() {
        let p = clean();
        let mut r = rng::seeded(3);
        for _ in 0..20 {
            let (img, mask) = generate_sample(&p, &mut r);
            assert!(mask.count() > 0);
            for (v, m) in img.data().iter().zip(mask.data()) {
                assert_eq!(*v, if *m == 1 { p.fg_level } else { p.bg_level });
            }
        }
    }

    #[test]
    fn empty_fraction_one_gives_empty_masks() {
        let p = SynthParams {
            empty_fraction: 1.0,
            ..SynthParams::default()
        };
        let mut r = rng::seeded(1);
        for _ in 0..10 {
            assert!(generate_sample(&p, &mut r).1.is_all_zero());
        }
    }

    #[test]
    fn same_seed_same_sample() {
        let p = SynthParams::default();
        let a = generate_sample(&p, &mut rng::seeded(9));
        let b = generate_sample(&p, &mut rng::seeded(9));
        assert_eq!(write_pgm(&a.0), write_pgm(&b.0));
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn threshold_recovers_mask_without_noise() {
        let p = clean();
        let mid = (p.fg_level + p.bg_level) / 2.0;
        for s in generate_samples(50, &p, 11).unwrap() {
            let prob = ProbMap::new(32, 32, s.image.data().to_vec()).unwrap();
            let pred = binarize(&prob, mid).unwrap();
            assert_eq!(dice(&pred, &s.mask).unwrap(), 1.0);
        }
    }

    #[test]
    fn empty_frequency_within_three_sigma() {
        let p = SynthParams {
            empty_fraction: 0.3,
            ..SynthParams::default()
        };
        let n = 2000;
        let empties = generate_samples(n, &p, 5)
            .unwrap()
            .iter()
            .filter(|s| s.mask.is_all_zero())
            .count() as f64;
        let expected = n as f64 * 0.3;
        let sigma = (n as f64 * 0.3 * 0.7).sqrt();
        assert!((empties - expected).abs() <= 3.0 * sigma, "{empties} vs {expected}");
    }

    #[test]
    fn rejects_invalid_params() {
        let bad = [
            SynthParams { min_axis: 0.0, ..SynthParams::default() },
            SynthParams { max_axis: 16.0, ..SynthParams::default() },
            SynthParams { min_axis: 5.0, max_axis: 4.0, ..SynthParams::default() },
            SynthParams { fg_level: 0.5, bg_level: 0.5, ..SynthParams::default() },
            SynthParams { noise_sigma: -1.0, ..SynthParams::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn dataset_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = SynthParams { image_size: 16, min_axis: 2.0, max_axis: 6.0, ..SynthParams::default() };
        let m = generate_dataset(5, &p, 2, dir.path()).unwrap();
        assert_eq!(m.ids, vec![0, 1, 2, 3, 4]);
        let manifest = fs::read_to_string(&m.path).unwrap();
        assert_eq!(manifest, "00000\n00001\n00002\n00003\n00004\n");
        let loaded = load_dataset(dir.path()).unwrap();
        let fresh = generate_samples(5, &p, 2).unwrap();
        for (a, b) in loaded.iter().zip(&fresh) {
            assert_eq!(a.mask, b.mask);
            assert_eq!(write_pgm(&a.image), write_pgm(&b.image));
        }

        let empty = tempfile::tempdir().unwrap();
        let m = generate_dataset(0, &p, 2, empty.path()).unwrap();
        assert!(m.ids.is_empty());
        assert_eq!(fs::read_to_string(&m.path).unwrap(), "");
        assert_eq!(fs::read_dir(empty.path()).unwrap().count(), 1);
    }
}
