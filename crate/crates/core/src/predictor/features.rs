//! Per-pixel patch features for the reference predictor.
//!
//! Layout per pixel: `[intensity, mean_r1, std_r1, mean_r3, std_r3, mean_r7,
//! std_r7, x_norm, y_norm]`. Box windows are clipped to the image, so border
//! pixels average over fewer neighbours.

use crate::imaging::GrayImage;

pub const FEATURE_COUNT: usize = 9;
pub const BOX_RADII: [usize; 3] = [1, 3, 7];

/// Row-major grid of `FEATURE_COUNT` values per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FeatureGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, i: usize) -> &[f64] {
        &self.data[i * FEATURE_COUNT..(i + 1) * FEATURE_COUNT]
    }

    pub fn at(&self, x: usize, y: usize) -> &[f64] {
        self.pixel(y * self.width + x)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Summed-area table with one row and column of zero padding.
struct Integral {
    stride: usize,
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl Integral {
    fn new(img: &GrayImage, shift: f64) -> Self {
        let (w, h) = img.dims();
        let stride = w + 1;
        let mut sum = vec![0.0; stride * (h + 1)];
        let mut sq = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0.0;
            let mut row_sq = 0.0;
            for x in 0..w {
                let v = img.get(x, y) - shift;
                row_sum += v;
                row_sq += v * v;
                let i = (y + 1) * stride + x + 1;
                sum[i] = sum[i - stride] + row_sum;
                sq[i] = sq[i - stride] + row_sq;
            }
        }
        Self { stride, sum, sq }
    }

    /// Sums over the half-open box `[x0, x1) x [y0, y1)`.
    fn box_sums(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> (f64, f64) {
        let s = self.stride;
        let at = |t: &[f64]| t[y1 * s + x1] - t[y0 * s + x1] - t[y1 * s + x0] + t[y0 * s + x0];
        (at(&self.sum), at(&self.sq))
    }
}

pub fn extract_features(img: &GrayImage) -> FeatureGrid {
    let (w, h) = img.dims();
    // Shifting by one pixel value keeps constant images exactly zero inside
    // the tables, so their box deviations come out as exact zeros.
    let shift = img.data()[0];
    let table = Integral::new(img, shift);
    let mut data = Vec::with_capacity(w * h * FEATURE_COUNT);
    for y in 0..h {
        for x in 0..w {
            data.push(img.get(x, y));
            for r in BOX_RADII {
                let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
                let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
                let n = ((x1 - x0) * (y1 - y0)) as f64;
                let (s, sq) = table.box_sums(x0, y0, x1, y1);
                let mean = s / n;
                let var = (sq / n - mean * mean).max(0.0);
                data.push(mean + shift);
                data.push(var.sqrt());
            }
            data.push(if w > 1 { x as f64 / (w - 1) as f64 } else { 0.0 });
            data.push(if h > 1 { y as f64 / (h - 1) as f64 } else { 0.0 });
        }
    }
    FeatureGrid {
        width: w,
        height: h,
        data,
    }
}
