//! Raster types, binary PGM I/O, binarization and contour extraction.
//!
//! All grids are row-major: the pixel at column `x`, row `y` lives at index
//! `y * width + x`.

use crate::error::{Error, Result};

macro_rules! real_grid {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            width: usize,
            height: usize,
            data: Vec<f64>,
        }

        impl $name {
            /// Builds a grid from row-major data. Fails when the length does not
            /// match `width * height` or a dimension is zero.
            pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
                check_dims(width, height, data.len())?;
                Ok(Self { width, height, data })
            }

            pub fn filled(width: usize, height: usize, value: f64) -> Self {
                assert!(width > 0 && height > 0, "grid dimensions must be positive");
                Self { width, height, data: vec![value; width * height] }
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn len(&self) -> usize {
                self.data.len()
            }

            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            pub fn data(&self) -> &[f64] {
                &self.data
            }

            pub fn into_data(self) -> Vec<f64> {
                self.data
            }

            pub fn get(&self, x: usize, y: usize) -> f64 {
                self.data[y * self.width + x]
            }

            pub fn dims(&self) -> (usize, usize) {
                (self.width, self.height)
            }
        }
    };
}

real_grid! {
    /// Grayscale intensities in `[0, 1]`.
    GrayImage
}

real_grid! {
    /// Per-pixel foreground probabilities in `[0, 1]`.
    ProbMap
}

real_grid! {
    /// Per-pixel variance over stochastic passes, all values `>= 0`.
    UncertaintyMap
}

real_grid! {
    /// Per-pixel Euclidean distance to the nearest contour pixel.
    DistMap
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Argument(format!(
            "grid dimensions must be positive, got {width}x{height}"
        )));
    }
    if len != width * height {
        return Err(Error::Argument(format!(
            "data length {len} does not match {width}x{height}"
        )));
    }
    Ok(())
}

fn check_unit_range(data: &[f64], what: &str) -> Result<()> {
    if let Some((i, v)) = data
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::Argument(format!(
            "{what} value {v} at index {i} outside [0, 1]"
        )));
    }
    Ok(())
}

impl GrayImage {
    /// Like [`GrayImage::new`] but also rejects intensities outside `[0, 1]`.
    pub fn from_unit(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_unit_range(&data, "intensity")?;
        Self::new(width, height, data)
    }

    pub fn flip_horizontal(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: flip_h(&self.data, self.width),
        }
    }

    pub fn flip_vertical(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: flip_v(&self.data, self.width),
        }
    }
}

impl ProbMap {
    /// Like [`ProbMap::new`] but also rejects probabilities outside `[0, 1]`.
    pub fn from_unit(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_unit_range(&data, "probability")?;
        Self::new(width, height, data)
    }
}

pub(crate) fn flip_h<T: Copy>(data: &[T], width: usize) -> Vec<T> {
    data.chunks(width)
        .flat_map(|row| row.iter().rev().copied())
        .collect()
}

pub(crate) fn flip_v<T: Copy>(data: &[T], width: usize) -> Vec<T> {
    data.chunks(width).rev().flatten().copied().collect()
}

/// A `{0, 1}` mask: segmentation, ground truth or contour set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some((i, v)) = data.iter().enumerate().find(|(_, v)| **v > 1) {
            return Err(Error::Argument(format!(
                "mask value {v} at index {i} is not 0 or 1"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn ones(width: usize, height: usize) -> Self {
        let mut m = Self::zeros(width, height);
        m.data.fill(1);
        m
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y) as u8;
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] == 1
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = on as u8;
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    pub fn is_all_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn is_all_one(&self) -> bool {
        self.data.iter().all(|&v| v == 1)
    }

    pub fn flip_horizontal(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: flip_h(&self.data, self.width),
        }
    }

    pub fn flip_vertical(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: flip_v(&self.data, self.width),
        }
    }

    /// Mask as a grayscale image using the `0 -> 0.0`, `1 -> 1.0` convention.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}

/// Decodes a binary PGM (`P5`, maxval 255). Comments are not accepted.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let (width, height, payload) = parse_pgm(bytes)?;
    let data = payload.iter().map(|&b| b as f64 / 255.0).collect();
    GrayImage::new(width, height, data)
}

/// Encodes an image as binary PGM, `v -> round(v * 255)`.
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let payload: Vec<u8> = img
        .data
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    encode_p5(img.width, img.height, &payload)
}

/// Writes a mask as PGM with `0 -> 0`, `1 -> 255`.
pub fn write_mask_pgm(mask: &BinaryMask) -> Vec<u8> {
    let payload: Vec<u8> = mask.data.iter().map(|&v| v * 255).collect();
    encode_p5(mask.width, mask.height, &payload)
}

/// Reads a mask PGM. Any nonzero byte is foreground.
pub fn read_mask_pgm(bytes: &[u8]) -> Result<BinaryMask> {
    let (width, height, payload) = parse_pgm(bytes)?;
    BinaryMask::new(
        width,
        height,
        payload.iter().map(|&b| (b != 0) as u8).collect(),
    )
}

fn encode_p5(width: usize, height: usize, payload: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(payload);
    out
}

fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, &[u8])> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format("magic", "expected \"P5\""));
    }
    let mut pos = 2;
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(Error::format("maxval", format!("expected 255, got {maxval}")));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::format("maxval", "missing whitespace before payload")),
    }
    if width == 0 {
        return Err(Error::format("width", "must be positive"));
    }
    if height == 0 {
        return Err(Error::format("height", "must be positive"));
    }
    let need = width
        .checked_mul(height)
        .ok_or_else(|| Error::format("width", "dimensions overflow"))?;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(Error::format(
            "payload",
            format!("truncated: expected {need} bytes, found {}", payload.len()),
        ));
    }
    Ok((width, height, &payload[..need]))
}

fn header_number(bytes: &[u8], pos: &mut usize, field: &'static str) -> Result<usize> {
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| b.is_ascii_whitespace()) {
        *pos += 1;
    }
    if *pos == start {
        return Err(Error::format(field, "expected whitespace separator"));
    }
    if bytes.get(*pos) == Some(&b'#') {
        return Err(Error::format(field, "comments are not supported"));
    }
    let digits_start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if *pos == digits_start {
        return Err(Error::format(field, "expected a decimal number"));
    }
    std::str::from_utf8(&bytes[digits_start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format(field, "number out of range"))
}

/// Thresholds a probability map: a pixel is foreground iff `p >= threshold`.
pub fn binarize(p: &ProbMap, threshold: f64) -> Result<BinaryMask> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Argument(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    Ok(BinaryMask {
        width: p.width,
        height: p.height,
        data: p.data.iter().map(|&v| (v >= threshold) as u8).collect(),
    })
}

/// Foreground pixels with a 4-neighbour in the background, or on the image border.
pub fn extract_contour(m: &BinaryMask) -> BinaryMask {
    let (w, h) = m.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        if !m.get(x, y) {
            return false;
        }
        if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
            return true;
        }
        !(m.get(x - 1, y) && m.get(x + 1, y) && m.get(x, y - 1) && m.get(x, y + 1))
    })
}
