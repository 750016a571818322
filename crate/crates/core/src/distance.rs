//! Exact Euclidean distance transform to the predicted contour and the
//! distance-weighted uncertainty score.
//!
//! The transform is the separable two-phase lower-envelope method of Meijster,
//! Roerdink and Hesselink. Both phases run in integer arithmetic on squared
//! distances, so results are exact; the square root is only taken when a
//! [`DistMap`] is built.

use crate::error::{Error, Result};
use crate::imaging::{extract_contour, BinaryMask};
use crate::uncertainty::UncertaintyMap;

pub use crate::imaging::DistMap;

/// Raw and area-normalised aggregate of a distance-weighted uncertainty map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UncertaintyScore {
    /// `sum(variance * distance)` over all pixels.
    pub raw: f64,
    /// `raw / (width * height)`.
    pub normalized: f64,
}

/// Squared distances (in pixels²) from every pixel to the nearest contour pixel.
pub fn edt_squared(contour: &BinaryMask) -> Result<Vec<u64>> {
    let (w, h) = contour.dims();
    if contour.is_all_zero() {
        return Err(Error::NoContour);
    }
    // Any real distance along one axis is < w + h.
    let inf = (w + h) as i64;

    // Phase 1: per column, distance to the nearest contour pixel in that column.
    let mut g = vec![inf; w * h];
    for x in 0..w {
        if contour.get(x, 0) {
            g[x] = 0;
        }
        for y in 1..h {
            g[y * w + x] = if contour.get(x, y) {
                0
            } else {
                (g[(y - 1) * w + x] + 1).min(inf)
            };
        }
        for y in (0..h.saturating_sub(1)).rev() {
            let below = g[(y + 1) * w + x];
            if below + 1 < g[y * w + x] {
                g[y * w + x] = below + 1;
            }
        }
    }

    // Phase 2: per row, lower envelope of the parabolas (x - i)² + g(i)².
    let mut out = vec![0u64; w * h];
    let mut s = vec![0usize; w];
    let mut t = vec![0i64; w];
    for y in 0..h {
        let row = &g[y * w..(y + 1) * w];
        let f = |x: i64, i: usize| (x - i as i64).pow(2) + row[i].pow(2);
        // Position from which parabola u lies below parabola i (u > i).
        let sep = |i: usize, u: usize| {
            let (ii, uu) = (i as i64, u as i64);
            (uu * uu - ii * ii + row[u].pow(2) - row[i].pow(2)).div_euclid(2 * (uu - ii))
        };

        let mut q: isize = 0;
        s[0] = 0;
        t[0] = 0;
        for u in 1..w {
            while q >= 0 && f(t[q as usize], s[q as usize]) > f(t[q as usize], u) {
                q -= 1;
            }
            if q < 0 {
                q = 0;
                s[0] = u;
            } else {
                let next = 1 + sep(s[q as usize], u);
                if next < w as i64 {
                    q += 1;
                    s[q as usize] = u;
                    t[q as usize] = next;
                }
            }
        }
        for u in (0..w).rev() {
            out[y * w + u] = f(u as i64, s[q as usize]) as u64;
            if u as i64 == t[q as usize] {
                q -= 1;
            }
        }
    }
    Ok(out)
}

fn to_dist_map(contour: &BinaryMask, sq: Vec<u64>) -> DistMap {
    DistMap::new(
        contour.width(),
        contour.height(),
        sq.into_iter().map(|d| (d as f64).sqrt()).collect(),
    )
    .expect("dimensions match by construction")
}

/// Exact Euclidean distance (between pixel centres) to the nearest contour pixel.
pub fn edt_exact(contour: &BinaryMask) -> Result<DistMap> {
    let sq = edt_squared(contour)?;
    Ok(to_dist_map(contour, sq))
}

/// Exhaustive nearest-contour search. O(pixels × contour pixels); meant as a
/// reference for [`edt_squared`].
pub fn edt_brute_squared(contour: &BinaryMask) -> Result<Vec<u64>> {
    let (w, h) = contour.dims();
    let points: Vec<(i64, i64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| contour.get(x, y))
        .map(|(x, y)| (x as i64, y as i64))
        .collect();
    if points.is_empty() {
        return Err(Error::NoContour);
    }
    Ok((0..h as i64)
        .flat_map(|y| (0..w as i64).map(move |x| (x, y)))
        .map(|(x, y)| {
            points
                .iter()
                .map(|&(cx, cy)| ((x - cx).pow(2) + (y - cy).pow(2)) as u64)
                .min()
                .expect("nonempty")
        })
        .collect())
}

pub fn edt_brute(contour: &BinaryMask) -> Result<DistMap> {
    let sq = edt_brute_squared(contour)?;
    Ok(to_dist_map(contour, sq))
}

/// `raw = sum(u * d)`, `normalized = raw / area`.
pub fn weighted_score(u: &UncertaintyMap, d: &DistMap) -> Result<UncertaintyScore> {
    if u.dims() != d.dims() {
        return Err(Error::Argument(format!(
            "uncertainty map is {:?}, distance map is {:?}",
            u.dims(),
            d.dims()
        )));
    }
    let raw: f64 = u.data().iter().zip(d.data()).map(|(a, b)| a * b).sum();
    Ok(UncertaintyScore {
        raw,
        normalized: raw / u.len() as f64,
    })
}

/// Scores one prediction. Empty or full predictions have no usable contour;
/// they fall back to the plain variance sum and are flagged degenerate.
pub fn score_sample(u: &UncertaintyMap, predicted: &BinaryMask) -> Result<(UncertaintyScore, bool)> {
    if u.dims() != predicted.dims() {
        return Err(Error::Argument(format!(
            "uncertainty map is {:?}, prediction is {:?}",
            u.dims(),
            predicted.dims()
        )));
    }
    if predicted.is_all_zero() || predicted.is_all_one() {
        let raw: f64 = u.data().iter().sum();
        return Ok((
            UncertaintyScore {
                raw,
                normalized: raw / u.len() as f64,
            },
            true,
        ));
    }
    let dist = edt_exact(&extract_contour(predicted))?;
    Ok((weighted_score(u, &dist)?, false))
}
