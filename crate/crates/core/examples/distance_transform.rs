//! Contour extraction and the exact Euclidean distance transform, checked
//! against the brute-force reference.

use ceal::distance::{edt_brute, edt_exact};
use ceal::imaging::{extract_contour, BinaryMask};

fn main() -> ceal::Result<()> {
    let (w, h) = (24, 14);
    let mask = BinaryMask::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - 9.0, y as f64 - 7.0);
        (dx / 6.0).powi(2) + (dy / 4.0).powi(2) <= 1.0
    });
    let contour = extract_contour(&mask);
    let dist = edt_exact(&contour)?;
    assert_eq!(dist, edt_brute(&contour)?);

    println!("mask ('#') and contour ('o'):");
    for y in 0..h {
        let row: String = (0..w)
            .map(|x| match (mask.get(x, y), contour.get(x, y)) {
                (_, true) => 'o',
                (true, false) => '#',
                _ => '.',
            })
            .collect();
        println!("  {row}");
    }
    println!("distance to the contour, rounded:");
    for y in 0..h {
        let row: String = (0..w)
            .map(|x| {
                let d = dist.get(x, y).round() as u32;
                char::from_digit(d.min(35), 36).unwrap()
            })
            .collect();
        println!("  {row}");
    }
    let max = dist.data().iter().cloned().fold(0.0, f64::max);
    println!("contour pixels {}, farthest pixel {max:.3}", contour.count());
    Ok(())
}
