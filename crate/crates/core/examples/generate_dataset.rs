//! Writes a small synthetic lesion dataset and reads it back.
//!
//! ```text
//! cargo run --example generate_dataset -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use ceal::synthdata::{generate_dataset, load_dataset, SynthParams};

fn main() -> ceal::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ceal_example_dataset"));

    let params = SynthParams::default();
    let manifest = generate_dataset(50, &params, 7, &out)?;
    println!("wrote {} samples, manifest at {}", manifest.ids.len(), manifest.path.display());

    let samples = load_dataset(&out)?;
    let empty = samples.iter().filter(|s| s.mask.is_all_zero()).count();
    let mean_area =
        samples.iter().map(|s| s.mask.count()).sum::<usize>() as f64 / (samples.len() - empty).max(1) as f64;
    println!("{empty} samples without a lesion, mean lesion area {mean_area:.1} px");

    let s = &samples[0];
    println!("sample {} ({}x{}):", s.id, s.image.width(), s.image.height());
    for y in (0..s.image.height()).step_by(2) {
        let row: String = (0..s.image.width())
            .map(|x| {
                let v = s.image.get(x, y);
                if s.mask.get(x, y) {
                    '#'
                } else if v < 0.5 {
                    '+'
                } else {
                    '.'
                }
            })
            .collect();
        println!("  {row}");
    }
    println!("('#' lesion, '+' dark background pixel, '.' background)");
    Ok(())
}
