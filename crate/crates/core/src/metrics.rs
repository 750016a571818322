//! Dice overlap, the (uncertainty, accuracy) region taxonomy and the
//! score histogram.

use std::fmt;
use std::io::Write;

use crate::distance::UncertaintyScore;
use crate::error::{Error, Result};
use crate::imaging::{binarize, BinaryMask};
use crate::orchestrator::PoolState;
use crate::predictor::StochasticPredictor;
use rayon::prelude::*;

/// `2|A ∩ B| / (|A| + |B|)`, with two empty masks scoring 1.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Argument(format!(
            "mask sizes differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let (mut inter, mut total) = (0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        inter += (x & y) as usize;
        total += (x + y) as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionLabel {
    /// Confident but wrong, typically a missed lesion.
    R1Undetected,
    /// Uncertain and right.
    R2UncertainCorrect,
    /// Confident and right; pseudo-label material.
    R3CertainCorrect,
    /// Uncertain and wrong.
    R4UncertainWrong,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 4] = [
        RegionLabel::R1Undetected,
        RegionLabel::R2UncertainCorrect,
        RegionLabel::R3CertainCorrect,
        RegionLabel::R4UncertainWrong,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::R1Undetected => "r1",
            RegionLabel::R2UncertainCorrect => "r2",
            RegionLabel::R3CertainCorrect => "r3",
            RegionLabel::R4UncertainWrong => "r4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionThresholds {
    pub tau_u: f64,
    pub tau_d: f64,
}

impl RegionThresholds {
    /// `tau_u` is the median raw score of `scores` (0 when empty).
    pub fn from_scores(scores: &[UncertaintyScore], tau_d: f64) -> Self {
        let raw: Vec<f64> = scores.iter().map(|s| s.raw).collect();
        Self {
            tau_u: median(&raw).unwrap_or(0.0),
            tau_d,
        }
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Quadrant rule on (score vs `tau_u`, dice vs `tau_d`). An empty prediction
/// that misses (dice below `tau_d`) is always undetected.
pub fn classify_region(
    dice_val: f64,
    score: &UncertaintyScore,
    empty_prediction: bool,
    th: &RegionThresholds,
) -> RegionLabel {
    let accurate = dice_val >= th.tau_d;
    if empty_prediction && !accurate {
        return RegionLabel::R1Undetected;
    }
    let uncertain = score.raw >= th.tau_u;
    match (uncertain, accurate) {
        (false, false) => RegionLabel::R1Undetected,
        (true, true) => RegionLabel::R2UncertainCorrect,
        (false, true) => RegionLabel::R3CertainCorrect,
        (true, false) => RegionLabel::R4UncertainWrong,
    }
}

/// Equal-width histogram of raw scores over `[0, max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges; empty when there were no scores.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn region_histogram(scores: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Argument("bins must be >= 1".into()));
    }
    if scores.is_empty() {
        return Ok(Histogram {
            edges: Vec::new(),
            counts: Vec::new(),
        });
    }
    let max = scores.iter().copied().fold(0.0f64, f64::max);
    let width = max / bins as f64;
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &s in scores {
        let b = if width > 0.0 {
            ((s / width).floor().max(0.0) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// One row of the region table.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionRow {
    pub sample_id: u64,
    pub dice: f64,
    pub score: UncertaintyScore,
    pub empty_prediction: bool,
    pub region: RegionLabel,
}

pub const REGION_CSV_HEADER: [&str; 6] = [
    "sample_id",
    "dice",
    "raw_score",
    "normalized_score",
    "empty_prediction",
    "region",
];

pub fn write_region_csv<W: Write>(out: W, rows: &[RegionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REGION_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.sample_id.to_string(),
            r.dice.to_string(),
            r.score.raw.to_string(),
            r.score.normalized.to_string(),
            (r.empty_prediction as u8).to_string(),
            r.region.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<region csv>", e))?;
    Ok(())
}

pub fn read_region_csv<R: std::io::Read>(input: R) -> Result<Vec<RegionRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != REGION_CSV_HEADER {
        return Err(Error::format("region csv header", format!("{header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let bad = |field: &'static str| Error::format(field, format!("row {}", i + 1));
        let num = |k: usize, field: &'static str| rec[k].parse::<f64>().map_err(|_| bad(field));
        rows.push(RegionRow {
            sample_id: rec[0].parse().map_err(|_| bad("sample_id"))?,
            dice: num(1, "dice")?,
            score: UncertaintyScore {
                raw: num(2, "raw_score")?,
                normalized: num(3, "normalized_score")?,
            },
            empty_prediction: match &rec[4] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("empty_prediction")),
            },
            region: RegionLabel::parse(&rec[5]).ok_or_else(|| bad("region"))?,
        });
    }
    Ok(rows)
}

/// Per-region counts in [`RegionLabel::ALL`] order.
pub fn region_counts(rows: &[RegionRow]) -> [usize; 4] {
    let mut c = [0; 4];
    for r in rows {
        c[r.region.index()] += 1;
    }
    c
}

/// Summary of the model and pool after one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationMetrics {
    pub mean_test_dice: f64,
    pub median_test_dice: f64,
    pub n_labeled: usize,
    pub n_pseudo: usize,
    pub region_counts: [usize; 4],
}

/// Per-sample test Dice of deterministic predictions, in id order.
pub fn test_dice<P: StochasticPredictor + ?Sized>(pool: &PoolState, predictor: &P, threshold: f64) -> Result<Vec<f64>> {
    let entries: Vec<_> = pool.test().values().collect();
    entries
        .par_iter()
        .map(|e| {
            let p = predictor.predict_deterministic(&e.image)?;
            dice(&binarize(&p, threshold)?, &e.mask)
        })
        .collect()
}

/// Test-set Dice plus pool bookkeeping. `regions` is the region table of the
/// pool as scored in the same iteration.
pub fn iteration_metrics<P: StochasticPredictor + ?Sized>(
    pool: &PoolState,
    predictor: &P,
    threshold: f64,
    regions: &[RegionRow],
) -> Result<IterationMetrics> {
    if pool.test().is_empty() {
        return Err(Error::Argument("test set is empty".into()));
    }
    let d = test_dice(pool, predictor, threshold)?;
    Ok(IterationMetrics {
        mean_test_dice: d.iter().sum::<f64>() / d.len() as f64,
        median_test_dice: median(&d).expect("nonempty"),
        n_labeled: pool.labeled().len(),
        n_pseudo: pool.pseudo_count(),
        region_counts: region_counts(regions),
    })
}
