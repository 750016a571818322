//! Cost-effective active learning for binary image segmentation.
//!
//! An unlabeled pool is ranked by Monte-Carlo-dropout pixel variance,
//! weighted by the exact Euclidean distance to the predicted contour. Each
//! iteration sends empty predictions, the most uncertain samples and a random
//! draw to a (simulated) oracle, pseudo-labels confident predictions, and
//! fine-tunes the segmenter on both.
//!
//! Modules map onto the pipeline:
//!
//! - [`imaging`]: rasters, PGM I/O, binarization, contours
//! - [`synthdata`]: deterministic synthetic lesion datasets
//! - [`uncertainty`]: streaming per-pixel variance and MC-dropout inference
//! - [`distance`]: exact EDT and the distance-weighted score
//! - [`predictor`]: the predictor trait, a reference model, external processes
//! - [`selection`]: complementary selection and pseudo-labels
//! - [`metrics`]: Dice, region taxonomy, histograms
//! - [`orchestrator`]: the loop and its log
//! - [`config`] and [`cli`]: the command-line front end

pub mod cli;
pub mod config;
pub mod distance;
pub mod error;
pub mod imaging;
pub mod metrics;
pub mod orchestrator;
pub mod predictor;
pub mod rng;
pub mod selection;
pub mod synthdata;
pub mod uncertainty;

pub use error::{Error, Result};
