//! The active-learning loop: pool initialisation, then per iteration
//! MC-predict → score → select → label → retrain → evaluate.
//!
//! Every random draw comes from a stream keyed by `(seed, iteration, phase)`
//! (and the sample id where relevant), so a run is a pure function of the
//! config, the dataset and the seed.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::distance::score_sample;
use crate::error::{Error, Result};
use crate::imaging::{binarize, BinaryMask, GrayImage};
use crate::metrics::{
    classify_region, dice, iteration_metrics, RegionRow, RegionThresholds,
};
use crate::predictor::{StochasticPredictor, TrainConfig, TrainSample};
use crate::rng::{self, Phase};
use crate::selection::{
    apply_selection, pseudo_threshold, select_complementary, select_random, PseudoPolicy,
    SampleRecord, SelectionQuotas, SelectionResult,
};
use crate::synthdata::Sample;
use crate::uncertainty::{mc_predict, McConfig};

#[derive(Clone, Debug)]
pub struct LabeledEntry {
    pub image: Arc<GrayImage>,
    pub mask: Arc<BinaryMask>,
}

#[derive(Clone, Debug)]
pub struct UnlabeledEntry {
    pub image: Arc<GrayImage>,
    /// Transient pseudo-label for the current iteration.
    pub pseudo: Option<Arc<BinaryMask>>,
}

/// Partition of sample ids into labeled, unlabeled and test sets. Ground
/// truth for unlabeled samples is only reachable through
/// [`PoolState::oracle_label`].
#[derive(Clone, Debug, Default)]
pub struct PoolState {
    labeled: BTreeMap<u64, LabeledEntry>,
    unlabeled: BTreeMap<u64, UnlabeledEntry>,
    test: BTreeMap<u64, LabeledEntry>,
    hidden_gt: BTreeMap<u64, Arc<BinaryMask>>,
    oracle_queries: usize,
}

impl PoolState {
    pub fn labeled(&self) -> &BTreeMap<u64, LabeledEntry> {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeMap<u64, UnlabeledEntry> {
        &self.unlabeled
    }

    pub fn test(&self) -> &BTreeMap<u64, LabeledEntry> {
        &self.test
    }

    pub fn oracle_queries(&self) -> usize {
        self.oracle_queries
    }

    pub fn is_unlabeled(&self, id: u64) -> bool {
        self.unlabeled.contains_key(&id)
    }

    pub fn unlabeled_image(&self, id: u64) -> Option<&Arc<GrayImage>> {
        self.unlabeled.get(&id).map(|e| &e.image)
    }

    pub fn pseudo_count(&self) -> usize {
        self.unlabeled.values().filter(|e| e.pseudo.is_some()).count()
    }

    /// Simulated annotator: reveals the ground truth of an unlabeled sample
    /// and counts the query.
    pub fn oracle_label(&mut self, id: u64) -> Result<Arc<BinaryMask>> {
        if !self.unlabeled.contains_key(&id) {
            return Err(Error::Consistency(format!(
                "oracle queried for {id}, which is not unlabeled"
            )));
        }
        let gt = self
            .hidden_gt
            .get(&id)
            .cloned()
            .ok_or_else(|| Error::Consistency(format!("no hidden ground truth for {id}")))?;
        self.oracle_queries += 1;
        Ok(gt)
    }

    pub(crate) fn move_to_labeled(&mut self, id: u64, mask: Arc<BinaryMask>) -> Result<()> {
        let entry = self
            .unlabeled
            .remove(&id)
            .ok_or_else(|| Error::Consistency(format!("{id} is not unlabeled")))?;
        self.hidden_gt.remove(&id);
        self.labeled.insert(
            id,
            LabeledEntry {
                image: entry.image,
                mask,
            },
        );
        Ok(())
    }

    pub(crate) fn mark_pseudo(&mut self, id: u64, mask: Arc<BinaryMask>) -> Result<()> {
        let entry = self
            .unlabeled
            .get_mut(&id)
            .ok_or_else(|| Error::Consistency(format!("{id} is not unlabeled")))?;
        entry.pseudo = Some(mask);
        Ok(())
    }

    pub(crate) fn clear_pseudo(&mut self) {
        for e in self.unlabeled.values_mut() {
            e.pseudo = None;
        }
    }

    /// Ground truth as seen by evaluation code (region analysis), never by selection.
    pub(crate) fn hidden_gt(&self, id: u64) -> Option<&Arc<BinaryMask>> {
        self.hidden_gt.get(&id)
    }

    /// Labeled samples followed by pseudo-marked ones, both in id order.
    pub fn training_set(&self) -> (Vec<u64>, Vec<TrainSample>) {
        let mut ids = Vec::new();
        let mut set = Vec::new();
        for (&id, e) in &self.labeled {
            ids.push(id);
            set.push(TrainSample {
                image: e.image.clone(),
                target: e.mask.clone(),
            });
        }
        for (&id, e) in &self.unlabeled {
            if let Some(p) = &e.pseudo {
                ids.push(id);
                set.push(TrainSample {
                    image: e.image.clone(),
                    target: p.clone(),
                });
            }
        }
        (ids, set)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let l: BTreeSet<u64> = self.labeled.keys().copied().collect();
        let u: BTreeSet<u64> = self.unlabeled.keys().copied().collect();
        let t: BTreeSet<u64> = self.test.keys().copied().collect();
        if !l.is_disjoint(&u) || !l.is_disjoint(&t) || !u.is_disjoint(&t) {
            return Err(Error::Consistency("pool id sets overlap".into()));
        }
        if !self.hidden_gt.keys().copied().eq(u.iter().copied()) {
            return Err(Error::Consistency("hidden ground truth does not match unlabeled ids".into()));
        }
        Ok(())
    }
}

/// Split the dataset uniformly at random into labeled, unlabeled and test sets.
pub fn init_pools(dataset: &[Sample], config: &RunConfig) -> Result<PoolState> {
    let need = config.n_labeled + config.n_unlabeled + config.n_test;
    if dataset.len() < need {
        return Err(Error::Config(format!(
            "dataset has {} samples, split needs {need}",
            dataset.len()
        )));
    }
    let mut by_id: BTreeMap<u64, &Sample> = BTreeMap::new();
    for s in dataset {
        if by_id.insert(s.id, s).is_some() {
            return Err(Error::Config(format!("duplicate sample id {}", s.id)));
        }
    }
    let ids: Vec<u64> = by_id.keys().copied().collect();
    let mut r = rng::stream(config.seed, &[Phase::Init as u64]);
    let order = rand::seq::index::sample(&mut r, ids.len(), need);

    let mut pool = PoolState::default();
    for (k, i) in order.into_iter().enumerate() {
        let s = by_id[&ids[i]];
        if k < config.n_labeled {
            pool.labeled.insert(
                s.id,
                LabeledEntry {
                    image: s.image.clone(),
                    mask: s.mask.clone(),
                },
            );
        } else if k < config.n_labeled + config.n_unlabeled {
            pool.unlabeled.insert(
                s.id,
                UnlabeledEntry {
                    image: s.image.clone(),
                    pseudo: None,
                },
            );
            pool.hidden_gt.insert(s.id, s.mask.clone());
        } else {
            pool.test.insert(
                s.id,
                LabeledEntry {
                    image: s.image.clone(),
                    mask: s.mask.clone(),
                },
            );
        }
    }
    Ok(pool)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Uncertainty-driven complementary selection with pseudo-labels.
    Ceal,
    /// Uniform sampling of the same oracle budget, no pseudo-labels.
    Random,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Ceal => "ceal",
            Strategy::Random => "random",
        }
    }
}

/// All parameters of a run. Defaults follow the published setup where one is
/// given (split 600/1000/400, T = 10, p_d = 0.5, quotas 10/10/15,
/// 9 iterations of 2 epochs).
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_test: usize,
    pub mc: McConfig,
    pub quotas: SelectionQuotas,
    pub pseudo: PseudoPolicy,
    pub train: TrainConfig,
    pub iterations: usize,
    pub threshold: f64,
    pub seed: u64,
    pub strategy: Strategy,
    /// Continue from the current weights each iteration instead of resetting.
    pub warm_start: bool,
    pub tau_d: f64,
    /// Record wall-clock time in the log. Off by default so logs are
    /// byte-reproducible.
    pub log_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_labeled: 600,
            n_unlabeled: 1000,
            n_test: 400,
            mc: McConfig::default(),
            quotas: SelectionQuotas::default(),
            pseudo: PseudoPolicy::default(),
            train: TrainConfig::default(),
            iterations: 9,
            threshold: 0.5,
            seed: 42,
            strategy: Strategy::Ceal,
            warm_start: true,
            tau_d: 0.5,
            log_timing: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.mc.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.train.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.pseudo.validate()?;
        if self.iterations < 1 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if self.n_labeled == 0 {
            return Err(Error::Config("n_labeled must be >= 1".into()));
        }
        if self.n_test == 0 {
            return Err(Error::Config("n_test must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if !(0.0..=1.0).contains(&self.tau_d) {
            return Err(Error::Config(format!("tau_d {} outside [0, 1]", self.tau_d)));
        }
        Ok(())
    }
}

/// One line of the run log.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub n_labeled: usize,
    pub n_pseudo: usize,
    pub pseudo_threshold: f64,
    pub oracle_no_detect: usize,
    pub oracle_uncertain: usize,
    pub oracle_random: usize,
    pub mean_test_dice: f64,
    pub median_test_dice: f64,
    pub regions: [usize; 4],
    pub elapsed_ms: u64,
}

pub const RUN_LOG_HEADER: [&str; 14] = [
    "iteration",
    "n_labeled",
    "n_pseudo",
    "pseudo_threshold",
    "oracle_no_detect",
    "oracle_uncertain",
    "oracle_random",
    "mean_test_dice",
    "median_test_dice",
    "r1",
    "r2",
    "r3",
    "r4",
    "elapsed_ms",
];

pub fn write_log_csv<W: Write>(out: W, records: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_LOG_HEADER)?;
    for r in records {
        w.write_record([
            r.iteration.to_string(),
            r.n_labeled.to_string(),
            r.n_pseudo.to_string(),
            r.pseudo_threshold.to_string(),
            r.oracle_no_detect.to_string(),
            r.oracle_uncertain.to_string(),
            r.oracle_random.to_string(),
            r.mean_test_dice.to_string(),
            r.median_test_dice.to_string(),
            r.regions[0].to_string(),
            r.regions[1].to_string(),
            r.regions[2].to_string(),
            r.regions[3].to_string(),
            r.elapsed_ms.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<run log>", e))?;
    Ok(())
}

pub fn read_log_csv<R: Read>(input: R) -> Result<Vec<IterationRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != RUN_LOG_HEADER {
        return Err(Error::format("run log header", format!("{header:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let int = |k: usize| -> Result<usize> {
            rec[k]
                .parse()
                .map_err(|_| Error::format(RUN_LOG_HEADER[k], format!("row {row}: {:?}", &rec[k])))
        };
        let real = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|_| Error::format(RUN_LOG_HEADER[k], format!("row {row}: {:?}", &rec[k])))
        };
        out.push(IterationRecord {
            iteration: int(0)?,
            n_labeled: int(1)?,
            n_pseudo: int(2)?,
            pseudo_threshold: real(3)?,
            oracle_no_detect: int(4)?,
            oracle_uncertain: int(5)?,
            oracle_random: int(6)?,
            mean_test_dice: real(7)?,
            median_test_dice: real(8)?,
            regions: [int(9)?, int(10)?, int(11)?, int(12)?],
            elapsed_ms: int(13)? as u64,
        });
    }
    Ok(out)
}

/// Everything one iteration produced.
#[derive(Clone, Debug)]
pub struct IterationOutcome<P> {
    pub state: PoolState,
    pub predictor: P,
    pub record: IterationRecord,
    pub selection: SelectionResult,
    /// Scores of the unlabeled pool as the selection saw it.
    pub scored: Vec<SampleRecord>,
    /// Region taxonomy of the scored pool (uses hidden ground truth; analysis only).
    pub regions: Vec<RegionRow>,
    /// Ids the predictor was retrained on.
    pub training_ids: Vec<u64>,
}

/// MC-predicts and scores every unlabeled sample, in id order.
pub fn score_pool<P: StochasticPredictor>(
    state: &PoolState,
    predictor: &P,
    config: &RunConfig,
    iteration: usize,
) -> Result<Vec<SampleRecord>> {
    let entries: Vec<(u64, &Arc<GrayImage>)> = state.unlabeled.iter().map(|(&id, e)| (id, &e.image)).collect();
    entries
        .par_iter()
        .map(|&(id, image)| {
            let mut r = rng::stream(config.seed, &[iteration as u64, Phase::Score as u64, id]);
            let (mean, var) = mc_predict(predictor, image, &config.mc, &mut r)?;
            let predicted = binarize(&mean, config.threshold)?;
            let (score, degenerate) = score_sample(&var, &predicted)?;
            Ok(SampleRecord {
                id,
                raw_score: score.raw,
                normalized_score: score.normalized,
                degenerate,
                predicted: Arc::new(predicted),
            })
        })
        .collect()
}

/// Region table of scored samples against the hidden ground truth.
pub fn region_rows(state: &PoolState, scored: &[SampleRecord], tau_d: f64) -> Result<Vec<RegionRow>> {
    let scores: Vec<_> = scored
        .iter()
        .map(|r| crate::distance::UncertaintyScore {
            raw: r.raw_score,
            normalized: r.normalized_score,
        })
        .collect();
    let th = RegionThresholds::from_scores(&scores, tau_d);
    scored
        .iter()
        .zip(&scores)
        .map(|(r, score)| {
            let gt = state
                .hidden_gt(r.id)
                .ok_or_else(|| Error::Consistency(format!("no ground truth for {}", r.id)))?;
            let d = dice(&r.predicted, gt)?;
            let empty = r.is_empty_prediction();
            Ok(RegionRow {
                sample_id: r.id,
                dice: d,
                score: *score,
                empty_prediction: empty,
                region: classify_region(d, score, empty, &th),
            })
        })
        .collect()
}

/// One loop iteration. The inputs are not modified; on error nothing changes.
pub fn run_iteration<P: StochasticPredictor + Clone>(
    state: &PoolState,
    predictor: &P,
    config: &RunConfig,
    iteration: usize,
    reset: Option<&dyn Fn() -> P>,
) -> Result<IterationOutcome<P>> {
    let started = Instant::now();
    let scored = if state.unlabeled.is_empty() {
        Vec::new()
    } else {
        score_pool(state, predictor, config, iteration)?
    };
    let regions = region_rows(state, &scored, config.tau_d)?;

    let mut select_rng = rng::stream(config.seed, &[iteration as u64, Phase::Select as u64]);
    let selection = if scored.is_empty() {
        SelectionResult::default()
    } else {
        match config.strategy {
            Strategy::Ceal => select_complementary(&scored, &config.quotas, &config.pseudo, iteration, &mut select_rng)?,
            Strategy::Random => {
                let ids: Vec<u64> = scored.iter().map(|r| r.id).collect();
                select_random(&ids, config.quotas.total(), &mut select_rng)
            }
        }
    };

    let mut next = state.clone();
    apply_selection(&mut next, &selection)?;
    next.check_invariants()?;

    let (training_ids, training_set) = next.training_set();
    if training_ids.iter().any(|id| next.test.contains_key(id)) {
        return Err(Error::Consistency("test sample in training set".into()));
    }
    let mut model = match (config.warm_start, reset) {
        (false, Some(fresh)) => fresh(),
        _ => predictor.clone(),
    };
    let mut train_rng = rng::stream(config.seed, &[iteration as u64, Phase::Train as u64]);
    model.train(&training_set, &config.train, &mut train_rng)?;

    let m = iteration_metrics(&next, &model, config.threshold, &regions)?;
    let threshold_used = match config.strategy {
        Strategy::Ceal => pseudo_threshold(&config.pseudo, iteration),
        Strategy::Random => 0.0,
    };
    let record = IterationRecord {
        iteration,
        n_labeled: m.n_labeled,
        n_pseudo: m.n_pseudo,
        pseudo_threshold: threshold_used,
        oracle_no_detect: selection.no_detection.len(),
        oracle_uncertain: selection.most_uncertain.len(),
        oracle_random: selection.random.len(),
        mean_test_dice: m.mean_test_dice,
        median_test_dice: m.median_test_dice,
        regions: m.region_counts,
        elapsed_ms: if config.log_timing {
            started.elapsed().as_millis() as u64
        } else {
            0
        },
    };

    Ok(IterationOutcome {
        state: next,
        predictor: model,
        record,
        selection,
        scored,
        regions,
        training_ids,
    })
}

/// Result of a full run.
#[derive(Clone, Debug)]
pub struct RunLog {
    pub config: RunConfig,
    /// Test Dice (mean, median) of the seed model before the first iteration.
    pub initial_test_dice: (f64, f64),
    pub records: Vec<IterationRecord>,
    pub oracle_queries: usize,
    /// Region table from the last iteration.
    pub final_regions: Vec<RegionRow>,
    pub selections: Vec<SelectionResult>,
}

impl RunLog {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_log_csv(&mut buf, &self.records)?;
        Ok(buf)
    }
}

/// Trains the seed model, then runs `config.iterations` iterations.
pub fn run<P, F>(config: &RunConfig, dataset: &[Sample], factory: F) -> Result<RunLog>
where
    P: StochasticPredictor + Clone,
    F: Fn() -> P,
{
    run_with(config, dataset, factory, |_| {})
}

/// [`run`] with a callback after every completed iteration.
pub fn run_with<P, F>(
    config: &RunConfig,
    dataset: &[Sample],
    factory: F,
    mut on_iteration: impl FnMut(&IterationOutcome<P>),
) -> Result<RunLog>
where
    P: StochasticPredictor + Clone,
    F: Fn() -> P,
{
    config.validate()?;
    let mut state = init_pools(dataset, config)?;
    let mut predictor = factory();
    let (_, seed_set) = state.training_set();
    let mut r = rng::stream(config.seed, &[Phase::InitialTrain as u64]);
    predictor.train(&seed_set, &config.train, &mut r)?;
    let initial = iteration_metrics(&state, &predictor, config.threshold, &[])?;

    let mut log = RunLog {
        config: config.clone(),
        initial_test_dice: (initial.mean_test_dice, initial.median_test_dice),
        records: Vec::with_capacity(config.iterations),
        oracle_queries: 0,
        final_regions: Vec::new(),
        selections: Vec::with_capacity(config.iterations),
    };
    for iteration in 0..config.iterations {
        let outcome = run_iteration(&state, &predictor, config, iteration, Some(&factory))
            .map_err(|e| Error::Iteration {
                iteration,
                source: Box::new(e),
            })?;
        on_iteration(&outcome);
        log.records.push(outcome.record);
        log.selections.push(outcome.selection);
        log.final_regions = outcome.regions;
        state = outcome.state;
        predictor = outcome.predictor;
    }
    log.oracle_queries = state.oracle_queries();
    Ok(log)
}
