//! Complementary sample selection.
//!
//! Each iteration splits the scored unlabeled pool into oracle queries
//! (no-detections, most uncertain, random) and transient pseudo-labels
//! (confident, non-degenerate predictions below a decaying score threshold).

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::imaging::BinaryMask;
use crate::orchestrator::PoolState;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelectionQuotas {
    pub n_no_detection: usize,
    pub n_most_uncertain: usize,
    pub n_random: usize,
}

impl Default for SelectionQuotas {
    fn default() -> Self {
        Self {
            n_no_detection: 10,
            n_most_uncertain: 10,
            n_random: 15,
        }
    }
}

impl SelectionQuotas {
    pub fn total(&self) -> usize {
        self.n_no_detection + self.n_most_uncertain + self.n_random
    }
}

/// Linear pseudo-label score threshold: `max(delta0 - t * decay, floor)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PseudoPolicy {
    pub delta0: f64,
    pub decay: f64,
    pub floor: f64,
}

/// Sized for the reference predictor, whose raw scores on the default
/// synthetic benchmark have a median near 20.
impl Default for PseudoPolicy {
    fn default() -> Self {
        Self {
            delta0: 8.0,
            decay: 0.5,
            floor: 4.0,
        }
    }
}

impl PseudoPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.floor >= 0.0 && self.delta0 >= self.floor && self.decay.is_finite()) {
            return Err(Error::Config(format!(
                "pseudo policy needs 0 <= floor <= delta0 and finite decay: {self:?}"
            )));
        }
        Ok(())
    }
}

pub fn pseudo_threshold(policy: &PseudoPolicy, iteration: usize) -> f64 {
    (policy.delta0 - iteration as f64 * policy.decay).max(policy.floor)
}

/// Scored view of one unlabeled sample.
#[derive(Clone, Debug)]
pub struct SampleRecord {
    pub id: u64,
    pub raw_score: f64,
    pub normalized_score: f64,
    pub degenerate: bool,
    pub predicted: Arc<BinaryMask>,
}

impl SampleRecord {
    pub fn is_empty_prediction(&self) -> bool {
        self.predicted.is_all_zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryReason {
    NoDetection,
    MostUncertain,
    Random,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectionResult {
    pub no_detection: Vec<u64>,
    /// In rank order (highest score first).
    pub most_uncertain: Vec<u64>,
    pub random: Vec<u64>,
    /// Pseudo-labelled samples with their predicted masks.
    pub pseudo: Vec<(u64, Arc<BinaryMask>)>,
}

impl SelectionResult {
    pub fn oracle_ids(&self) -> impl Iterator<Item = (u64, QueryReason)> + '_ {
        self.no_detection
            .iter()
            .map(|&id| (id, QueryReason::NoDetection))
            .chain(self.most_uncertain.iter().map(|&id| (id, QueryReason::MostUncertain)))
            .chain(self.random.iter().map(|&id| (id, QueryReason::Random)))
    }

    pub fn oracle_count(&self) -> usize {
        self.no_detection.len() + self.most_uncertain.len() + self.random.len()
    }

    pub fn pseudo_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.pseudo.iter().map(|(id, _)| *id)
    }
}

/// Uniformly picks up to `k` ids from `candidates` (sorted ascending first so
/// the draw depends only on the id set and the generator).
fn pick_uniform(mut candidates: Vec<u64>, k: usize, rng: &mut Rng) -> Vec<u64> {
    candidates.sort_unstable();
    let k = k.min(candidates.len());
    let mut picked: Vec<u64> = index::sample(rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Chooses oracle queries and pseudo-labels for one iteration.
///
/// Unfilled quota cascades from no-detection to most-uncertain to random;
/// whatever the random bucket cannot absorb is dropped.
pub fn select_complementary(
    records: &[SampleRecord],
    quotas: &SelectionQuotas,
    policy: &PseudoPolicy,
    iteration: usize,
    rng: &mut Rng,
) -> Result<SelectionResult> {
    if records.is_empty() {
        return Err(Error::Argument("no records to select from".into()));
    }
    let mut seen = BTreeSet::new();
    for r in records {
        if !r.raw_score.is_finite() {
            return Err(Error::Argument(format!("sample {} has non-finite score", r.id)));
        }
        if !seen.insert(r.id) {
            return Err(Error::Argument(format!("duplicate sample id {}", r.id)));
        }
    }

    let mut taken: BTreeSet<u64> = BTreeSet::new();

    let empties: Vec<u64> = records
        .iter()
        .filter(|r| r.is_empty_prediction())
        .map(|r| r.id)
        .collect();
    let no_detection = pick_uniform(empties, quotas.n_no_detection, rng);
    taken.extend(&no_detection);
    let carry = quotas.n_no_detection - no_detection.len();

    let mut ranked: Vec<&SampleRecord> = records.iter().filter(|r| !taken.contains(&r.id)).collect();
    ranked.sort_by(|a, b| b.raw_score.total_cmp(&a.raw_score).then(a.id.cmp(&b.id)));
    let want = quotas.n_most_uncertain + carry;
    let most_uncertain: Vec<u64> = ranked.iter().take(want).map(|r| r.id).collect();
    taken.extend(&most_uncertain);
    let carry = want - most_uncertain.len();

    let rest: Vec<u64> = records
        .iter()
        .filter(|r| !taken.contains(&r.id))
        .map(|r| r.id)
        .collect();
    let random = pick_uniform(rest, quotas.n_random + carry, rng);
    taken.extend(&random);

    let threshold = pseudo_threshold(policy, iteration);
    let mut pseudo: Vec<(u64, Arc<BinaryMask>)> = records
        .iter()
        .filter(|r| {
            !taken.contains(&r.id)
                && !r.is_empty_prediction()
                && !r.degenerate
                && r.raw_score < threshold
        })
        .map(|r| (r.id, r.predicted.clone()))
        .collect();
    pseudo.sort_by_key(|(id, _)| *id);

    Ok(SelectionResult {
        no_detection,
        most_uncertain,
        random,
        pseudo,
    })
}

/// Ablation baseline: `budget` oracle queries drawn uniformly, no pseudo-labels.
pub fn select_random(ids: &[u64], budget: usize, rng: &mut Rng) -> SelectionResult {
    SelectionResult {
        random: pick_uniform(ids.to_vec(), budget, rng),
        ..SelectionResult::default()
    }
}

/// Moves oracle picks to the labeled set (ground truth from the oracle) and
/// marks pseudo picks. Pseudo marks from earlier iterations are cleared
/// first. On error the pool is left untouched.
pub fn apply_selection(pool: &mut PoolState, result: &SelectionResult) -> Result<()> {
    let mut ids = BTreeSet::new();
    for id in result.oracle_ids().map(|(id, _)| id).chain(result.pseudo_ids()) {
        if !ids.insert(id) {
            return Err(Error::Consistency(format!("sample {id} selected twice")));
        }
        if !pool.is_unlabeled(id) {
            return Err(Error::Consistency(format!("sample {id} is not in the unlabeled pool")));
        }
    }
    for (id, mask) in &result.pseudo {
        let img = pool.unlabeled_image(*id).expect("checked above");
        if mask.dims() != img.dims() {
            return Err(Error::Consistency(format!(
                "pseudo mask for {id} is {:?}, image is {:?}",
                mask.dims(),
                img.dims()
            )));
        }
    }

    pool.clear_pseudo();
    for (id, _) in result.oracle_ids() {
        let gt = pool.oracle_label(id)?;
        pool.move_to_labeled(id, gt)?;
    }
    for (id, mask) in &result.pseudo {
        pool.mark_pseudo(*id, mask.clone())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn rec(id: u64, raw: f64, empty: bool) -> SampleRecord {
        let predicted = if empty {
            BinaryMask::zeros(4, 4)
        } else {
            BinaryMask::from_fn(4, 4, |x, y| x < 2 && y < 2)
        };
        SampleRecord {
            id,
            raw_score: raw,
            normalized_score: raw / 16.0,
            degenerate: empty,
            predicted: Arc::new(predicted),
        }
    }

    fn zero_policy() -> PseudoPolicy {
        PseudoPolicy { delta0: 0.0, decay: 0.0, floor: 0.0 }
    }

    #[test]
    fn threshold_schedule() {
        let p = PseudoPolicy { delta0: 0.2, decay: 0.02, floor: 0.0 };
        assert!((pseudo_threshold(&p, 3) - 0.14).abs() < 1e-15);
        let c = PseudoPolicy { delta0: 0.2, decay: 0.0, floor: 0.0 };
        assert!((0..50).all(|t| pseudo_threshold(&c, t) == 0.2));
        let f = PseudoPolicy { delta0: 0.2, decay: 0.02, floor: 0.05 };
        assert_eq!(pseudo_threshold(&f, 1000), 0.05);
    }

    #[test]
    fn top_two_by_score() {
        let records: Vec<_> = [5.0, 1.0, 9.0, 3.0].iter().enumerate().map(|(i, &s)| rec(i as u64, s, false)).collect();
        let q = SelectionQuotas { n_no_detection: 0, n_most_uncertain: 2, n_random: 0 };
        let r = select_complementary(&records, &q, &zero_policy(), 0, &mut rng::seeded(1)).unwrap();
        assert_eq!(r.most_uncertain, vec![2, 0]);
        assert!(r.pseudo.is_empty());
        assert!(r.no_detection.is_empty() && r.random.is_empty());
    }

    #[test]
    fn ties_break_by_lower_id() {
        let records = vec![rec(7, 4.0, false), rec(3, 4.0, false), rec(5, 1.0, false)];
        let q = SelectionQuotas { n_no_detection: 0, n_most_uncertain: 1, n_random: 0 };
        let r = select_complementary(&records, &q, &zero_policy(), 0, &mut rng::seeded(1)).unwrap();
        assert_eq!(r.most_uncertain, vec![3]);
    }

    #[test]
    fn all_empty_pool_becomes_oracle_queries() {
        let records: Vec<_> = (0..12).map(|i| rec(i, 0.5, true)).collect();
        let r = select_complementary(
            &records,
            &SelectionQuotas::default(),
            &PseudoPolicy { delta0: 100.0, decay: 0.0, floor: 0.0 },
            0,
            &mut rng::seeded(2),
        )
        .unwrap();
        assert_eq!(r.no_detection.len(), 10);
        assert_eq!(r.most_uncertain.len(), 2);
        assert!(r.random.is_empty());
        assert!(r.pseudo.is_empty());
        let mut all: Vec<u64> = r.oracle_ids().map(|(id, _)| id).collect();
        all.sort_unstable();
        assert_eq!(all, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn pseudo_excludes_degenerate_and_oracle_picks() {
        let mut records = vec![rec(0, 0.1, false), rec(1, 0.2, true), rec(2, 9.0, false), rec(3, 0.3, false)];
        records[3].degenerate = true;
        let q = SelectionQuotas { n_no_detection: 0, n_most_uncertain: 1, n_random: 0 };
        let p = PseudoPolicy { delta0: 1.0, decay: 0.0, floor: 0.0 };
        let r = select_complementary(&records, &q, &p, 0, &mut rng::seeded(3)).unwrap();
        assert_eq!(r.most_uncertain, vec![2]);
        assert_eq!(r.pseudo_ids().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn rejects_bad_records() {
        let q = SelectionQuotas::default();
        let p = PseudoPolicy::default();
        assert!(select_complementary(&[], &q, &p, 0, &mut rng::seeded(0)).is_err());
        let nan = vec![rec(0, f64::NAN, false)];
        assert!(select_complementary(&nan, &q, &p, 0, &mut rng::seeded(0)).is_err());
        let dup = vec![rec(0, 1.0, false), rec(0, 2.0, false)];
        assert!(select_complementary(&dup, &q, &p, 0, &mut rng::seeded(0)).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let records: Vec<_> = (0..40).map(|i| rec(i, (i * 7 % 13) as f64, i % 5 == 0)).collect();
        let q = SelectionQuotas::default();
        let p = PseudoPolicy::default();
        let a = select_complementary(&records, &q, &p, 2, &mut rng::seeded(9)).unwrap();
        let b = select_complementary(&records, &q, &p, 2, &mut rng::seeded(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_baseline_budget() {
        let ids: Vec<u64> = (100..150).collect();
        let r = select_random(&ids, 35, &mut rng::seeded(4));
        assert_eq!(r.random.len(), 35);
        assert!(r.pseudo.is_empty());
        let small = select_random(&ids[..5], 35, &mut rng::seeded(4));
        assert_eq!(small.random, ids[..5].to_vec());
    }
}
