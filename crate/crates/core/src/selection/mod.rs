//! Budget planning and query-set selection.
//!
//! A run spends `floor(B * n_target)` labels over `R` rounds. Each round a
//! [`Criterion`] picked by name from the [`CriterionRegistry`] chooses the
//! round's quota from the unlabeled target samples.

mod registry;

use std::cell::OnceCell;
use std::collections::{BTreeSet, HashMap};

pub use registry::{Badge, Clue, Coreset, Criterion, CriterionRegistry, Ranked, Scorer};

use crate::cluster::{kmeans, nearest_distinct};
use crate::criteria::ScoreVector;
use crate::error::{LadaError, Result};
use crate::model::Classifier;
use crate::neighbors::NeighborIndex;
use crate::rng::Rng;

/// Datasets with very many samples per class use half the oversampling ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetKind {
    #[default]
    Standard,
    HugePerClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundPlan {
    pub budget: f64,
    pub rounds: usize,
    /// `floor(B * n_target)`.
    pub total: usize,
    pub per_round: usize,
    /// Added to the final round.
    pub remainder: usize,
    /// Candidate oversampling ratio `M`.
    pub oversample: usize,
    /// Epochs (counted from the start of training) at which rounds happen.
    pub schedule: Vec<usize>,
}

/// `ceil(55 / (100 B) - 1)`, then `ceil(M / 2)` for huge-per-class data.
pub fn oversample_ratio(budget: f64, kind: DatasetKind) -> usize {
    let raw = 55.0 / (100.0 * budget) - 1.0;
    // 1e-9 absorbs representation error such as 55 / (100 * 0.05) = 11.000000000000002
    let m = (raw - 1e-9).ceil().max(0.0) as usize;
    match kind {
        DatasetKind::Standard => m,
        DatasetKind::HugePerClass => m.div_ceil(2),
    }
}

pub fn default_schedule(rounds: usize) -> Vec<usize> {
    (0..rounds).map(|r| 10 + 2 * r).collect()
}

pub fn plan_budget(
    n_target: usize,
    budget: f64,
    rounds: usize,
    kind: DatasetKind,
) -> Result<RoundPlan> {
    if !(budget > 0.0 && budget <= 1.0) {
        return Err(LadaError::config(format!(
            "budget fraction must lie in (0, 1], got {budget}"
        )));
    }
    if rounds == 0 {
        return Err(LadaError::config("at least one query round is required"));
    }
    let total = (budget * n_target as f64 + 1e-9).floor() as usize;
    if total < rounds {
        return Err(LadaError::config(format!(
            "budget of {total} labels cannot cover {rounds} rounds"
        )));
    }
    Ok(RoundPlan {
        budget,
        rounds,
        total,
        per_round: total / rounds,
        remainder: total % rounds,
        oversample: oversample_ratio(budget, kind),
        schedule: default_schedule(rounds),
    })
}

impl RoundPlan {
    pub fn with_schedule(mut self, schedule: Vec<usize>) -> Result<Self> {
        if schedule.len() != self.rounds {
            return Err(LadaError::config(format!(
                "schedule lists {} epochs for {} rounds",
                schedule.len(),
                self.rounds
            )));
        }
        if schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LadaError::config(
                "query schedule must be strictly increasing",
            ));
        }
        self.schedule = schedule;
        Ok(self)
    }

    pub fn with_oversample(mut self, m: usize) -> Self {
        self.oversample = m;
        self
    }

    /// Labels spent in round `r` (0-based).
    pub fn round_size(&self, r: usize) -> usize {
        if r + 1 == self.rounds {
            self.per_round + self.remainder
        } else {
            self.per_round
        }
    }

    pub fn candidate_count(&self, r: usize) -> usize {
        (1 + self.oversample) * self.round_size(r)
    }

    /// The round scheduled at `epoch`, if any.
    pub fn round_at(&self, epoch: usize) -> Option<usize> {
        self.schedule.iter().position(|&e| e == epoch)
    }
}

/// Everything a criterion may look at: unlabeled target samples with their
/// current embeddings and predictions, plus embeddings of the queried set.
/// Ground-truth labels are deliberately absent.
pub struct SelectionContext {
    ids: Vec<u64>,
    embeddings: Vec<Vec<f64>>,
    probs: Vec<Vec<f64>>,
    labeled: Vec<(u64, Vec<f64>)>,
    k: usize,
    oversample: usize,
    pos: HashMap<u64, usize>,
    index: OnceCell<NeighborIndex>,
}

impl SelectionContext {
    pub fn new(
        ids: Vec<u64>,
        embeddings: Vec<Vec<f64>>,
        probs: Vec<Vec<f64>>,
        labeled: Vec<(u64, Vec<f64>)>,
        k: usize,
        oversample: usize,
    ) -> Result<Self> {
        if embeddings.len() != ids.len() || probs.len() != ids.len() {
            return Err(LadaError::data(
                "selection context needs one embedding and one prediction per id",
            ));
        }
        let pos: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        if pos.len() != ids.len() {
            return Err(LadaError::data("duplicate ids in selection context"));
        }
        Ok(SelectionContext {
            ids,
            embeddings,
            probs,
            labeled,
            k,
            oversample,
            pos,
            index: OnceCell::new(),
        })
    }

    /// Runs `model` over the unlabeled and labeled features.
    pub fn from_model(
        model: &Classifier,
        unlabeled: &[(u64, &[f64])],
        labeled: &[(u64, &[f64])],
        k: usize,
        oversample: usize,
    ) -> Result<Self> {
        let mut embeddings = Vec::with_capacity(unlabeled.len());
        let mut probs = Vec::with_capacity(unlabeled.len());
        for (_, x) in unlabeled {
            let (e, p) = model.forward(x)?;
            embeddings.push(e);
            probs.push(p);
        }
        let labeled = labeled
            .iter()
            .map(|(id, x)| (*id, model.embed(x)))
            .collect();
        Self::new(
            unlabeled.iter().map(|(id, _)| *id).collect(),
            embeddings,
            probs,
            labeled,
            k,
            oversample,
        )
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn embeddings(&self) -> &[Vec<f64>] {
        &self.embeddings
    }

    pub fn embedding(&self, id: u64) -> Option<&[f64]> {
        self.pos.get(&id).map(|&i| self.embeddings[i].as_slice())
    }

    pub fn items(&self) -> Vec<(u64, &[f64])> {
        self.ids
            .iter()
            .copied()
            .zip(self.embeddings.iter().map(Vec::as_slice))
            .collect()
    }

    pub fn labeled_items(&self) -> Vec<(u64, &[f64])> {
        self.labeled
            .iter()
            .map(|(id, e)| (*id, e.as_slice()))
            .collect()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    /// Cosine neighbor index over the unlabeled embeddings, built on first use.
    pub fn index(&self) -> Result<&NeighborIndex> {
        if let Some(index) = self.index.get() {
            return Ok(index);
        }
        let k = self.k.min(self.ids.len().saturating_sub(1));
        let built = NeighborIndex::build(&self.ids, &self.embeddings, k)?;
        Ok(self.index.get_or_init(|| built))
    }
}

/// Top `(1 + M) b` samples by score, then `b` of them spread out by k-means
/// on their embeddings: the candidate nearest each centroid, each candidate
/// used at most once.
pub fn diverse_select(
    items: &[(u64, &[f64])],
    scores: &ScoreVector,
    b: usize,
    oversample: usize,
    rng: &mut Rng,
) -> Result<Vec<u64>> {
    if b > scores.len() {
        return Err(LadaError::config(format!(
            "cannot select {b} of {} samples",
            scores.len()
        )));
    }
    let mut want = (1 + oversample) * b;
    if want > scores.len() {
        log::warn!(
            "only {} unlabeled samples for a candidate set of {want}; using all of them",
            scores.len()
        );
        want = scores.len();
    }
    let mut candidates = scores.top(want);
    if candidates.len() <= b {
        return Ok(candidates);
    }
    candidates.sort_unstable();
    let lookup: HashMap<u64, &[f64]> = items.iter().copied().collect();
    let points = candidates
        .iter()
        .map(|id| {
            lookup
                .get(id)
                .copied()
                .ok_or_else(|| LadaError::data(format!("no embedding for candidate {id}")))
        })
        .collect::<Result<Vec<&[f64]>>>()?;
    let centroids = kmeans(&points, None, b, rng)?;
    Ok(nearest_distinct(&points, &centroids)
        .into_iter()
        .map(|i| candidates[i])
        .collect())
}

/// Runs `criterion` for round `round` and checks the result: exactly the
/// round quota, distinct, all unlabeled.
pub fn select(
    criterion: &dyn Criterion,
    ctx: &SelectionContext,
    plan: &RoundPlan,
    round: usize,
    rng: &mut Rng,
) -> Result<Vec<u64>> {
    if round >= plan.rounds {
        return Err(LadaError::config(format!(
            "round {round} beyond the {} planned",
            plan.rounds
        )));
    }
    let b = plan.round_size(round);
    if b > ctx.len() {
        return Err(LadaError::data(format!(
            "round needs {b} samples but only {} are unlabeled",
            ctx.len()
        )));
    }
    let picked = criterion.select(ctx, b, rng)?;
    let unique: BTreeSet<u64> = picked.iter().copied().collect();
    if picked.len() != b || unique.len() != b {
        return Err(LadaError::numeric(format!(
            "{} returned {} ids ({} distinct) for a quota of {b}",
            criterion.name(),
            picked.len(),
            unique.len()
        )));
    }
    if let Some(id) = picked.iter().find(|id| ctx.embedding(**id).is_none()) {
        return Err(LadaError::numeric(format!(
            "{} picked id {id} outside the unlabeled pool",
            criterion.name()
        )));
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn plan_five_percent() {
        let p = plan_budget(1000, 0.05, 5, DatasetKind::Standard).unwrap();
        assert_eq!(
            (p.total, p.per_round, p.remainder, p.oversample),
            (50, 10, 0, 10)
        );
        assert_eq!(p.candidate_count(0), 110);
        assert_eq!(p.schedule, vec![10, 12, 14, 16, 18]);
    }

    #[test]
    fn plan_ten_percent() {
        let p = plan_budget(1000, 0.10, 5, DatasetKind::Standard).unwrap();
        assert_eq!(p.oversample, 5);
        assert_eq!(p.candidate_count(0), 120);
        let huge = plan_budget(1000, 0.10, 5, DatasetKind::HugePerClass).unwrap();
        assert_eq!(huge.oversample, 3);
    }

    #[test]
    fn remainder_goes_to_last_round() {
        let p = plan_budget(1003, 0.05, 4, DatasetKind::Standard).unwrap();
        assert_eq!(p.total, 50);
        assert_eq!(
            (0..4).map(|r| p.round_size(r)).collect::<Vec<_>>(),
            vec![12, 12, 12, 14]
        );
    }

    #[test]
    fn plan_errors() {
        assert!(plan_budget(100, 0.0, 5, DatasetKind::Standard).is_err());
        assert!(plan_budget(100, 1.5, 5, DatasetKind::Standard).is_err());
        assert_eq!(
            plan_budget(100, 1.0, 5, DatasetKind::Standard)
                .unwrap()
                .oversample,
            0
        );
        assert!(plan_budget(100, 0.03, 5, DatasetKind::Standard).is_err());
        assert!(plan_budget(100, 0.05, 0, DatasetKind::Standard).is_err());
        let p = plan_budget(100, 0.05, 2, DatasetKind::Standard).unwrap();
        assert!(p.clone().with_schedule(vec![3]).is_err());
        assert!(p.clone().with_schedule(vec![3, 3]).is_err());
        assert_eq!(p.with_schedule(vec![1, 4]).unwrap().round_at(4), Some(1));
    }

    #[test]
    fn oversampling_is_monotone_in_budget() {
        let mut last = usize::MAX;
        for i in 1..100 {
            let m = oversample_ratio(i as f64 / 100.0, DatasetKind::Standard);
            assert!(m <= last);
            last = m;
        }
        assert_eq!(oversample_ratio(0.9, DatasetKind::Standard), 0);
    }

    fn line_items(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64, 1.0]).collect()
    }

    #[test]
    fn diverse_without_oversampling_returns_top_b() {
        let pts = line_items(6);
        let items: Vec<(u64, &[f64])> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (i as u64, p.as_slice()))
            .collect();
        let scores = ScoreVector::new("s", (0..6).collect(), vec![0.1, 0.9, 0.3, 0.8, 0.2, 0.7]);
        let got = diverse_select(&items, &scores, 3, 0, &mut seeded(0)).unwrap();
        assert_eq!(got, vec![1, 3, 5]);
    }

    #[test]
    fn diverse_single_pick_is_nearest_the_mean() {
        let pts = [vec![0.0], vec![1.0], vec![2.2], vec![9.0]];
        let items: Vec<(u64, &[f64])> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (i as u64, p.as_slice()))
            .collect();
        let scores = ScoreVector::new("s", (0..4).collect(), vec![1.0, 1.0, 1.0, 0.0]);
        // candidates 0, 1, 2 with mean 1.0666
        assert_eq!(
            diverse_select(&items, &scores, 1, 2, &mut seeded(1)).unwrap(),
            vec![1]
        );
    }

    #[test]
    fn identical_embeddings_still_give_distinct_ids() {
        let pts = vec![vec![1.0, 1.0]; 12];
        let items: Vec<(u64, &[f64])> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (i as u64, p.as_slice()))
            .collect();
        let scores = ScoreVector::new("s", (0..12).collect(), vec![0.5; 12]);
        let got = diverse_select(&items, &scores, 4, 2, &mut seeded(2)).unwrap();
        let unique: BTreeSet<u64> = got.iter().copied().collect();
        assert_eq!(unique.len(), 4);
    }

    #[test]
    fn short_pool_shrinks_the_candidate_set() {
        let pts = line_items(5);
        let items: Vec<(u64, &[f64])> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (i as u64, p.as_slice()))
            .collect();
        let scores = ScoreVector::new("s", (0..5).collect(), vec![0.5; 5]);
        assert_eq!(
            diverse_select(&items, &scores, 2, 10, &mut seeded(3))
                .unwrap()
                .len(),
            2
        );
        assert!(diverse_select(&items, &scores, 6, 0, &mut seeded(3)).is_err());
    }
}
