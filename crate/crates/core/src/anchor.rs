//! Progressive anchor-set augmentation.
//!
//! Each epoch the anchor set restarts from the queried target samples. While
//! the model iterates over it, confident predictions on other target samples
//! are collected in a pending supplement, which joins the anchor set every
//! time a full pass over the set completes. Candidates of classes that are
//! already over-represented are rejected with probability
//! `(share[c] - min_share) / max_share`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::dataio::Pool;
use crate::error::{LadaError, Result};
use crate::model::{argmax, Classifier};
use crate::neighbors::NeighborIndex;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PaaMode {
    Off,
    /// Candidates drawn uniformly from the whole target domain.
    Raa,
    /// Candidates drawn from the K nearest target neighbors of each anchor.
    Laa,
}

impl PaaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PaaMode::Off => "off",
            PaaMode::Raa => "raa",
            PaaMode::Laa => "laa",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "off" | "none" => Ok(PaaMode::Off),
            "raa" => Ok(PaaMode::Raa),
            "laa" => Ok(PaaMode::Laa),
            other => Err(LadaError::config(format!(
                "unknown anchor augmentation mode {other:?} (off, raa, laa)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaaConfig {
    pub mode: PaaMode,
    /// Confidence threshold for pseudo-labels.
    pub tau: f64,
    pub k: usize,
    /// Augmentation noise, in units of the per-coordinate target std.
    pub noise: f64,
    pub dropout: f64,
    /// Class-balancing rejection on/off.
    pub cbr: bool,
}

impl Default for PaaConfig {
    fn default() -> Self {
        PaaConfig {
            mode: PaaMode::Laa,
            tau: 0.9,
            k: 10,
            noise: 0.5,
            dropout: 0.1,
            cbr: true,
        }
    }
}

impl PaaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(LadaError::config(format!(
                "tau must lie in (0, 1], got {}",
                self.tau
            )));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(LadaError::config("augmentation noise must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(LadaError::config("augmentation dropout must lie in [0, 1)"));
        }
        if self.k == 0 {
            return Err(LadaError::config("neighborhood size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Queried,
    Pseudo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnchorEntry {
    pub id: u64,
    pub label: usize,
    pub provenance: Provenance,
}

/// Size and class balance of an anchor set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorStats {
    pub size: usize,
    pub queried: usize,
    pub pseudo: usize,
    pub class_min_share: f64,
    pub class_max_share: f64,
}

impl AnchorStats {
    /// `max_share / min_share`; infinite when some class is absent.
    pub fn share_ratio(&self) -> f64 {
        if self.class_min_share > 0.0 {
            self.class_max_share / self.class_min_share
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    num_classes: usize,
    entries: Vec<AnchorEntry>,
    supplement: Vec<AnchorEntry>,
    ids: BTreeSet<u64>,
    class_counts: Vec<usize>,
}

impl AnchorSet {
    /// Starts an anchor set from the queried target samples.
    pub fn init(queried: &[(u64, usize)], num_classes: usize) -> Self {
        let mut set = AnchorSet {
            num_classes,
            entries: Vec::with_capacity(queried.len()),
            supplement: Vec::new(),
            ids: BTreeSet::new(),
            class_counts: vec![0; num_classes],
        };
        for &(id, label) in queried {
            if set.ids.insert(id) {
                set.entries.push(AnchorEntry {
                    id,
                    label,
                    provenance: Provenance::Queried,
                });
                set.class_counts[label] += 1;
            }
        }
        set
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[AnchorEntry] {
        &self.entries
    }

    pub fn supplement(&self) -> &[AnchorEntry] {
        &self.supplement
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn contains(&self, id: u64) -> bool {
        self.ids.contains(&id)
    }

    pub fn label_of(&self, id: u64) -> Option<usize> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.label)
    }

    pub fn shares(&self) -> Vec<f64> {
        let n = self.entries.len().max(1) as f64;
        self.class_counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Rejection probability for a candidate pseudo-labeled `class`.
    pub fn cbr_prob(&self, class: usize) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        // shares and raw counts give the same ratio; counts keep it exact
        let max = *self.class_counts.iter().max().unwrap_or(&0);
        let min = *self.class_counts.iter().min().unwrap_or(&0);
        ((self.class_counts[class] - min) as f64 / max as f64).clamp(0.0, 1.0)
    }

    /// Adds a pending pseudo-labeled entry unless its id is already present.
    pub fn push_supplement(&mut self, id: u64, label: usize) -> bool {
        if !self.ids.insert(id) {
            return false;
        }
        self.supplement.push(AnchorEntry {
            id,
            label,
            provenance: Provenance::Pseudo,
        });
        true
    }

    /// Moves the pending supplement into the anchor set.
    pub fn merge_supplement(&mut self) {
        for e in self.supplement.drain(..) {
            self.class_counts[e.label] += 1;
            self.entries.push(e);
        }
    }

    pub fn stats(&self) -> AnchorStats {
        let queried = self
            .entries
            .iter()
            .filter(|e| e.provenance == Provenance::Queried)
            .count();
        let shares = self.shares();
        AnchorStats {
            size: self.entries.len(),
            queried,
            pseudo: self.entries.len() - queried,
            class_min_share: shares.iter().copied().fold(f64::INFINITY, f64::min),
            class_max_share: shares.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// Pseudo-label acceptance test for one candidate.
pub fn accept_candidate(confidence: f64, tau: f64, xi: f64, reject_prob: f64) -> bool {
    confidence >= tau && xi >= reject_prob
}

/// Harvests pseudo-labeled candidates for one anchor mini-batch into the
/// pending supplement. Returns the number of accepted candidates.
///
/// `neighbors` must index all target samples and is required in LAA mode.
pub fn paa_step(
    anchor: &mut AnchorSet,
    batch: &[u64],
    cfg: &PaaConfig,
    model: &Classifier,
    neighbors: Option<&NeighborIndex>,
    pool: &Pool<'_>,
    rng: &mut Rng,
) -> Result<usize> {
    if cfg.mode == PaaMode::Off || pool.is_empty() {
        return Ok(0);
    }
    let mut accepted = 0;
    for &anchor_id in batch {
        let candidate = match cfg.mode {
            PaaMode::Laa => {
                let index = neighbors
                    .ok_or_else(|| LadaError::config("LAA needs a target neighbor index"))?;
                let row = index.position(anchor_id).ok_or_else(|| {
                    LadaError::data(format!("anchor {anchor_id} is not in the neighbor index"))
                })?;
                let list = index.row_ids(row);
                list[rng.random_range(0..list.len())]
            }
            PaaMode::Raa => pool.ids()[rng.random_range(0..pool.len())],
            PaaMode::Off => unreachable!(),
        };
        let xi: f64 = rng.random();
        let feature = pool.feature(candidate).ok_or_else(|| {
            LadaError::data(format!("candidate {candidate} is not a target sample"))
        })?;
        let p = model.probs(feature);
        let label = argmax(&p);
        let q = if cfg.cbr { anchor.cbr_prob(label) } else { 0.0 };
        if accept_candidate(p[label], cfg.tau, xi, q) && anchor.push_supplement(candidate, label) {
            accepted += 1;
        }
    }
    Ok(accepted)
}

/// Visits the anchor set in shuffled passes without replacement.
#[derive(Debug, Clone, Default)]
pub struct PassSampler {
    order: Vec<u64>,
    cursor: usize,
    passes: usize,
}

impl PassSampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Next mini-batch of anchor ids, and whether it ends the current pass.
    /// A new pass is shuffled from the anchor set as it stands at that point.
    pub fn next_batch(
        &mut self,
        anchor: &AnchorSet,
        size: usize,
        rng: &mut Rng,
    ) -> (Vec<u64>, bool) {
        if self.cursor >= self.order.len() {
            self.order = anchor.entries().iter().map(|e| e.id).collect();
            self.order.shuffle(rng);
            self.cursor = 0;
        }
        let end = (self.cursor + size).min(self.order.len());
        let batch = self.order[self.cursor..end].to_vec();
        self.cursor = end;
        let finished = self.cursor >= self.order.len();
        if finished {
            self.passes += 1;
        }
        (batch, finished)
    }

    pub fn passes(&self) -> usize {
        self.passes
    }
}

/// Feature-space stand-in for strong image augmentation, mixed with the clean
/// feature: `x~ = beta * x + (1 - beta) * alpha(x)` with `beta ~ Beta(a, b)`.
///
/// `alpha(x)_j = (x_j + noise * std_j * z_j) * keep_j` where `z_j ~ N(0, 1)`,
/// `std_j` is the target standard deviation of coordinate `j` and `keep_j` is
/// zero with probability `dropout`.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmenter {
    coord_std: Vec<f64>,
    noise: f64,
    dropout: f64,
    beta_a: f64,
    beta_b: f64,
    fixed_beta: Option<f64>,
}

impl Augmenter {
    pub fn new(coord_std: Vec<f64>, noise: f64, dropout: f64, beta_a: f64, beta_b: f64) -> Self {
        Augmenter {
            coord_std,
            noise,
            dropout,
            beta_a,
            beta_b,
            fixed_beta: None,
        }
    }

    /// Uses the coordinate-wise (population) std of `features`.
    pub fn fit(features: &[&[f64]], noise: f64, dropout: f64, beta_a: f64, beta_b: f64) -> Self {
        let d = features.first().map_or(0, |f| f.len());
        let n = features.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for f in features {
            for (m, x) in mean.iter_mut().zip(*f) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; d];
        for f in features {
            for ((v, x), m) in var.iter_mut().zip(*f).zip(&mean) {
                *v += (x - m) * (x - m) / n;
            }
        }
        Self::new(
            var.into_iter().map(f64::sqrt).collect(),
            noise,
            dropout,
            beta_a,
            beta_b,
        )
    }

    pub fn with_fixed_beta(mut self, beta: f64) -> Self {
        self.fixed_beta = Some(beta);
        self
    }

    /// Draws `X / (X + Y)` with `X ~ Gamma(a, 1)`, `Y ~ Gamma(b, 1)`.
    pub fn sample_beta(&self, rng: &mut Rng) -> f64 {
        if let Some(b) = self.fixed_beta {
            return b;
        }
        let x = Gamma::new(self.beta_a, 1.0).unwrap().sample(rng);
        let y = Gamma::new(self.beta_b, 1.0).unwrap().sample(rng);
        let s = x + y;
        if s > 0.0 {
            x / s
        } else {
            0.5
        }
    }

    /// `alpha(x)` given standard-normal draws `z` and a keep mask.
    pub fn alpha_with(&self, x: &[f64], z: &[f64], keep: &[bool]) -> Vec<f64> {
        x.iter()
            .zip(&self.coord_std)
            .zip(z.iter().zip(keep))
            .map(|((xi, s), (zi, k))| if *k { xi + self.noise * s * zi } else { 0.0 })
            .collect()
    }

    /// `beta * x + (1 - beta) * alpha`, written so that `alpha == x` or
    /// `beta == 1` returns `x` exactly.
    pub fn mix(x: &[f64], alpha: &[f64], beta: f64) -> Vec<f64> {
        x.iter()
            .zip(alpha)
            .map(|(xi, ai)| xi + (1.0 - beta) * (ai - xi))
            .collect()
    }

    pub fn augment(&self, x: &[f64], rng: &mut Rng) -> Vec<f64> {
        let beta = self.sample_beta(rng);
        let z: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(rng)).collect();
        let keep: Vec<bool> = (0..x.len())
            .map(|_| rng.random::<f64>() >= self.dropout)
            .collect();
        Self::mix(x, &self.alpha_with(x, &z, &keep), beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mode;
    use crate::rng::seeded;

    fn set(counts: &[(usize, usize)], c: usize) -> AnchorSet {
        let mut q = Vec::new();
        let mut id = 0;
        for &(label, n) in counts {
            for _ in 0..n {
                q.push((id, label));
                id += 1;
            }
        }
        AnchorSet::init(&q, c)
    }

    #[test]
    fn init_tallies_classes() {
        assert!(AnchorSet::init(&[], 3).is_empty());
        let a = AnchorSet::init(&[(5, 0), (6, 0), (7, 1)], 2);
        assert_eq!(a.class_counts(), &[2, 1]);
        assert_eq!(a.stats().queried, 3);
    }

    #[test]
    fn reinit_discards_pseudo_entries() {
        let queried = [(1, 0), (2, 1)];
        let mut a = AnchorSet::init(&queried, 2);
        a.push_supplement(3, 1);
        a.merge_supplement();
        assert_eq!(a.stats().pseudo, 1);
        let fresh = AnchorSet::init(&queried, 2);
        assert_eq!(fresh.stats().pseudo, 0);
        assert_eq!(fresh.len(), 2);
    }

    #[test]
    fn cbr_balanced_is_zero() {
        let a = set(&[(0, 3), (1, 3), (2, 3)], 3);
        assert!((0..3).all(|c| a.cbr_prob(c) == 0.0));
    }

    #[test]
    fn cbr_eight_two() {
        let a = set(&[(0, 8), (1, 2)], 2);
        assert_eq!(a.cbr_prob(0), 0.75);
        assert_eq!(a.cbr_prob(1), 0.0);
    }

    #[test]
    fn cbr_absent_class_always_accepted() {
        let a = set(&[(0, 4), (1, 2)], 3);
        assert_eq!(a.cbr_prob(2), 0.0);
        // p = (2/3, 1/3, 0): q0 = (2/3)/(2/3) = 1
        assert_eq!(a.cbr_prob(0), 1.0);
        assert_eq!(AnchorSet::init(&[], 2).cbr_prob(0), 0.0);
    }

    #[test]
    fn merge_moves_supplement() {
        let mut a = set(&[(0, 5), (1, 5)], 2);
        a.merge_supplement();
        assert_eq!(a.len(), 10);
        for (id, l) in [(100, 0), (101, 1), (102, 1), (103, 1)] {
            assert!(a.push_supplement(id, l));
        }
        assert!(!a.push_supplement(101, 0));
        assert!(!a.push_supplement(0, 1));
        assert_eq!(a.class_counts(), &[5, 5]);
        a.merge_supplement();
        assert_eq!(a.len(), 14);
        assert!(a.supplement().is_empty());
        assert_eq!(a.class_counts(), &[6, 8]);
    }

    fn confident_model() -> Classifier {
        // identity 1-d model: class 0 for x > 0 with large margin
        Classifier::from_params(Mode::Identity, 1, 2, vec![50.0, -50.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn unreachable_threshold_adds_nothing() {
        let feats: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0 + i as f64]).collect();
        let ids: Vec<u64> = (0..10).collect();
        let pool = Pool::new(&ids, feats.iter().map(Vec::as_slice).collect());
        let mut a = AnchorSet::init(&[(0, 0)], 2);
        let cfg = PaaConfig {
            mode: PaaMode::Raa,
            tau: 1.0,
            ..PaaConfig::default()
        };
        let m = Classifier::zeros(Mode::Identity, 1, 2).unwrap();
        let mut rng = seeded(1);
        for _ in 0..20 {
            paa_step(&mut a, &[0], &cfg, &m, None, &pool, &mut rng).unwrap();
        }
        assert!(a.supplement().is_empty());
    }

    #[test]
    fn absent_class_candidate_is_always_inserted() {
        // anchors are all class 1; every candidate is confidently class 0
        let feats: Vec<Vec<f64>> = (0..1000).map(|i| vec![1.0 + i as f64]).collect();
        let ids: Vec<u64> = (0..1000).collect();
        let pool = Pool::new(&ids, feats.iter().map(Vec::as_slice).collect());
        let mut a = AnchorSet::init(&[(0, 1)], 2);
        let cfg = PaaConfig {
            mode: PaaMode::Raa,
            ..PaaConfig::default()
        };
        let mut rng = seeded(2);
        let mut attempts = 0;
        let mut inserted = 0;
        for _ in 0..30 {
            let before = a.supplement().len();
            paa_step(
                &mut a,
                &[0],
                &cfg,
                &confident_model(),
                None,
                &pool,
                &mut rng,
            )
            .unwrap();
            attempts += 1;
            inserted += a.supplement().len() - before;
        }
        let unique_draws = a.supplement().len();
        assert_eq!(inserted, unique_draws);
        assert!(attempts >= inserted && inserted >= 28, "{inserted}");
    }

    #[test]
    fn rejection_rate_matches_bernoulli() {
        // counts (8, 2): q[0] = 0.75, so confident class-0 candidates pass 25% of the time
        let feats: Vec<Vec<f64>> = vec![vec![2.0]];
        let ids = vec![1000u64];
        let pool = Pool::new(&ids, feats.iter().map(Vec::as_slice).collect());
        let base = set(&[(0, 8), (1, 2)], 2);
        let cfg = PaaConfig {
            mode: PaaMode::Raa,
            ..PaaConfig::default()
        };
        let model = confident_model();
        let mut rng = seeded(3);
        let trials = 10_000;
        let mut hits = 0;
        for _ in 0..trials {
            let mut a = base.clone();
            hits += paa_step(&mut a, &[0], &cfg, &model, None, &pool, &mut rng).unwrap();
        }
        let rate = hits as f64 / trials as f64;
        assert!((rate - 0.25).abs() < 0.02, "{rate}");
    }

    #[test]
    fn laa_draws_only_from_neighbors() {
        let feats: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0],
            vec![1.0, 0.1],
            vec![1.0, -0.1],
            vec![-1.0, 0.0],
            vec![-1.0, 0.1],
        ];
        let ids: Vec<u64> = (0..5).collect();
        let refs: Vec<&[f64]> = feats.iter().map(Vec::as_slice).collect();
        let pool = Pool::new(&ids, refs.clone());
        let index = NeighborIndex::build(&ids, &refs, 2).unwrap();
        let model =
            Classifier::from_params(Mode::Identity, 2, 2, vec![50.0, 0.0, -50.0, 0.0, 0.0, 0.0])
                .unwrap();
        let cfg = PaaConfig {
            mode: PaaMode::Laa,
            k: 2,
            cbr: false,
            ..PaaConfig::default()
        };
        let mut a = AnchorSet::init(&[(0, 0)], 2);
        let mut rng = seeded(4);
        for _ in 0..50 {
            paa_step(&mut a, &[0], &cfg, &model, Some(&index), &pool, &mut rng).unwrap();
        }
        let got: Vec<u64> = a.supplement().iter().map(|e| e.id).collect();
        assert!(!got.is_empty());
        assert!(got.iter().all(|id| [1, 2].contains(id)), "{got:?}");
    }

    #[test]
    fn identity_alpha_returns_input() {
        let aug = Augmenter::new(vec![1.0, 2.0, 3.0], 0.0, 0.0, 0.2, 0.2);
        let mut rng = seeded(5);
        let x = [0.3, -1.7, 12.5];
        for _ in 0..100 {
            assert_eq!(aug.augment(&x, &mut rng), x.to_vec());
        }
        let aug = Augmenter::new(vec![1.0; 3], 2.0, 0.5, 0.2, 0.2).with_fixed_beta(1.0);
        assert_eq!(aug.augment(&x, &mut rng), x.to_vec());
    }

    #[test]
    fn beta_draws_lie_in_unit_interval_and_are_u_shaped() {
        let aug = Augmenter::new(vec![], 0.0, 0.0, 0.2, 0.2);
        let mut rng = seeded(6);
        let draws: Vec<f64> = (0..20_000).map(|_| aug.sample_beta(&mut rng)).collect();
        assert!(draws.iter().all(|b| (0.0..=1.0).contains(b)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        // Beta(0.2, 0.2): mean 1/2, variance ab/((a+b)^2 (a+b+1)) = 0.25/1.4
        let var = draws.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
        assert!((var - 0.25 / 1.4).abs() < 0.01, "{var}");
    }

    #[test]
    fn augmentation_is_unbiased_without_dropout() {
        let aug = Augmenter::new(vec![1.0, 0.5], 1.0, 0.0, 0.2, 0.2);
        let mut rng = seeded(7);
        let x = [2.0, -1.0];
        let n = 100_000;
        let mut sum = [0.0; 2];
        let mut sq = [0.0; 2];
        for _ in 0..n {
            let v = aug.augment(&x, &mut rng);
            for j in 0..2 {
                sum[j] += v[j];
                sq[j] += v[j] * v[j];
            }
        }
        for j in 0..2 {
            let mean = sum[j] / n as f64;
            let var = sq[j] / n as f64 - mean * mean;
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - x[j]).abs() < 3.0 * se,
                "coord {j}: {mean} vs {} (se {se})",
                x[j]
            );
        }
    }

    #[test]
    fn pass_sampler_covers_each_anchor_once_per_pass() {
        let a = set(&[(0, 5), (1, 2)], 2);
        let mut s = PassSampler::new();
        let mut rng = seeded(8);
        let (b1, end1) = s.next_batch(&a, 4, &mut rng);
        let (b2, end2) = s.next_batch(&a, 4, &mut rng);
        assert!(!end1 && end2);
        let mut all: Vec<u64> = b1.into_iter().chain(b2).collect();
        all.sort();
        assert_eq!(all, (0..7).collect::<Vec<_>>());
        assert_eq!(s.passes(), 1);
    }
}
