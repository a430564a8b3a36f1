use std::collections::BTreeMap;
use std::sync::Arc;

use super::{diverse_select, SelectionContext};
use crate::criteria::{
    badge_select, clue_select, coreset_select, li_raw, li_smooth, score_nau, score_pointwise,
    PointwiseKind, ScoreVector,
};
use crate::error::{LadaError, Result};
use crate::rng::Rng;

/// A query strategy: picks `b` ids out of the context's unlabeled pool.
pub trait Criterion: Send + Sync {
    fn name(&self) -> &str;

    fn description(&self) -> &str;

    /// Per-sample scores, for strategies that rank samples independently.
    fn scores(&self, _ctx: &SelectionContext, _rng: &mut Rng) -> Result<Option<ScoreVector>> {
        Ok(None)
    }

    fn select(&self, ctx: &SelectionContext, b: usize, rng: &mut Rng) -> Result<Vec<u64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scorer {
    Pointwise(PointwiseKind),
    /// Local inconsistency without smoothing.
    LiRaw,
    /// Local inconsistency smoothed over the neighborhood.
    LiSmoothed,
    Nau,
}

impl Scorer {
    fn score(self, ctx: &SelectionContext, rng: &mut Rng) -> Result<ScoreVector> {
        match self {
            Scorer::Pointwise(kind) => score_pointwise(ctx.ids(), ctx.probs(), kind, rng),
            Scorer::LiRaw => li_raw(ctx.probs(), ctx.index()?),
            Scorer::LiSmoothed => {
                let index = ctx.index()?;
                li_smooth(&li_raw(ctx.probs(), index)?, index)
            }
            Scorer::Nau => score_nau(ctx.probs(), ctx.index()?),
        }
    }
}

/// Score-then-pick strategies: plain top-b, or top-(1+M)b followed by the
/// k-means diversity step.
pub struct Ranked {
    name: &'static str,
    description: &'static str,
    scorer: Scorer,
    diverse: bool,
}

impl Ranked {
    pub const fn new(
        name: &'static str,
        description: &'static str,
        scorer: Scorer,
        diverse: bool,
    ) -> Self {
        Ranked {
            name,
            description,
            scorer,
            diverse,
        }
    }
}

impl Criterion for Ranked {
    fn name(&self) -> &str {
        self.name
    }

    fn description(&self) -> &str {
        self.description
    }

    fn scores(&self, ctx: &SelectionContext, rng: &mut Rng) -> Result<Option<ScoreVector>> {
        let mut s = self.scorer.score(ctx, rng)?;
        s.criterion = self.name.to_string();
        Ok(Some(s))
    }

    fn select(&self, ctx: &SelectionContext, b: usize, rng: &mut Rng) -> Result<Vec<u64>> {
        let scores = self.scorer.score(ctx, rng)?;
        if self.diverse {
            diverse_select(&ctx.items(), &scores, b, ctx.oversample(), rng)
        } else {
            Ok(scores.top(b))
        }
    }
}

pub struct Coreset;

impl Criterion for Coreset {
    fn name(&self) -> &str {
        "CORESET"
    }

    fn description(&self) -> &str {
        "greedy k-center over embeddings, seeded by the queried set"
    }

    fn select(&self, ctx: &SelectionContext, b: usize, _rng: &mut Rng) -> Result<Vec<u64>> {
        coreset_select(&ctx.labeled_items(), &ctx.items(), b)
    }
}

pub struct Badge;

impl Criterion for Badge {
    fn name(&self) -> &str {
        "BADGE"
    }

    fn description(&self) -> &str {
        "k-means++ seeding over last-layer gradient embeddings"
    }

    fn select(&self, ctx: &SelectionContext, b: usize, rng: &mut Rng) -> Result<Vec<u64>> {
        badge_select(&ctx.items(), ctx.probs(), b, rng)
    }
}

pub struct Clue;

impl Criterion for Clue {
    fn name(&self) -> &str {
        "CLUE"
    }

    fn description(&self) -> &str {
        "entropy-weighted k-means over all unlabeled embeddings"
    }

    fn select(&self, ctx: &SelectionContext, b: usize, rng: &mut Rng) -> Result<Vec<u64>> {
        clue_select(&ctx.items(), ctx.probs(), b, rng)
    }
}

/// Strategies addressable by name (case-insensitive).
#[derive(Clone, Default)]
pub struct CriterionRegistry {
    entries: BTreeMap<String, Arc<dyn Criterion>>,
}

impl CriterionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every built-in strategy.
    pub fn standard() -> Self {
        use PointwiseKind::*;
        let mut r = Self::new();
        r.register(Ranked::new(
            "LAS",
            "smoothed local inconsistency, diverse subset of the top candidates",
            Scorer::LiSmoothed,
            true,
        ));
        r.register(Ranked::new(
            "LAS-noDiv",
            "raw local inconsistency, top-b",
            Scorer::LiRaw,
            false,
        ));
        r.register(Ranked::new(
            "LI",
            "smoothed local inconsistency, top-b",
            Scorer::LiSmoothed,
            false,
        ));
        r.register(Ranked::new(
            "RANDOM",
            "uniform random scores",
            Scorer::Pointwise(Random),
            false,
        ));
        r.register(Ranked::new(
            "ENT",
            "prediction entropy",
            Scorer::Pointwise(Entropy),
            false,
        ));
        r.register(Ranked::new(
            "MAR",
            "negated top-two probability gap",
            Scorer::Pointwise(Margin),
            false,
        ));
        r.register(Ranked::new(
            "CONF",
            "negated top probability",
            Scorer::Pointwise(Confidence),
            false,
        ));
        r.register(Ranked::new(
            "NAU",
            "neighbor purity times neighbor affinity",
            Scorer::Nau,
            false,
        ));
        r.register(Ranked::new(
            "ENT-Div",
            "entropy with the LAS diversity step",
            Scorer::Pointwise(Entropy),
            true,
        ));
        r.register(Ranked::new(
            "MAR-Div",
            "margin with the LAS diversity step",
            Scorer::Pointwise(Margin),
            true,
        ));
        r.register(Ranked::new(
            "CONF-Div",
            "confidence with the LAS diversity step",
            Scorer::Pointwise(Confidence),
            true,
        ));
        r.register(Ranked::new(
            "NAU-Div",
            "NAU with the LAS diversity step",
            Scorer::Nau,
            true,
        ));
        r.register(Coreset);
        r.register(Badge);
        r.register(Clue);
        r
    }

    pub fn register<C: Criterion + 'static>(&mut self, c: C) {
        self.entries
            .insert(c.name().to_ascii_lowercase(), Arc::new(c));
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Criterion>> {
        self.entries
            .get(&name.trim().to_ascii_lowercase())
            .cloned()
            .ok_or_else(|| {
                LadaError::config(format!(
                    "unknown criterion {name:?}; available: {}",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries
            .values()
            .map(|c| c.name().to_string())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Criterion>> {
        self.entries.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::selection::{plan_budget, select, DatasetKind};

    fn ctx(probs: Vec<Vec<f64>>, oversample: usize) -> SelectionContext {
        let n = probs.len();
        let ids: Vec<u64> = (0..n as u64).map(|i| 10 + i).collect();
        let emb: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![1.0 + (i as f64 * 0.37).sin(), (i as f64 * 0.91).cos(), 0.3])
            .collect();
        SelectionContext::new(ids, emb, probs, vec![], 3, oversample).unwrap()
    }

    fn spread_probs(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let a = 0.5 + 0.49 * ((i * 7 % 13) as f64 / 13.0);
                vec![a, 1.0 - a]
            })
            .collect()
    }

    #[test]
    fn lookup_is_case_insensitive_and_unknown_names_fail() {
        let r = CriterionRegistry::standard();
        assert_eq!(r.get("las").unwrap().name(), "LAS");
        assert_eq!(r.get("Las-NoDiv").unwrap().name(), "LAS-noDiv");
        let err = r.get("nope").err().unwrap();
        assert!(matches!(err, LadaError::Config(_)));
        assert!(r.names().len() >= 15);
    }

    #[test]
    fn every_strategy_returns_distinct_unlabeled_ids() {
        let r = CriterionRegistry::standard();
        let c = ctx(spread_probs(40), 3);
        let plan = plan_budget(40, 0.25, 2, DatasetKind::Standard)
            .unwrap()
            .with_oversample(3);
        for crit in r.iter() {
            let got = select(crit.as_ref(), &c, &plan, 0, &mut seeded(1)).unwrap();
            assert_eq!(got.len(), 5, "{}", crit.name());
        }
    }

    #[test]
    fn random_is_deterministic_for_a_seed() {
        let r = CriterionRegistry::standard();
        let c = ctx(spread_probs(30), 0);
        let crit = r.get("RANDOM").unwrap();
        let a = crit.select(&c, 5, &mut seeded(4)).unwrap();
        let b = crit.select(&c, 5, &mut seeded(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn las_without_oversampling_is_top_smoothed_li() {
        let r = CriterionRegistry::standard();
        let c = ctx(spread_probs(30), 0);
        let las = r.get("LAS").unwrap().select(&c, 4, &mut seeded(0)).unwrap();
        let li = r.get("LI").unwrap().select(&c, 4, &mut seeded(0)).unwrap();
        assert_eq!(las, li);
    }

    #[test]
    fn entropy_always_takes_the_uniform_sample() {
        let mut probs = vec![vec![1.0, 0.0, 0.0]; 20];
        probs[13] = vec![1.0 / 3.0; 3];
        let c = ctx(probs, 0);
        let got = CriterionRegistry::standard()
            .get("ENT")
            .unwrap()
            .select(&c, 1, &mut seeded(0))
            .unwrap();
        assert_eq!(got, vec![23]);
    }

    #[test]
    fn set_valued_strategies_have_no_scores() {
        let r = CriterionRegistry::standard();
        let c = ctx(spread_probs(10), 0);
        assert!(r
            .get("CORESET")
            .unwrap()
            .scores(&c, &mut seeded(0))
            .unwrap()
            .is_none());
        let s = r
            .get("LAS")
            .unwrap()
            .scores(&c, &mut seeded(0))
            .unwrap()
            .unwrap();
        assert_eq!(s.criterion, "LAS");
        assert_eq!(s.len(), 10);
    }
}
