use rand::seq::SliceRandom;

use super::config::{DataSource, RunConfig};
use crate::anchor::{
    paa_step, AnchorSet, AnchorStats, Augmenter, PaaMode, PassSampler, Provenance,
};
use crate::dataio::{gen_synthetic, load_embeddings, perturb_source, Dataset, Pool};
use crate::error::{LadaError, Result};
use crate::model::{Classifier, Labeled, Mode, Sgd};
use crate::neighbors::NeighborIndex;
use crate::rng::{self, Rng, Stream};
use crate::selection::{plan_budget, select, CriterionRegistry, RoundPlan, SelectionContext};

/// One evaluation of the model on the full target domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub seed: u64,
    /// Query rounds completed so far.
    pub round: usize,
    pub epoch: usize,
    pub criterion: String,
    pub paa_mode: String,
    pub accuracy: f64,
    /// Mean of the class-conditional accuracies.
    pub per_class_accuracy: f64,
    pub n_queried: usize,
    pub anchor: AnchorStats,
    /// Share of pseudo-labeled anchors whose label is correct.
    pub pseudo_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorRow {
    pub epoch: usize,
    pub pass: usize,
    pub stats: AnchorStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRow {
    pub round: usize,
    pub id: u64,
    pub criterion: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub plan: RoundPlan,
    pub metrics: Vec<MetricsRow>,
    pub anchors: Vec<AnchorRow>,
    pub queries: Vec<QueryRow>,
    pub model: Classifier,
    /// Labels the oracle handed out through queries.
    pub reveals: usize,
}

impl RunOutput {
    pub fn final_metrics(&self) -> &MetricsRow {
        self.metrics.last().expect("a run evaluates at least once")
    }
}

/// The dataset a config describes, including any source perturbation.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let ds = match &cfg.data {
        DataSource::Synthetic(s) => {
            let mut s = s.clone();
            s.seed = cfg.data_seed.unwrap_or(cfg.seed);
            gen_synthetic(&s)?
        }
        DataSource::File(path) => load_embeddings(path)?,
    };
    perturb_source(&ds, cfg.perturb, cfg.seed)
}

/// Endless shuffled passes over `0..n`.
struct IndexCycler {
    order: Vec<usize>,
    cursor: usize,
}

impl IndexCycler {
    fn new(n: usize) -> Self {
        IndexCycler {
            order: (0..n).collect(),
            cursor: n,
        }
    }

    fn take(&mut self, size: usize, rng: &mut Rng) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.cursor == self.order.len() {
                self.order.shuffle(rng);
                self.cursor = 0;
            }
            let end = (self.cursor + size - out.len()).min(self.order.len());
            out.extend_from_slice(&self.order[self.cursor..end]);
            self.cursor = end;
        }
        out
    }
}

fn target_index(
    model: &Classifier,
    ids: &[u64],
    features: &[Vec<f64>],
    k: usize,
) -> Result<NeighborIndex> {
    let embeddings: Vec<Vec<f64>> = features.iter().map(|x| model.embed(x)).collect();
    NeighborIndex::build(ids, &embeddings, k.min(ids.len().saturating_sub(1)))
}

pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutput> {
    let registry = CriterionRegistry::standard();
    run_experiment_with(cfg, &registry)
}

/// Source-only pretraining, then adaptation epochs with query rounds at the
/// scheduled epochs. Every random choice comes from a stream of `cfg.seed`.
pub fn run_experiment_with(cfg: &RunConfig, registry: &CriterionRegistry) -> Result<RunOutput> {
    cfg.validate()?;
    let criterion_name = cfg.effective_criterion();
    let criterion = registry.get(&criterion_name)?;
    let paa = cfg.effective_paa();
    let mixup = cfg.effective_mixup();

    let mut ds = load_dataset(cfg)?;
    let n_target = ds.target().len();
    let plan = plan_budget(n_target, cfg.budget, cfg.rounds, cfg.dataset_kind())?
        .with_schedule(cfg.schedule.clone())?;
    let plan = match cfg.oversample {
        Some(m) => plan.with_oversample(m),
        None => plan,
    };
    ds.set_budget_cap(plan.total);

    let classes = ds.num_classes();
    let target_ids: Vec<u64> = ds.target().iter().map(|s| s.id).collect();
    let target_features: Vec<Vec<f64>> = ds.target().iter().map(|s| s.feature.clone()).collect();
    let pool = Pool::new(
        &target_ids,
        target_features.iter().map(Vec::as_slice).collect(),
    );
    let source_data: Vec<(Vec<f64>, usize)> = ds
        .source()
        .iter()
        .map(|s| {
            (
                s.feature.clone(),
                s.label.expect("source samples are labeled"),
            )
        })
        .collect();
    let source: Vec<Labeled<'_>> = source_data
        .iter()
        .map(|(x, y)| (x.as_slice(), *y))
        .collect();
    // evaluation labels are read once here; the query path goes through reveal
    let eval_labels: Vec<usize> = target_ids
        .iter()
        .map(|&id| {
            ds.oracle()
                .evaluation_label(id)
                .ok_or_else(|| LadaError::data(format!("target id {id} has no evaluation label")))
        })
        .collect::<Result<_>>()?;
    let eval_set: Vec<Labeled<'_>> = target_features
        .iter()
        .map(Vec::as_slice)
        .zip(eval_labels.iter().copied())
        .collect();

    let mut init_rng = rng::stream(cfg.seed, Stream::Init);
    let mut shuffle_rng = rng::stream(cfg.seed, Stream::Shuffle);
    let mut select_rng = rng::stream(cfg.seed, Stream::Select);
    let mut paa_rng = rng::stream(cfg.seed, Stream::Paa);
    let mut augment_rng = rng::stream(cfg.seed, Stream::Augment);

    let mut model = Classifier::new(cfg.model_mode(), ds.dim(), classes, &mut init_rng)?;
    let mut opt = Sgd::new(&model);
    let augmenter = Augmenter::fit(
        pool.features(),
        paa.noise,
        paa.dropout,
        cfg.train.mixup_alpha,
        cfg.train.mixup_beta,
    );
    let batch = cfg.train.batch_size;
    let iterations = if cfg.iterations > 0 {
        cfg.iterations
    } else {
        n_target.div_ceil(batch)
    };
    let mut source_cycle = IndexCycler::new(source.len());

    let mut queried: Vec<(u64, usize)> = Vec::new();
    let mut rounds_done = 0;
    let mut metrics = Vec::new();
    let mut anchor_rows = Vec::new();
    let mut queries = Vec::new();
    let mut cached_index: Option<NeighborIndex> = None;
    let mut anchor = AnchorSet::init(&[], classes);

    for epoch in 0..cfg.pretrain_epochs + cfg.adapt_epochs {
        let adapting = epoch >= cfg.pretrain_epochs;
        if let Some(round) = plan.round_at(epoch) {
            let unlabeled_ids = ds.unlabeled_target_ids();
            let unlabeled: Vec<(u64, &[f64])> = unlabeled_ids
                .iter()
                .map(|&id| (id, pool.feature(id).expect("target id")))
                .collect();
            let labeled: Vec<(u64, &[f64])> = queried
                .iter()
                .map(|&(id, _)| (id, pool.feature(id).expect("target id")))
                .collect();
            let ctx =
                SelectionContext::from_model(&model, &unlabeled, &labeled, cfg.k, plan.oversample)?;
            let picked = select(criterion.as_ref(), &ctx, &plan, round, &mut select_rng)?;
            let revealed = ds.reveal(&picked)?;
            queries.extend(picked.iter().map(|&id| QueryRow {
                round,
                id,
                criterion: criterion.name().to_string(),
            }));
            queried.extend(revealed);
            rounds_done += 1;
            log::debug!(
                "epoch {epoch}: round {round} queried {} samples",
                picked.len()
            );
        }

        if adapting {
            anchor = AnchorSet::init(&queried, classes);
        }
        // fixed features give fixed embeddings, so the index is built once
        let fresh_index;
        let index: Option<&NeighborIndex> = if adapting && paa.mode == PaaMode::Laa {
            if matches!(model.mode(), Mode::Identity) {
                if cached_index.is_none() {
                    cached_index =
                        Some(target_index(&model, &target_ids, &target_features, paa.k)?);
                }
                cached_index.as_ref()
            } else {
                fresh_index = target_index(&model, &target_ids, &target_features, paa.k)?;
                Some(&fresh_index)
            }
        } else {
            None
        };

        let mut sampler = PassSampler::new();
        let mut passes = 0;
        for _ in 0..iterations {
            let src: Vec<Labeled<'_>> = source_cycle
                .take(batch, &mut shuffle_rng)
                .into_iter()
                .map(|i| source[i])
                .collect();
            if !adapting || anchor.is_empty() {
                model.step_supervised(&mut opt, &src, &[], &cfg.train)?;
                continue;
            }
            let (ids, finished) = sampler.next_batch(&anchor, batch, &mut shuffle_rng);
            let anchors: Vec<Labeled<'_>> = ids
                .iter()
                .map(|&id| {
                    (
                        pool.feature(id).expect("anchor ids are target ids"),
                        anchor.label_of(id).expect("anchor id"),
                    )
                })
                .collect();
            if mixup {
                model.step_mixed(
                    &mut opt,
                    &src,
                    &anchors,
                    &cfg.train,
                    &augmenter,
                    &mut augment_rng,
                )?;
            } else {
                model.step_supervised(&mut opt, &src, &anchors, &cfg.train)?;
            }
            paa_step(&mut anchor, &ids, &paa, &model, index, &pool, &mut paa_rng)?;
            if finished {
                anchor.merge_supplement();
                passes += 1;
                anchor_rows.push(AnchorRow {
                    epoch,
                    pass: passes,
                    stats: anchor.stats(),
                });
            }
        }

        let eval = model.evaluate(&eval_set)?;
        let pseudo: Vec<bool> = anchor
            .entries()
            .iter()
            .filter(|e| e.provenance == Provenance::Pseudo)
            .map(|e| e.label == eval_labels[ds.target_position(e.id).expect("target id")])
            .collect();
        metrics.push(MetricsRow {
            seed: cfg.seed,
            round: rounds_done,
            epoch,
            criterion: criterion.name().to_string(),
            paa_mode: paa.mode.as_str().to_string(),
            accuracy: eval.accuracy,
            per_class_accuracy: eval.per_class_mean,
            n_queried: queried.len(),
            anchor: anchor.stats(),
            pseudo_accuracy: (!pseudo.is_empty())
                .then(|| pseudo.iter().filter(|&&ok| ok).count() as f64 / pseudo.len() as f64),
        });
    }

    let reveals = ds.oracle().reveals();
    Ok(RunOutput {
        config: cfg.clone(),
        plan,
        metrics,
        anchors: anchor_rows,
        queries,
        model,
        reveals,
    })
}
