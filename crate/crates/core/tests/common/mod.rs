//! Independent reference implementations shared by the integration and
//! acceptance tests. Nothing here calls into the code it checks.

#![allow(dead_code)]

use lada::anchor::Augmenter;
use lada::model::{Classifier, Labeled, Mode};
use lada::rng::{seeded, Rng};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

pub fn random_points(rng: &mut Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

pub fn random_simplex(rng: &mut Rng, c: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..c)
        .map(|_| -rng.random::<f64>().max(1e-300).ln())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Every pairwise cosine, fully sorted: (id, similarity, weight) per row.
pub fn exhaustive_knn(ids: &[u64], points: &[Vec<f64>], k: usize) -> Vec<Vec<(u64, f64, f64)>> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cos = |a: &[f64], b: &[f64]| {
        let na = norm(a);
        let nb = norm(b);
        a.iter()
            .zip(b)
            .map(|(x, y)| (x / na) * (y / nb))
            .sum::<f64>()
    };
    (0..points.len())
        .map(|i| {
            let mut all: Vec<(u64, f64)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| (ids[j], cos(&points[i], &points[j])))
                .collect();
            all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            all.truncate(k);
            let raw: Vec<f64> = all
                .iter()
                .map(|(_, s)| if *s > 0.0 { *s } else { 0.0 } + 1e-12)
                .collect();
            let total: f64 = raw.iter().sum();
            all.iter()
                .zip(raw)
                .map(|(&(id, s), w)| (id, s, w / total))
                .collect()
        })
        .collect()
}

/// k-center greedy written from scratch: recompute every min distance from
/// the full center list at each step.
pub fn greedy_coreset_oracle(
    labeled: &[Vec<f64>],
    unlabeled: &[(u64, Vec<f64>)],
    b: usize,
) -> Vec<u64> {
    let dist = |a: &[f64], c: &[f64]| {
        a.iter()
            .zip(c)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut pool = unlabeled.to_vec();
    pool.sort_by_key(|(id, _)| *id);
    let mut centers: Vec<Vec<f64>> = labeled.to_vec();
    let mut chosen: Vec<u64> = Vec::new();
    for _ in 0..b {
        let best = if centers.is_empty() {
            pool[0].0
        } else {
            let mut best: Option<(f64, u64)> = None;
            for (id, p) in &pool {
                if chosen.contains(id) {
                    continue;
                }
                let m = centers
                    .iter()
                    .map(|c| dist(p, c))
                    .fold(f64::INFINITY, f64::min);
                if best.is_none_or(|(bm, _)| m > bm) {
                    best = Some((m, *id));
                }
            }
            best.unwrap().1
        };
        chosen.push(best);
        centers.push(pool.iter().find(|(id, _)| *id == best).unwrap().1.clone());
    }
    chosen
}

/// Relative error with a small absolute floor so that exact zeros on both
/// sides count as agreement.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7)
}

/// Central differences of `model.objective` over every parameter.
pub fn numeric_gradient(
    model: &Classifier,
    source: &[Labeled<'_>],
    target: &[Labeled<'_>],
    h: f64,
) -> Vec<f64> {
    let mut m = model.clone();
    (0..model.params().len())
        .map(|i| {
            let orig = m.params()[i];
            m.params_mut()[i] = orig + h;
            let up = m.objective(source, target);
            m.params_mut()[i] = orig - h;
            let down = m.objective(source, target);
            m.params_mut()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub struct TinyProblem {
    pub model: Classifier,
    pub source: Vec<(Vec<f64>, usize)>,
    pub target: Vec<(Vec<f64>, usize)>,
}

impl TinyProblem {
    pub fn new(seed: u64) -> Self {
        let mut rng = seeded(seed);
        let d = rng.random_range(2..6);
        let c = rng.random_range(2..5);
        let mode = if seed.is_multiple_of(2) {
            Mode::Identity
        } else {
            Mode::Hidden(rng.random_range(2..6))
        };
        let model = Classifier::new(mode, d, c, &mut rng).unwrap();
        let mut draw = |n: usize| -> Vec<(Vec<f64>, usize)> {
            random_points(&mut rng, n, d)
                .into_iter()
                .map(|x| (x, 0))
                .collect::<Vec<_>>()
        };
        let mut source = draw(5);
        let mut target = draw(4);
        let mut rng = seeded(seed + 1000);
        for s in source.iter_mut().chain(target.iter_mut()) {
            s.1 = rng.random_range(0..c);
        }
        TinyProblem {
            model,
            source,
            target,
        }
    }

    pub fn source(&self) -> Vec<Labeled<'_>> {
        self.source
            .iter()
            .map(|(x, y)| (x.as_slice(), *y))
            .collect()
    }

    pub fn target(&self) -> Vec<Labeled<'_>> {
        self.target
            .iter()
            .map(|(x, y)| (x.as_slice(), *y))
            .collect()
    }

    /// The anchor batch as the mixed-augmentation step sees it for `rng`.
    pub fn mixed_target(&self, aug: &Augmenter, rng: &mut Rng) -> Vec<(Vec<f64>, usize)> {
        self.target
            .iter()
            .map(|(x, y)| (aug.augment(x, rng), *y))
            .collect()
    }
}
