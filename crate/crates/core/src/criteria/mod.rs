//! Per-sample query scores and set-valued baseline selectors.
//!
//! Every score follows "higher = more worth querying": margin and confidence
//! are negated from their textbook forms.

mod sets;

use rand::Rng as _;

pub use sets::{badge_embedding, badge_select, clue_select, coreset_select};

use crate::error::{LadaError, Result};
use crate::neighbors::NeighborIndex;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub criterion: String,
    pub ids: Vec<u64>,
    pub scores: Vec<f64>,
}

impl ScoreVector {
    pub fn new(criterion: impl Into<String>, ids: Vec<u64>, scores: Vec<f64>) -> Self {
        ScoreVector {
            criterion: criterion.into(),
            ids,
            scores,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ids ranked by descending score, ties to the lower id.
    pub fn ranked(&self) -> Vec<u64> {
        let mut order: Vec<usize> = (0..self.ids.len()).collect();
        order.sort_by(|&a, &b| {
            self.scores[b]
                .total_cmp(&self.scores[a])
                .then(self.ids[a].cmp(&self.ids[b]))
        });
        order.into_iter().map(|i| self.ids[i]).collect()
    }

    pub fn top(&self, n: usize) -> Vec<u64> {
        let mut r = self.ranked();
        r.truncate(n);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointwiseKind {
    Entropy,
    Margin,
    Confidence,
    Random,
}

impl PointwiseKind {
    pub fn name(self) -> &'static str {
        match self {
            PointwiseKind::Entropy => "ENT",
            PointwiseKind::Margin => "MAR",
            PointwiseKind::Confidence => "CONF",
            PointwiseKind::Random => "RANDOM",
        }
    }
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
}

fn top_two(p: &[f64]) -> (f64, f64) {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &v in p {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    (first, if second.is_finite() { second } else { 0.0 })
}

fn check_rows(n: usize, probs: &[Vec<f64>]) -> Result<()> {
    if probs.len() != n {
        return Err(LadaError::data(format!(
            "{} probability rows for {n} samples",
            probs.len()
        )));
    }
    Ok(())
}

pub fn score_pointwise(
    ids: &[u64],
    probs: &[Vec<f64>],
    kind: PointwiseKind,
    rng: &mut Rng,
) -> Result<ScoreVector> {
    check_rows(ids.len(), probs)?;
    let scores = probs
        .iter()
        .map(|p| match kind {
            PointwiseKind::Entropy => entropy(p),
            PointwiseKind::Margin => {
                let (a, b) = top_two(p);
                -(a - b)
            }
            PointwiseKind::Confidence => -p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            PointwiseKind::Random => rng.random::<f64>(),
        })
        .collect();
    Ok(ScoreVector::new(kind.name(), ids.to_vec(), scores))
}

/// Local inconsistency: `-(1/K) * sum_k w_k * p(x_k) . p(x)`.
///
/// `probs[i]` belongs to row `i` of `index`.
pub fn li_raw(probs: &[Vec<f64>], index: &NeighborIndex) -> Result<ScoreVector> {
    check_rows(index.len(), probs)?;
    let c = probs.first().map_or(0, Vec::len);
    if probs.iter().any(|p| p.len() != c) {
        return Err(LadaError::data("probability rows differ in length"));
    }
    let inv_k = 1.0 / index.k() as f64;
    let scores = (0..index.len())
        .map(|i| {
            let p = &probs[i];
            let agreement: f64 = index
                .row(i)
                .iter()
                .zip(index.row_weights(i))
                .map(|(&j, &w)| w * crate::model::dot(&probs[j], p))
                .sum();
            -inv_k * agreement
        })
        .collect();
    Ok(ScoreVector::new("LI", index.ids().to_vec(), scores))
}

/// `out(x) = li(x) + (1/K) * sum_k w_k * li(x_k)`, evaluated from the input
/// vector for every sample at once.
pub fn li_smooth(li: &ScoreVector, index: &NeighborIndex) -> Result<ScoreVector> {
    if li.ids != index.ids() {
        return Err(LadaError::data(
            "score vector and neighbor index cover different samples",
        ));
    }
    let inv_k = 1.0 / index.k() as f64;
    let scores = (0..index.len())
        .map(|i| {
            let spread: f64 = index
                .row(i)
                .iter()
                .zip(index.row_weights(i))
                .map(|(&j, &w)| w * li.scores[j])
                .sum();
            li.scores[i] + inv_k * spread
        })
        .collect();
    Ok(ScoreVector::new(
        li.criterion.clone(),
        li.ids.clone(),
        scores,
    ))
}

/// Neighbor purity times neighbor affinity: the entropy of the neighbors'
/// hard pseudo-labels multiplied by their mean cosine similarity.
pub fn score_nau(probs: &[Vec<f64>], index: &NeighborIndex) -> Result<ScoreVector> {
    check_rows(index.len(), probs)?;
    let c = probs.first().map_or(0, Vec::len);
    let k = index.k() as f64;
    let scores = (0..index.len())
        .map(|i| {
            let mut counts = vec![0usize; c];
            for &j in index.row(i) {
                counts[crate::model::argmax(&probs[j])] += 1;
            }
            let dist: Vec<f64> = counts.iter().map(|&n| n as f64 / k).collect();
            let purity = entropy(&dist);
            let affinity = index.row_similarities(i).iter().sum::<f64>() / k;
            purity * affinity
        })
        .collect();
    Ok(ScoreVector::new("NAU", index.ids().to_vec(), scores))
}
