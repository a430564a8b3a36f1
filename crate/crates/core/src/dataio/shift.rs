use std::collections::BTreeMap;

use rand::Rng as _;

use super::{class_prototypes, Dataset, Sample};
use crate::error::{LadaError, Result};
use crate::rng;

/// Per-class retention proportions for reverse-unbalanced source and
/// unbalanced target label shift.
///
/// Source class `c` keeps `gamma^(-c/(C-1))` of its samples and target class
/// `c` keeps `gamma^(-(C-1-c)/(C-1))`, so the most frequent source class is
/// the rarest target class. The two vectors are exact reverses.
pub fn rsut_retention(num_classes: usize, gamma: f64) -> (Vec<f64>, Vec<f64>) {
    if num_classes < 2 {
        return (vec![1.0; num_classes], vec![1.0; num_classes]);
    }
    let span = (num_classes - 1) as f64;
    let source: Vec<f64> = (0..num_classes)
        .map(|c| gamma.powf(-(c as f64) / span))
        .collect();
    let target = source.iter().rev().copied().collect();
    (source, target)
}

fn retained_count(n: usize, proportion: f64) -> usize {
    (n as f64 * proportion).round() as usize
}

/// Subsamples each class of both domains by the retention profile. The first
/// samples of each class (in dataset order) are the ones kept.
pub fn apply_rsut(ds: &Dataset, gamma: f64) -> Result<Dataset> {
    if !gamma.is_finite() || gamma < 1.0 {
        return Err(LadaError::config(format!(
            "rsut gamma must be >= 1, got {gamma}"
        )));
    }
    let c = ds.num_classes();
    let (keep_src, keep_tgt) = rsut_retention(c, gamma);
    let hidden = ds.hidden_labels();

    let mut src_counts = vec![0usize; c];
    for s in ds.source() {
        src_counts[s.label.expect("source samples are labeled")] += 1;
    }
    let mut tgt_counts = vec![0usize; c];
    for s in ds.target() {
        let label = hidden.get(&s.id).ok_or_else(|| {
            LadaError::data(format!("target sample {} has no ground-truth label", s.id))
        })?;
        tgt_counts[*label] += 1;
    }
    let src_quota: Vec<usize> = src_counts
        .iter()
        .zip(&keep_src)
        .map(|(&n, &p)| retained_count(n, p))
        .collect();
    let tgt_quota: Vec<usize> = tgt_counts
        .iter()
        .zip(&keep_tgt)
        .map(|(&n, &p)| retained_count(n, p))
        .collect();
    for class in 0..c {
        if src_quota[class] == 0 {
            return Err(LadaError::data(format!(
                "label shift empties source class {class}"
            )));
        }
        if tgt_quota[class] == 0 {
            return Err(LadaError::data(format!(
                "label shift empties target class {class}"
            )));
        }
    }

    let mut taken = vec![0usize; c];
    let source: Vec<Sample> = ds
        .source()
        .iter()
        .filter(|s| {
            let l = s.label.unwrap();
            taken[l] += 1;
            taken[l] <= src_quota[l]
        })
        .cloned()
        .collect();
    let mut taken = vec![0usize; c];
    let target: Vec<Sample> = ds
        .target()
        .iter()
        .filter(|s| {
            let l = hidden[&s.id];
            taken[l] += 1;
            taken[l] <= tgt_quota[l]
        })
        .cloned()
        .collect();
    let kept: BTreeMap<u64, usize> = target.iter().map(|s| (s.id, hidden[&s.id])).collect();
    let mut out = Dataset::from_parts(ds.dim(), c, source, target, kept);
    let still_labeled: Vec<u64> = ds
        .target_labeled_ids()
        .iter()
        .copied()
        .filter(|id| out.target_position(*id).is_some())
        .collect();
    for id in still_labeled {
        let pos = out.target_position(id).unwrap();
        out.target[pos].label = out.oracle.peek(id);
        out.target_labeled.insert(id);
    }
    Ok(out)
}

/// `xi_c = sum_i r[c][i] * (p_i - p_c)` for every class `c`.
pub fn class_displacements(prototypes: &[Vec<f64>], coefficients: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = prototypes.first().map_or(0, Vec::len);
    prototypes
        .iter()
        .zip(coefficients)
        .map(|(own, r)| {
            let mut xi = vec![0.0; dim];
            for (other, &ri) in prototypes.iter().zip(r) {
                for ((x, o), p) in xi.iter_mut().zip(other).zip(own) {
                    *x += ri * (o - p);
                }
            }
            xi
        })
        .collect()
}

/// Moves every source sample of class `c` by a random combination of
/// prototype differences, with coefficients drawn from `U(-u, u)`. Target
/// samples and all labels are untouched.
pub fn perturb_source(ds: &Dataset, u: f64, seed: u64) -> Result<Dataset> {
    if !u.is_finite() || u < 0.0 {
        return Err(LadaError::config(format!(
            "perturbation scale must be >= 0, got {u}"
        )));
    }
    if u == 0.0 {
        return Ok(ds.clone());
    }
    let c = ds.num_classes();
    let prototypes = class_prototypes(ds.source(), c)?;
    let mut rng = rng::stream(seed, rng::Stream::Perturb);
    let coefficients: Vec<Vec<f64>> = (0..c)
        .map(|_| (0..c).map(|_| rng.random_range(-u..u)).collect())
        .collect();
    let xi = class_displacements(&prototypes, &coefficients);

    let mut out = ds.clone();
    for s in out.source.iter_mut() {
        let shift = &xi[s.label.unwrap()];
        for (x, d) in s.feature.iter_mut().zip(shift) {
            *x += d;
        }
    }
    Ok(out)
}
