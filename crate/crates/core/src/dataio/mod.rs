//! Embedding datasets: samples from a labeled source domain and a target
//! domain whose labels sit behind an [`Oracle`].
//!
//! Target labels handed to [`Dataset::new`] are moved into the oracle and
//! erased from the visible samples. They become visible again only through
//! [`Dataset::reveal`], which is how the harness "queries" an annotator.

mod format;
mod shift;
mod synth;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};

pub use format::{
    load_embeddings, load_embeddings_binary, load_embeddings_csv, write_embeddings,
    write_embeddings_binary, write_embeddings_csv, BINARY_MAGIC,
};
pub use shift::{apply_rsut, class_displacements, perturb_source, rsut_retention};
pub use synth::{gen_synthetic, SynthConfig};

use crate::error::{LadaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub feature: Vec<f64>,
    pub label: Option<usize>,
    pub domain: Domain,
}

/// Ground-truth target labels.
///
/// Two counters record how often the labels were read: `reveals` for
/// annotation queries and `evaluation_reads` for accuracy measurement. Nothing
/// else in the crate has access to the labels.
#[derive(Debug, Default)]
pub struct Oracle {
    labels: BTreeMap<u64, usize>,
    reveals: AtomicUsize,
    evaluation_reads: AtomicUsize,
}

impl Clone for Oracle {
    fn clone(&self) -> Self {
        Oracle {
            labels: self.labels.clone(),
            reveals: AtomicUsize::new(self.reveals()),
            evaluation_reads: AtomicUsize::new(self.evaluation_reads()),
        }
    }
}

impl PartialEq for Oracle {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Oracle {
    fn reveal(&self, id: u64) -> Option<usize> {
        self.reveals.fetch_add(1, Ordering::Relaxed);
        self.labels.get(&id).copied()
    }

    /// Label lookup for accuracy measurement.
    pub fn evaluation_label(&self, id: u64) -> Option<usize> {
        self.evaluation_reads.fetch_add(1, Ordering::Relaxed);
        self.labels.get(&id).copied()
    }

    pub fn reveals(&self) -> usize {
        self.reveals.load(Ordering::Relaxed)
    }

    pub fn evaluation_reads(&self) -> usize {
        self.evaluation_reads.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    // Construction-time access (resampling, file emission). Not counted.
    pub(crate) fn peek(&self, id: u64) -> Option<usize> {
        self.labels.get(&id).copied()
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    dim: usize,
    num_classes: usize,
    source: Vec<Sample>,
    target: Vec<Sample>,
    target_labeled: BTreeSet<u64>,
    budget_cap: Option<usize>,
    oracle: Oracle,
    target_pos: HashMap<u64, usize>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.num_classes == other.num_classes
            && self.source == other.source
            && self.target == other.target
            && self.target_labeled == other.target_labeled
            && self.oracle == other.oracle
    }
}

impl Dataset {
    /// Builds a dataset, moving every target label into the oracle.
    pub fn new(
        dim: usize,
        num_classes: usize,
        source: Vec<Sample>,
        mut target: Vec<Sample>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(LadaError::data("dimension must be positive"));
        }
        if num_classes == 0 {
            return Err(LadaError::data("number of classes must be positive"));
        }
        let mut seen = BTreeSet::new();
        for s in source.iter().chain(target.iter()) {
            if s.feature.len() != dim {
                return Err(LadaError::data(format!(
                    "sample {} has {} features, expected {dim}",
                    s.id,
                    s.feature.len()
                )));
            }
            if !seen.insert(s.id) {
                return Err(LadaError::data(format!("duplicate sample id {}", s.id)));
            }
            if let Some(l) = s.label {
                if l >= num_classes {
                    return Err(LadaError::data(format!(
                        "sample {} has label {l} outside 0..{num_classes}",
                        s.id
                    )));
                }
            }
        }
        if let Some(s) = source.iter().find(|s| s.domain != Domain::Source) {
            return Err(LadaError::data(format!(
                "sample {} is not a source sample",
                s.id
            )));
        }
        if let Some(s) = target.iter().find(|s| s.domain != Domain::Target) {
            return Err(LadaError::data(format!(
                "sample {} is not a target sample",
                s.id
            )));
        }
        if let Some(s) = source.iter().find(|s| s.label.is_none()) {
            return Err(LadaError::data(format!(
                "source sample {} is unlabeled",
                s.id
            )));
        }

        let mut labels = BTreeMap::new();
        for s in target.iter_mut() {
            if let Some(l) = s.label.take() {
                labels.insert(s.id, l);
            }
        }
        let target_pos = target.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
        Ok(Dataset {
            dim,
            num_classes,
            source,
            target,
            target_labeled: BTreeSet::new(),
            budget_cap: None,
            oracle: Oracle {
                labels,
                ..Oracle::default()
            },
            target_pos,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn source(&self) -> &[Sample] {
        &self.source
    }

    pub fn target(&self) -> &[Sample] {
        &self.target
    }

    pub fn oracle(&self) -> &Oracle {
        &self.oracle
    }

    /// The queried set.
    pub fn target_labeled_ids(&self) -> &BTreeSet<u64> {
        &self.target_labeled
    }

    pub fn unlabeled_target_ids(&self) -> Vec<u64> {
        self.target
            .iter()
            .map(|s| s.id)
            .filter(|id| !self.target_labeled.contains(id))
            .collect()
    }

    pub fn target_position(&self, id: u64) -> Option<usize> {
        self.target_pos.get(&id).copied()
    }

    pub fn target_sample(&self, id: u64) -> Option<&Sample> {
        self.target_position(id).map(|i| &self.target[i])
    }

    pub fn target_pool(&self) -> Pool<'_> {
        let ids: Vec<u64> = self.target.iter().map(|s| s.id).collect();
        Pool::new(
            &ids,
            self.target.iter().map(|s| s.feature.as_slice()).collect(),
        )
    }

    /// Caps the total number of target labels that may ever be revealed.
    pub fn set_budget_cap(&mut self, cap: usize) {
        self.budget_cap = Some(cap);
    }

    /// Queries the oracle for `ids` and records them as labeled.
    pub fn reveal(&mut self, ids: &[u64]) -> Result<Vec<(u64, usize)>> {
        let unique: BTreeSet<u64> = ids.iter().copied().collect();
        if unique.len() != ids.len() {
            return Err(LadaError::data("query set contains duplicate ids"));
        }
        if let Some(cap) = self.budget_cap {
            if self.target_labeled.len() + ids.len() > cap {
                return Err(LadaError::data(format!(
                    "revealing {} labels would exceed the budget of {cap}",
                    ids.len()
                )));
            }
        }
        for id in ids {
            if self.target_position(*id).is_none() {
                return Err(LadaError::data(format!("id {id} is not a target sample")));
            }
            if self.target_labeled.contains(id) {
                return Err(LadaError::data(format!("id {id} was already queried")));
            }
        }
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            let label = self.oracle.reveal(id).ok_or_else(|| {
                LadaError::data(format!("oracle has no label for target id {id}"))
            })?;
            let pos = self.target_pos[&id];
            self.target[pos].label = Some(label);
            self.target_labeled.insert(id);
            out.push((id, label));
        }
        Ok(out)
    }

    pub(crate) fn from_parts(
        dim: usize,
        num_classes: usize,
        source: Vec<Sample>,
        target: Vec<Sample>,
        hidden: BTreeMap<u64, usize>,
    ) -> Self {
        let target_pos = target.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
        Dataset {
            dim,
            num_classes,
            source,
            target,
            target_labeled: BTreeSet::new(),
            budget_cap: None,
            oracle: Oracle {
                labels: hidden,
                ..Oracle::default()
            },
            target_pos,
        }
    }

    pub(crate) fn hidden_labels(&self) -> &BTreeMap<u64, usize> {
        &self.oracle.labels
    }
}

/// Label-free view of a set of samples: ids and features only.
#[derive(Debug, Clone)]
pub struct Pool<'a> {
    ids: Vec<u64>,
    features: Vec<&'a [f64]>,
    pos: HashMap<u64, usize>,
}

impl<'a> Pool<'a> {
    pub fn new(ids: &[u64], features: Vec<&'a [f64]>) -> Self {
        assert_eq!(ids.len(), features.len(), "one feature per id");
        let pos = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        Pool {
            ids: ids.to_vec(),
            features,
            pos,
        }
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn features(&self) -> &[&'a [f64]] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn feature(&self, id: u64) -> Option<&'a [f64]> {
        self.pos.get(&id).map(|&i| self.features[i])
    }
}

/// Mean feature of every class.
pub fn class_prototypes(samples: &[Sample], num_classes: usize) -> Result<Vec<Vec<f64>>> {
    let dim = samples.first().map_or(0, |s| s.feature.len());
    let mut sums = vec![vec![0.0; dim]; num_classes];
    let mut counts = vec![0usize; num_classes];
    for s in samples {
        let Some(label) = s.label else { continue };
        if label >= num_classes {
            return Err(LadaError::data(format!(
                "label {label} outside 0..{num_classes}"
            )));
        }
        counts[label] += 1;
        for (acc, x) in sums[label].iter_mut().zip(&s.feature) {
            *acc += x;
        }
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(LadaError::data(format!("class {c} has no labeled samples")));
    }
    for (sum, &n) in sums.iter_mut().zip(&counts) {
        for v in sum.iter_mut() {
            *v /= n as f64;
        }
    }
    Ok(sums)
}
