//! Exact cosine k-nearest-neighbor index.
//!
//! Every row keeps its `K` most similar other samples in descending
//! similarity, ties broken by ascending id. Neighbor weights are
//! `max(cos, 0) + 1e-12` normalized to sum to one.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{LadaError, Result};

const WEIGHT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u64,
    pub similarity: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborIndex {
    k: usize,
    ids: Vec<u64>,
    pos: HashMap<u64, usize>,
    /// Row-major `n x k` neighbor positions.
    neighbors: Vec<usize>,
    neighbor_ids: Vec<u64>,
    similarities: Vec<f64>,
    weights: Vec<f64>,
}

/// Orders by descending similarity, then ascending id.
pub fn neighbor_order(a: (f64, u64), b: (f64, u64)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

pub fn normalized_weights(similarities: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = similarities
        .iter()
        .map(|s| s.max(0.0) + WEIGHT_EPS)
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

impl NeighborIndex {
    /// Brute-force build over `embeddings[i]` labeled `ids[i]`.
    pub fn build<E: AsRef<[f64]> + Sync>(ids: &[u64], embeddings: &[E], k: usize) -> Result<Self> {
        let n = ids.len();
        if embeddings.len() != n {
            return Err(LadaError::data("one embedding per id required"));
        }
        if k == 0 || k >= n {
            return Err(LadaError::config(format!(
                "neighborhood size {k} must lie in 1..{n}"
            )));
        }
        let unit: Vec<Vec<f64>> = embeddings
            .iter()
            .zip(ids)
            .map(|(e, id)| {
                let e = e.as_ref();
                let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    return Err(LadaError::numeric(format!(
                        "embedding of sample {id} has zero or non-finite norm"
                    )));
                }
                Ok(e.iter().map(|x| x / norm).collect())
            })
            .collect::<Result<_>>()?;

        let rows: Vec<Vec<(f64, u64, usize)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut cand: Vec<(f64, u64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (crate::model::dot(&unit[i], &unit[j]), ids[j], j))
                    .collect();
                let cmp = |a: &(f64, u64, usize), b: &(f64, u64, usize)| {
                    neighbor_order((a.0, a.1), (b.0, b.1))
                };
                if cand.len() > k {
                    cand.select_nth_unstable_by(k - 1, cmp);
                    cand.truncate(k);
                }
                cand.sort_by(cmp);
                cand
            })
            .collect();

        let mut index = NeighborIndex {
            k,
            ids: ids.to_vec(),
            pos: ids.iter().enumerate().map(|(i, &id)| (id, i)).collect(),
            neighbors: Vec::with_capacity(n * k),
            neighbor_ids: Vec::with_capacity(n * k),
            similarities: Vec::with_capacity(n * k),
            weights: Vec::with_capacity(n * k),
        };
        if index.pos.len() != n {
            return Err(LadaError::data("duplicate ids in neighbor index"));
        }
        for row in rows {
            let sims: Vec<f64> = row.iter().map(|r| r.0).collect();
            index.weights.extend(normalized_weights(&sims));
            index.similarities.extend(sims);
            index.neighbor_ids.extend(row.iter().map(|r| r.1));
            index.neighbors.extend(row.iter().map(|r| r.2));
        }
        Ok(index)
    }

    /// Index from explicit neighbor lists `(position, similarity, weight)`.
    pub fn from_rows(ids: &[u64], rows: Vec<Vec<(usize, f64, f64)>>) -> Result<Self> {
        let n = ids.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.len() != n || k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(LadaError::data(
                "every row needs the same positive number of neighbors",
            ));
        }
        let mut index = NeighborIndex {
            k,
            ids: ids.to_vec(),
            pos: ids.iter().enumerate().map(|(i, &id)| (id, i)).collect(),
            neighbors: Vec::with_capacity(n * k),
            neighbor_ids: Vec::with_capacity(n * k),
            similarities: Vec::with_capacity(n * k),
            weights: Vec::with_capacity(n * k),
        };
        for (i, row) in rows.into_iter().enumerate() {
            for (j, s, w) in row {
                if j >= n || j == i {
                    return Err(LadaError::data(format!(
                        "row {i} has invalid neighbor position {j}"
                    )));
                }
                index.neighbors.push(j);
                index.neighbor_ids.push(ids[j]);
                index.similarities.push(s);
                index.weights.push(w);
            }
        }
        Ok(index)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn position(&self, id: u64) -> Option<usize> {
        self.pos.get(&id).copied()
    }

    /// Neighbor positions of row `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    pub fn row_ids(&self, i: usize) -> &[u64] {
        &self.neighbor_ids[i * self.k..(i + 1) * self.k]
    }

    pub fn row_similarities(&self, i: usize) -> &[f64] {
        &self.similarities[i * self.k..(i + 1) * self.k]
    }

    pub fn row_weights(&self, i: usize) -> &[f64] {
        &self.weights[i * self.k..(i + 1) * self.k]
    }

    pub fn neighbors_of(&self, id: u64) -> Result<Vec<Neighbor>> {
        let i = self
            .position(id)
            .ok_or_else(|| LadaError::data(format!("id {id} is not indexed")))?;
        Ok(self
            .row_ids(i)
            .iter()
            .zip(self.row_similarities(i))
            .zip(self.row_weights(i))
            .map(|((&id, &similarity), &weight)| Neighbor {
                id,
                similarity,
                weight,
            })
            .collect())
    }
}
