//! Weighted k-means with k-means++ seeding.
//!
//! Shared by the diverse-subset step of LAS and by the CLUE and BADGE
//! baselines. Points are visited in the order given, so callers that pass
//! points sorted by id get lowest-id tie breaking everywhere.

use rand::Rng as _;

use crate::error::{LadaError, Result};
use crate::rng::Rng;

pub const MAX_ITER: usize = 50;
pub const TOLERANCE: f64 = 1e-6;

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index drawn with probability proportional to `mass`; `None` if the total
/// mass is zero.
fn draw_proportional(mass: &[f64], rng: &mut Rng) -> Option<usize> {
    let total: f64 = mass.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &m) in mass.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        acc += m;
        last = Some(i);
        if target < acc {
            return Some(i);
        }
    }
    last
}

/// k-means++ seeding: the first seed is drawn proportional to `weights` (or
/// uniformly), later seeds proportional to `weight * D^2`. When every
/// remaining point has zero mass the next seed is drawn uniformly from the
/// points not yet chosen. Returns `k` distinct point indices.
pub fn kmeans_pp_init(
    points: &[&[f64]],
    weights: Option<&[f64]>,
    k: usize,
    rng: &mut Rng,
) -> Vec<usize> {
    let n = points.len();
    let k = k.min(n);
    let mut chosen = Vec::with_capacity(k);
    if k == 0 {
        return chosen;
    }
    let mut taken = vec![false; n];
    let uniform_unchosen = |taken: &[bool], rng: &mut Rng| {
        let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
        free[rng.random_range(0..free.len())]
    };

    let first = weights
        .and_then(|w| draw_proportional(w, rng))
        .unwrap_or_else(|| uniform_unchosen(&taken, rng));
    chosen.push(first);
    taken[first] = true;

    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, points[first])).collect();
    while chosen.len() < k {
        let mass: Vec<f64> = (0..n)
            .map(|i| {
                if taken[i] {
                    0.0
                } else {
                    d2[i] * weights.map_or(1.0, |w| w[i])
                }
            })
            .collect();
        let next = draw_proportional(&mass, rng).unwrap_or_else(|| uniform_unchosen(&taken, rng));
        chosen.push(next);
        taken[next] = true;
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, points[next]));
        }
    }
    chosen
}

fn nearest_centroid(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cent) in centroids.iter().enumerate() {
        let d = sq_dist(p, cent);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd iterations from k-means++ seeds: at most [`MAX_ITER`] rounds,
/// stopping once no centroid moves more than [`TOLERANCE`]. An empty cluster
/// is re-seeded at the point farthest from its current centroid.
pub fn kmeans(
    points: &[&[f64]],
    weights: Option<&[f64]>,
    k: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<f64>>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(LadaError::config(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    if let Some(w) = weights {
        if w.len() != n || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(LadaError::numeric(
                "cluster weights must be finite and non-negative",
            ));
        }
    }
    let dim = points[0].len();
    let mut centroids: Vec<Vec<f64>> = kmeans_pp_init(points, weights, k, rng)
        .into_iter()
        .map(|i| points[i].to_vec())
        .collect();
    let mut assign = vec![0usize; n];

    for _ in 0..MAX_ITER {
        let mut dist = vec![0.0; n];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest_centroid(p, &centroids);
            assign[i] = c;
            dist[i] = d;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut mass = vec![0.0; k];
        let mut plain = vec![vec![0.0; dim]; k];
        let mut count = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let c = assign[i];
            let w = weights.map_or(1.0, |w| w[i]);
            mass[c] += w;
            count[c] += 1;
            for j in 0..dim {
                sums[c][j] += w * p[j];
                plain[c][j] += p[j];
            }
        }
        let mut reseeded = vec![false; n];
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let next: Vec<f64> = if count[c] == 0 {
                let far = (0..n)
                    .filter(|&i| !reseeded[i])
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .unwrap_or(0);
                reseeded[far] = true;
                dist[far] = 0.0;
                points[far].to_vec()
            } else if mass[c] > 0.0 {
                sums[c].iter().map(|s| s / mass[c]).collect()
            } else {
                plain[c].iter().map(|s| s / count[c] as f64).collect()
            };
            shift = shift.max(sq_dist(&next, &centroids[c]).sqrt());
            centroids[c] = next;
        }
        if shift < TOLERANCE {
            break;
        }
    }
    Ok(centroids)
}

/// For each centroid in order, the nearest point not already claimed by an
/// earlier centroid (ties to the lower index).
pub fn nearest_distinct(points: &[&[f64]], centroids: &[Vec<f64>]) -> Vec<usize> {
    let mut claimed = vec![false; points.len()];
    let mut out = Vec::with_capacity(centroids.len());
    for c in centroids {
        let best = (0..points.len())
            .filter(|&i| !claimed[i])
            .map(|i| (sq_dist(points[i], c), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((_, i)) = best {
            claimed[i] = true;
            out.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn init_returns_distinct_indices_even_for_identical_points() {
        let pts = vec![vec![1.0, 1.0]; 6];
        let mut rng = seeded(1);
        let mut got = kmeans_pp_init(&refs(&pts), None, 6, &mut rng);
        got.sort();
        assert_eq!(got, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn zero_mass_points_wait_until_the_end() {
        // points 0..3 coincide, 3 is far away: after seeding in the cluster the
        // far point must come next
        let pts = vec![vec![0.0], vec![0.0], vec![0.0], vec![10.0]];
        for seed in 0..20 {
            let mut rng = seeded(seed);
            let got = kmeans_pp_init(&refs(&pts), None, 2, &mut rng);
            assert!(got.contains(&3));
        }
    }

    #[test]
    fn two_blobs_two_centroids() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(vec![i as f64 * 0.01, 0.0]);
            pts.push(vec![5.0 + i as f64 * 0.01, 5.0]);
        }
        let mut rng = seeded(3);
        let cents = kmeans(&refs(&pts), None, 2, &mut rng).unwrap();
        let mut xs: Vec<f64> = cents.iter().map(|c| c[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] - 0.045).abs() < 1e-9 && (xs[1] - 5.045).abs() < 1e-9);
    }

    #[test]
    fn weights_pull_centroid() {
        let pts = vec![vec![0.0], vec![1.0]];
        let mut rng = seeded(4);
        let c = kmeans(&refs(&pts), Some(&[3.0, 1.0]), 1, &mut rng).unwrap();
        assert!((c[0][0] - 0.25).abs() < 1e-12);
        let c = kmeans(&refs(&pts), Some(&[0.0, 0.0]), 1, &mut rng).unwrap();
        assert!((c[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nearest_distinct_dedups() {
        let pts = vec![vec![0.0], vec![0.0], vec![3.0]];
        let cents = vec![vec![0.0], vec![0.1], vec![0.2]];
        assert_eq!(nearest_distinct(&refs(&pts), &cents), vec![0, 1, 2]);
    }

    #[test]
    fn rejects_too_many_clusters() {
        let pts = vec![vec![0.0]];
        assert!(kmeans(&refs(&pts), None, 2, &mut seeded(0)).is_err());
    }
}
