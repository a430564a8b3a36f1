use super::entropy;
use crate::cluster::{kmeans, kmeans_pp_init, nearest_distinct, sq_dist};
use crate::error::{LadaError, Result};
use crate::model::argmax;
use crate::rng::Rng;

fn check_budget(b: usize, n: usize) -> Result<()> {
    if b > n {
        return Err(LadaError::config(format!(
            "cannot select {b} samples from {n} candidates"
        )));
    }
    Ok(())
}

fn sorted_by_id<'a>(items: &[(u64, &'a [f64])]) -> Vec<(u64, &'a [f64])> {
    let mut v = items.to_vec();
    v.sort_by_key(|(id, _)| *id);
    v
}

/// Greedy k-center: repeatedly take the unlabeled point farthest (Euclidean)
/// from every labeled or already selected point. With nothing labeled the
/// lowest-id unlabeled point opens the selection.
pub fn coreset_select(
    labeled: &[(u64, &[f64])],
    unlabeled: &[(u64, &[f64])],
    b: usize,
) -> Result<Vec<u64>> {
    check_budget(b, unlabeled.len())?;
    let pool = sorted_by_id(unlabeled);
    let mut nearest: Vec<f64> = pool
        .iter()
        .map(|(_, p)| {
            labeled
                .iter()
                .map(|(_, l)| sq_dist(p, l))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut picked = vec![false; pool.len()];
    let mut out = Vec::with_capacity(b);
    while out.len() < b {
        let next = if labeled.is_empty() && out.is_empty() {
            0
        } else {
            (0..pool.len())
                .filter(|&i| !picked[i])
                .max_by(|&a, &c| nearest[a].total_cmp(&nearest[c]).then(c.cmp(&a)))
                .expect("b <= |unlabeled|")
        };
        picked[next] = true;
        out.push(pool[next].0);
        let center = pool[next].1;
        for (i, (_, p)) in pool.iter().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(p, center));
        }
    }
    Ok(out)
}

/// Last-layer gradient embedding `(p - onehot(argmax p)) (x) f(x)`, flattened
/// class-major.
pub fn badge_embedding(embedding: &[f64], probs: &[f64]) -> Vec<f64> {
    let y = argmax(probs);
    probs
        .iter()
        .enumerate()
        .flat_map(|(c, &pc)| {
            let g = pc - if c == y { 1.0 } else { 0.0 };
            embedding.iter().map(move |e| g * e)
        })
        .collect()
}

/// k-means++ seeding over gradient embeddings.
pub fn badge_select(
    items: &[(u64, &[f64])],
    probs: &[Vec<f64>],
    b: usize,
    rng: &mut Rng,
) -> Result<Vec<u64>> {
    check_budget(b, items.len())?;
    if probs.len() != items.len() {
        return Err(LadaError::data(
            "one probability row per candidate required",
        ));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by_key(|&i| items[i].0);
    let grads: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| badge_embedding(items[i].1, &probs[i]))
        .collect();
    let refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
    Ok(kmeans_pp_init(&refs, None, b, rng)
        .into_iter()
        .map(|j| items[order[j]].0)
        .collect())
}

/// Entropy-weighted k-means over all candidates; returns the candidate
/// nearest to each centroid. All-zero weights fall back to plain k-means.
pub fn clue_select(
    items: &[(u64, &[f64])],
    probs: &[Vec<f64>],
    b: usize,
    rng: &mut Rng,
) -> Result<Vec<u64>> {
    check_budget(b, items.len())?;
    if probs.len() != items.len() {
        return Err(LadaError::data(
            "one probability row per candidate required",
        ));
    }
    if b == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by_key(|&i| items[i].0);
    let points: Vec<&[f64]> = order.iter().map(|&i| items[i].1).collect();
    let weights: Vec<f64> = order.iter().map(|&i| entropy(&probs[i])).collect();
    let weights = weights.iter().any(|&w| w > 0.0).then_some(weights);
    let centroids = kmeans(&points, weights.as_deref(), b, rng)?;
    Ok(nearest_distinct(&points, &centroids)
        .into_iter()
        .map(|j| items[order[j]].0)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn items(points: &[Vec<f64>]) -> Vec<(u64, &[f64])> {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| (i as u64, p.as_slice()))
            .collect()
    }

    #[test]
    fn coreset_takes_all_when_budget_is_everything() {
        let pts = vec![vec![0.0], vec![1.0], vec![5.0]];
        let mut got = coreset_select(&[], &items(&pts), 3).unwrap();
        got.sort();
        assert_eq!(got, vec![0, 1, 2]);
        assert!(coreset_select(&[], &items(&pts), 4).is_err());
    }

    #[test]
    fn coreset_picks_farthest_point() {
        let lab = [vec![0.0]];
        let labeled = vec![(100u64, lab[0].as_slice())];
        let pts = vec![vec![1.0], vec![10.0]];
        assert_eq!(coreset_select(&labeled, &items(&pts), 1).unwrap(), vec![1]);
    }

    #[test]
    fn coreset_without_labels_opens_with_lowest_id() {
        let pts = [vec![3.0], vec![0.0], vec![10.0]];
        let unl: Vec<(u64, &[f64])> = vec![(7, &pts[0]), (2, &pts[1]), (9, &pts[2])];
        assert_eq!(coreset_select(&[], &unl, 2).unwrap(), vec![2, 9]);
    }

    #[test]
    fn badge_gradient_embedding_is_zero_for_one_hot() {
        assert!(badge_embedding(&[1.0, 2.0], &[0.0, 1.0])
            .iter()
            .all(|&g| g == 0.0));
        let g = badge_embedding(&[1.0, 2.0], &[0.75, 0.25]);
        assert_eq!(g, vec![-0.25, -0.5, 0.25, 0.5]);
    }

    #[test]
    fn badge_never_picks_zero_gradients_while_others_remain() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0 + i as f64, 1.0]).collect();
        let mut probs = vec![vec![1.0, 0.0]; 6];
        probs[2] = vec![0.6, 0.4];
        probs[4] = vec![0.3, 0.7];
        for seed in 0..30 {
            let got = badge_select(&items(&pts), &probs, 3, &mut seeded(seed)).unwrap();
            assert!(got.contains(&2) && got.contains(&4), "seed {seed}: {got:?}");
        }
    }

    #[test]
    fn badge_second_pick_crosses_to_far_cluster() {
        let mut pts = Vec::new();
        let mut probs = Vec::new();
        for i in 0..10 {
            pts.push(vec![1.0, 0.01 * i as f64]);
            probs.push(vec![0.6, 0.4]);
            pts.push(vec![-1.0, 0.01 * i as f64]);
            probs.push(vec![0.6, 0.4]);
        }
        let mut crossed = 0;
        for seed in 0..1000 {
            let got = badge_select(&items(&pts), &probs, 2, &mut seeded(seed)).unwrap();
            if got[0] % 2 != got[1] % 2 {
                crossed += 1;
            }
        }
        assert!(crossed as f64 / 1000.0 > 0.95, "{crossed}");
    }

    #[test]
    fn clue_full_budget_returns_everything() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let probs = vec![vec![0.5, 0.5]; 5];
        let mut got = clue_select(&items(&pts), &probs, 5, &mut seeded(1)).unwrap();
        got.sort();
        assert_eq!(got, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn clue_one_per_blob() {
        let mut pts = Vec::new();
        for i in 0..15 {
            pts.push(vec![0.1 * (i % 4) as f64, 0.1 * (i / 4) as f64]);
            pts.push(vec![20.0 + 0.1 * (i % 4) as f64, 0.1 * (i / 4) as f64]);
        }
        let probs: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![0.5 + 0.01 * (i % 7) as f64, 0.5 - 0.01 * (i % 7) as f64])
            .collect();
        for seed in 0..20 {
            let got = clue_select(&items(&pts), &probs, 2, &mut seeded(seed)).unwrap();
            assert_ne!(got[0] % 2, got[1] % 2, "seed {seed}");
        }
    }

    #[test]
    fn clue_with_one_hot_probs_falls_back_to_uniform_weights() {
        let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let probs = vec![vec![1.0, 0.0]; 8];
        let got = clue_select(&items(&pts), &probs, 3, &mut seeded(2)).unwrap();
        assert_eq!(got.len(), 3);
    }
}
