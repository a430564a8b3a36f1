//! Summary statistics for multi-seed sweeps.

use rand::Rng as _;

use crate::error::{LadaError, Result};
use crate::rng::Rng;

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Linear-interpolated percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedCi {
    /// Mean of `a - b`.
    pub mean_diff: f64,
    pub lower: f64,
    pub upper: f64,
}

impl PairedCi {
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }
}

/// Percentile bootstrap 95% interval for the mean of paired differences.
pub fn paired_bootstrap_ci(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    rng: &mut Rng,
) -> Result<PairedCi> {
    if a.len() != b.len() {
        return Err(LadaError::data(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(LadaError::config(
            "a paired bootstrap needs at least two seeds",
        ));
    }
    if resamples == 0 {
        return Err(LadaError::config("bootstrap needs at least one resample"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| diffs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    Ok(PairedCi {
        mean_diff: mean(&diffs),
        lower: percentile(&means, 0.025),
        upper: percentile(&means, 0.975),
    })
}
