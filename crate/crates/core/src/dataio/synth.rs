use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{apply_rsut, Dataset, Domain, Sample};
use crate::error::{LadaError, Result};
use crate::rng;

/// Parameters of the two-domain Gaussian mixture generator.
///
/// Source class `c` is `N(mean_c, within_std^2 I)` with the means spread over
/// a sphere of radius `radius`. A target sample of class `c` is a source-style
/// draw with its noise scaled by `cov_ratio`, rotated by `rotation` radians in
/// every coordinate plane `(2i, 2i+1)` and then shifted by `translation` along
/// a random unit direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub dim: usize,
    pub source_per_class: usize,
    pub target_per_class: usize,
    pub radius: f64,
    pub within_std: f64,
    pub rotation: f64,
    pub translation: f64,
    pub cov_ratio: f64,
    pub rsut_gamma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_classes: 8,
            dim: 16,
            source_per_class: 250,
            target_per_class: 250,
            radius: 3.0,
            within_std: 1.0,
            rotation: 0.5,
            translation: 1.0,
            cov_ratio: 1.2,
            rsut_gamma: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(LadaError::config("synthetic data needs at least 2 classes"));
        }
        if self.dim < 2 {
            return Err(LadaError::config(
                "synthetic data needs at least 2 dimensions",
            ));
        }
        if self.source_per_class == 0 || self.target_per_class == 0 {
            return Err(LadaError::config(
                "per-class sample counts must be positive",
            ));
        }
        let magnitudes = [
            ("radius", self.radius),
            ("within_std", self.within_std),
            ("translation", self.translation),
            ("cov_ratio", self.cov_ratio),
        ];
        for (name, v) in magnitudes {
            if !v.is_finite() || v < 0.0 {
                return Err(LadaError::config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !self.rotation.is_finite() {
            return Err(LadaError::config("rotation must be finite"));
        }
        if !self.rsut_gamma.is_finite() || self.rsut_gamma < 1.0 {
            return Err(LadaError::config(format!(
                "rsut_gamma must be >= 1, got {}",
                self.rsut_gamma
            )));
        }
        Ok(())
    }
}

fn gaussian_vec(rng: &mut rng::Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Rotates `v` by `angle` inside each plane `(2i, 2i+1)`; an odd trailing
/// coordinate is left alone.
pub(crate) fn rotate_planes(v: &mut [f64], angle: f64) {
    let (sin, cos) = angle.sin_cos();
    for pair in v.chunks_exact_mut(2) {
        let (a, b) = (pair[0], pair[1]);
        pair[0] = cos * a - sin * b;
        pair[1] = sin * a + cos * b;
    }
}

pub fn gen_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, rng::Stream::Data);
    let d = cfg.dim;

    let means: Vec<Vec<f64>> = (0..cfg.num_classes)
        .map(|_| {
            let mut v = gaussian_vec(&mut rng, d);
            let norm = v
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            v.iter_mut().for_each(|x| *x *= cfg.radius / norm);
            v
        })
        .collect();
    let shift_dir = {
        let mut v = gaussian_vec(&mut rng, d);
        let norm = v
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        v.iter_mut().for_each(|x| *x /= norm);
        v
    };

    let mut source = Vec::with_capacity(cfg.num_classes * cfg.source_per_class);
    let mut next_id = 0u64;
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..cfg.source_per_class {
            let feature = mean
                .iter()
                .map(|m| m + cfg.within_std * rng.sample::<f64, _>(StandardNormal))
                .collect();
            source.push(Sample {
                id: next_id,
                feature,
                label: Some(c),
                domain: Domain::Source,
            });
            next_id += 1;
        }
    }

    let target_std = cfg.within_std * cfg.cov_ratio;
    let mut target = Vec::with_capacity(cfg.num_classes * cfg.target_per_class);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..cfg.target_per_class {
            let mut feature: Vec<f64> = mean
                .iter()
                .map(|m| m + target_std * rng.sample::<f64, _>(StandardNormal))
                .collect();
            rotate_planes(&mut feature, cfg.rotation);
            for (x, u) in feature.iter_mut().zip(&shift_dir) {
                *x += cfg.translation * u;
            }
            target.push(Sample {
                id: next_id,
                feature,
                label: Some(c),
                domain: Domain::Target,
            });
            next_id += 1;
        }
    }

    let ds = Dataset::new(d, cfg.num_classes, source, target)?;
    if cfg.rsut_gamma > 1.0 {
        apply_rsut(&ds, cfg.rsut_gamma)
    } else {
        Ok(ds)
    }
}
