//! The adapted model: an optional ReLU embedding layer followed by a linear
//! softmax head, trained with hand-written gradients and momentum SGD.
//!
//! Parameters live in one flat vector. For `Hidden(h)` the layout is
//! `[W1 (h x d, row-major), b1 (h), W2 (C x h, row-major), b2 (C)]`; for
//! `Identity` the first two blocks are absent and `W2` is `C x d`. The
//! checkpoint format stores the vector in exactly this order.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand_distr::{Distribution, Normal};

use crate::anchor::Augmenter;
use crate::error::{LadaError, Result};
use crate::rng::Rng;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LADAMDL1";

/// Borrowed feature vector with its class.
pub type Labeled<'a> = (&'a [f64], usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Identity,
    Hidden(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    mode: Mode,
    dim: usize,
    classes: usize,
    params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub mixup_alpha: f64,
    pub mixup_beta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.02,
            momentum: 0.9,
            batch_size: 32,
            mixup_alpha: 0.2,
            mixup_beta: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(LadaError::config("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(LadaError::config("momentum must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(LadaError::config("batch size must be at least 1"));
        }
        if !(self.mixup_alpha > 0.0 && self.mixup_beta > 0.0) {
            return Err(LadaError::config("mixup Beta parameters must be positive"));
        }
        Ok(())
    }
}

/// Momentum SGD state: `v <- momentum * v + g`, `theta <- theta - lr * v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sgd {
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(model: &Classifier) -> Self {
        Sgd {
            velocity: vec![0.0; model.params.len()],
        }
    }

    fn apply(&mut self, model: &mut Classifier, grad: &[f64], cfg: &TrainConfig) {
        for ((p, v), g) in model
            .params
            .iter_mut()
            .zip(self.velocity.iter_mut())
            .zip(grad)
        {
            *v = cfg.momentum * *v + g;
            *p -= cfg.learning_rate * *v;
        }
    }
}

/// Accuracy summary over a labeled sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Class-conditional accuracy; `None` for classes with no samples.
    pub per_class: Vec<Option<f64>>,
    /// Mean of the defined entries of `per_class`.
    pub per_class_mean: f64,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

pub fn loss_ce(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(1e-12).ln()
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl Classifier {
    pub fn zeros(mode: Mode, dim: usize, classes: usize) -> Result<Self> {
        if dim == 0 || classes == 0 {
            return Err(LadaError::config("model dimensions must be positive"));
        }
        if mode == Mode::Hidden(0) {
            return Err(LadaError::config("hidden width must be positive"));
        }
        let n = match mode {
            Mode::Identity => classes * dim + classes,
            Mode::Hidden(h) => h * dim + h + classes * h + classes,
        };
        Ok(Classifier {
            mode,
            dim,
            classes,
            params: vec![0.0; n],
        })
    }

    /// He-style Gaussian initialization for the hidden layer, `N(0, 1/e)`
    /// for the head, zero biases.
    pub fn new(mode: Mode, dim: usize, classes: usize, rng: &mut Rng) -> Result<Self> {
        let mut m = Self::zeros(mode, dim, classes)?;
        let e = m.embed_dim();
        if let Mode::Hidden(h) = mode {
            let hidden = Normal::new(0.0, (2.0 / dim as f64).sqrt()).unwrap();
            for w in &mut m.params[..h * dim] {
                *w = hidden.sample(rng);
            }
        }
        let head = Normal::new(0.0, (1.0 / e as f64).sqrt()).unwrap();
        let off = m.head_offset();
        for w in &mut m.params[off..off + classes * e] {
            *w = head.sample(rng);
        }
        Ok(m)
    }

    pub fn from_params(mode: Mode, dim: usize, classes: usize, params: Vec<f64>) -> Result<Self> {
        let mut m = Self::zeros(mode, dim, classes)?;
        if params.len() != m.params.len() {
            return Err(LadaError::data(format!(
                "expected {} parameters, got {}",
                m.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(LadaError::numeric("non-finite model parameter"));
        }
        m.params = params;
        Ok(m)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn embed_dim(&self) -> usize {
        match self.mode {
            Mode::Identity => self.dim,
            Mode::Hidden(h) => h,
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn head_offset(&self) -> usize {
        match self.mode {
            Mode::Identity => 0,
            Mode::Hidden(h) => h * self.dim + h,
        }
    }

    /// `f(x)`: the raw feature in identity mode, post-ReLU hidden units otherwise.
    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        match self.mode {
            Mode::Identity => x.to_vec(),
            Mode::Hidden(h) => {
                let d = self.dim;
                let (w, rest) = self.params.split_at(h * d);
                let b = &rest[..h];
                (0..h)
                    .map(|j| {
                        let z = b[j] + dot(&w[j * d..(j + 1) * d], x);
                        z.max(0.0)
                    })
                    .collect()
            }
        }
    }

    fn logits_from_embedding(&self, e: &[f64]) -> Vec<f64> {
        let ed = self.embed_dim();
        let off = self.head_offset();
        let w = &self.params[off..off + self.classes * ed];
        let b = &self.params[off + self.classes * ed..];
        (0..self.classes)
            .map(|c| b[c] + dot(&w[c * ed..(c + 1) * ed], e))
            .collect()
    }

    pub fn probs(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits_from_embedding(&self.embed(x)))
    }

    /// Embedding and class probabilities of one feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != self.dim {
            return Err(LadaError::data(format!(
                "feature has {} entries, model expects {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LadaError::numeric("non-finite input feature"));
        }
        let e = self.embed(x);
        let p = softmax(&self.logits_from_embedding(&e));
        if p.iter().any(|v| !v.is_finite()) {
            return Err(LadaError::numeric("non-finite class probabilities"));
        }
        Ok((e, p))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.probs(x))
    }

    /// Adds `weight * d CE / d theta` for one sample to `grad`; returns the
    /// sample's loss.
    fn accumulate(&self, x: &[f64], label: usize, weight: f64, grad: &mut [f64]) -> f64 {
        let e = self.embed(x);
        let p = softmax(&self.logits_from_embedding(&e));
        let ed = self.embed_dim();
        let off = self.head_offset();
        let c = self.classes;

        let dz: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(k, pk)| weight * (pk - if k == label { 1.0 } else { 0.0 }))
            .collect();
        {
            let (gw, gb) = grad[off..].split_at_mut(c * ed);
            for k in 0..c {
                gb[k] += dz[k];
                for (g, ej) in gw[k * ed..(k + 1) * ed].iter_mut().zip(&e) {
                    *g += dz[k] * ej;
                }
            }
        }
        if let Mode::Hidden(h) = self.mode {
            let d = self.dim;
            let w2 = &self.params[off..off + c * h];
            let (gw1, rest) = grad.split_at_mut(h * d);
            let gb1 = &mut rest[..h];
            for j in 0..h {
                if e[j] <= 0.0 {
                    continue;
                }
                let da: f64 = (0..c).map(|k| w2[k * h + j] * dz[k]).sum();
                gb1[j] += da;
                for (g, xi) in gw1[j * d..(j + 1) * d].iter_mut().zip(x) {
                    *g += da * xi;
                }
            }
        }
        loss_ce(&p, label)
    }

    /// Mean source cross-entropy plus mean target cross-entropy, and its
    /// gradient. An empty target batch contributes nothing.
    pub fn loss_and_grad(
        &self,
        source: &[Labeled<'_>],
        target: &[Labeled<'_>],
    ) -> Result<(f64, Vec<f64>)> {
        if source.is_empty() {
            return Err(LadaError::data("empty source batch"));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for batch in [source, target] {
            if batch.is_empty() {
                continue;
            }
            let w = 1.0 / batch.len() as f64;
            let mut sum = 0.0;
            for &(x, y) in batch {
                if y >= self.classes {
                    return Err(LadaError::data(format!(
                        "label {y} outside 0..{}",
                        self.classes
                    )));
                }
                sum += self.accumulate(x, y, w, &mut grad);
            }
            loss += sum * w;
        }
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(LadaError::numeric("non-finite loss or gradient"));
        }
        Ok((loss, grad))
    }

    /// Loss only; the same objective as [`Self::loss_and_grad`].
    pub fn objective(&self, source: &[Labeled<'_>], target: &[Labeled<'_>]) -> f64 {
        [source, target]
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| {
                b.iter()
                    .map(|&(x, y)| loss_ce(&self.probs(x), y))
                    .sum::<f64>()
                    / b.len() as f64
            })
            .sum()
    }

    /// One momentum-SGD step on source CE plus queried-target CE.
    pub fn step_supervised(
        &mut self,
        opt: &mut Sgd,
        source: &[Labeled<'_>],
        labeled_target: &[Labeled<'_>],
        cfg: &TrainConfig,
    ) -> Result<f64> {
        let (loss, grad) = self.loss_and_grad(source, labeled_target)?;
        opt.apply(self, &grad, cfg);
        Ok(loss)
    }

    /// One step where each anchor feature is replaced by its mixed
    /// augmentation `beta * x + (1 - beta) * alpha(x)` before the forward pass.
    pub fn step_mixed(
        &mut self,
        opt: &mut Sgd,
        source: &[Labeled<'_>],
        anchors: &[Labeled<'_>],
        cfg: &TrainConfig,
        augmenter: &Augmenter,
        rng: &mut Rng,
    ) -> Result<f64> {
        let mixed: Vec<(Vec<f64>, usize)> = anchors
            .iter()
            .map(|&(x, y)| (augmenter.augment(x, rng), y))
            .collect();
        let batch: Vec<Labeled<'_>> = mixed.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
        self.step_supervised(opt, source, &batch, cfg)
    }

    pub fn evaluate(&self, samples: &[Labeled<'_>]) -> Result<Evaluation> {
        if samples.is_empty() {
            return Err(LadaError::data("no labeled samples to evaluate"));
        }
        let mut hits = vec![0usize; self.classes];
        let mut totals = vec![0usize; self.classes];
        for &(x, y) in samples {
            if y >= self.classes {
                return Err(LadaError::data(format!(
                    "label {y} outside 0..{}",
                    self.classes
                )));
            }
            totals[y] += 1;
            if self.predict(x) == y {
                hits[y] += 1;
            }
        }
        let per_class: Vec<Option<f64>> = hits
            .iter()
            .zip(&totals)
            .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
            .collect();
        let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
        Ok(Evaluation {
            accuracy: hits.iter().sum::<usize>() as f64 / samples.len() as f64,
            per_class_mean: defined.iter().sum::<f64>() / defined.len() as f64,
            per_class,
        })
    }

    /// `LADAMDL1`, mode byte (0 identity, 1 hidden), u32 d, u32 hidden width
    /// (0 for identity), u32 C, u64 parameter count, then the f64 parameters,
    /// all little-endian.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(33 + 8 * self.params.len());
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        let (mode, h) = match self.mode {
            Mode::Identity => (0u8, 0u32),
            Mode::Hidden(h) => (1u8, h as u32),
        };
        buf.push(mode);
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        buf.extend_from_slice(&h.to_le_bytes());
        buf.extend_from_slice(&(self.classes as u32).to_le_bytes());
        buf.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        let header = 8 + 1 + 4 + 4 + 4 + 8;
        if bytes.len() < header {
            return Err(LadaError::parse(
                format!("offset {}", bytes.len()),
                "truncated checkpoint header",
            ));
        }
        if &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(LadaError::parse(
                "offset 0",
                "bad magic, not a LADAMDL1 checkpoint",
            ));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let dim = u32_at(9);
        let h = u32_at(13);
        let classes = u32_at(17);
        let count = u64::from_le_bytes(bytes[21..29].try_into().unwrap()) as usize;
        let mode = match bytes[8] {
            0 => Mode::Identity,
            1 => Mode::Hidden(h),
            other => {
                return Err(LadaError::parse(
                    "offset 8",
                    format!("unknown mode byte {other}"),
                ))
            }
        };
        if bytes.len() != header + 8 * count {
            return Err(LadaError::parse(
                format!("offset {header}"),
                format!(
                    "expected {count} parameters, found {} bytes",
                    bytes.len() - header
                ),
            ));
        }
        let params = bytes[header..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_params(mode, dim, classes, params)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchor::Augmenter;
    use crate::rng::seeded;
    use rand::Rng as _;

    fn random_batch(rng: &mut Rng, n: usize, d: usize, c: usize) -> Vec<(Vec<f64>, usize)> {
        (0..n)
            .map(|_| {
                (
                    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect(),
                    rng.random_range(0..c),
                )
            })
            .collect()
    }

    fn borrow(b: &[(Vec<f64>, usize)]) -> Vec<Labeled<'_>> {
        b.iter().map(|(x, y)| (x.as_slice(), *y)).collect()
    }

    #[test]
    fn zero_head_gives_uniform_probs() {
        let m = Classifier::zeros(Mode::Identity, 3, 4).unwrap();
        let (_, p) = m.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn hand_softmax_equal_logits() {
        // rows (1,0) and (0,1), x = (3,3): equal logits
        let m = Classifier::from_params(Mode::Identity, 2, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
            .unwrap();
        let (e, p) = m.forward(&[3.0, 3.0]).unwrap();
        assert_eq!(e, vec![3.0, 3.0]);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn probabilities_are_normalized() {
        let mut rng = seeded(1);
        for mode in [Mode::Identity, Mode::Hidden(5)] {
            let m = Classifier::new(mode, 6, 4, &mut rng).unwrap();
            for (x, _) in random_batch(&mut rng, 50, 6, 4) {
                let (_, p) = m.forward(&x).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
            }
        }
    }

    #[test]
    fn forward_rejects_nan_and_wrong_length() {
        let m = Classifier::zeros(Mode::Identity, 2, 2).unwrap();
        assert!(matches!(
            m.forward(&[f64::NAN, 0.0]),
            Err(LadaError::Numeric(_))
        ));
        assert!(m.forward(&[0.0]).is_err());
    }

    #[test]
    fn cross_entropy_values() {
        assert_eq!(loss_ce(&[0.0, 1.0], 1), 0.0);
        assert!((loss_ce(&[0.25; 4], 2) - 4f64.ln()).abs() < 1e-12);
        assert!((loss_ce(&[0.25, 0.75], 0) - 1.386294).abs() < 1e-6);
        assert!((loss_ce(&[0.0, 1.0], 0) - 1e-12f64.ln().abs()).abs() < 1e-9);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut rng = seeded(2);
        let mut m = Classifier::new(Mode::Hidden(4), 3, 2, &mut rng).unwrap();
        let before = m.clone();
        let mut opt = Sgd::new(&m);
        let src = random_batch(&mut rng, 8, 3, 2);
        let tgt = random_batch(&mut rng, 4, 3, 2);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        for _ in 0..3 {
            m.step_supervised(&mut opt, &borrow(&src), &borrow(&tgt), &cfg)
                .unwrap();
        }
        assert_eq!(m, before);
    }

    #[test]
    fn duplicated_sample_doubles_its_contribution() {
        let mut rng = seeded(3);
        let m = Classifier::new(Mode::Hidden(3), 4, 3, &mut rng).unwrap();
        let b = random_batch(&mut rng, 2, 4, 3);
        let single = vec![b[0].clone()];
        let dup = vec![b[0].clone(), b[0].clone(), b[1].clone()];
        let (_, g1) = m.loss_and_grad(&borrow(&single), &[]).unwrap();
        let (_, g_other) = m.loss_and_grad(&borrow(&b[1..]), &[]).unwrap();
        let (_, g3) = m.loss_and_grad(&borrow(&dup), &[]).unwrap();
        for i in 0..g3.len() {
            let expect = (2.0 * g1[i] + g_other[i]) / 3.0;
            assert!((g3[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_source_batch_is_an_error() {
        let m = Classifier::zeros(Mode::Identity, 2, 2).unwrap();
        let x = [0.0, 1.0];
        assert!(m.loss_and_grad(&[], &[(&x, 0)]).is_err());
    }

    #[test]
    fn unit_beta_mixup_matches_plain_step() {
        let mut rng = seeded(4);
        let base = Classifier::new(Mode::Hidden(4), 3, 3, &mut rng).unwrap();
        let src = random_batch(&mut rng, 6, 3, 3);
        let anc = random_batch(&mut rng, 5, 3, 3);
        let cfg = TrainConfig::default();

        let mut a = base.clone();
        let mut opt_a = Sgd::new(&a);
        a.step_supervised(&mut opt_a, &borrow(&src), &borrow(&anc), &cfg)
            .unwrap();

        let mut b = base.clone();
        let mut opt_b = Sgd::new(&b);
        let aug = Augmenter::new(vec![1.0; 3], 0.5, 0.2, cfg.mixup_alpha, cfg.mixup_beta)
            .with_fixed_beta(1.0);
        b.step_mixed(
            &mut opt_b,
            &borrow(&src),
            &borrow(&anc),
            &cfg,
            &aug,
            &mut rng,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluate_counts() {
        // constant predictor for class 0
        let m = Classifier::from_params(Mode::Identity, 1, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let x = [0.0];
        let mut samples: Vec<Labeled<'_>> = vec![(&x, 0); 90];
        samples.extend(vec![(&x[..], 1); 10]);
        let ev = m.evaluate(&samples).unwrap();
        assert!((ev.accuracy - 0.9).abs() < 1e-12);
        assert!((ev.per_class_mean - 0.5).abs() < 1e-12);

        let balanced: Vec<Labeled<'_>> = (0..20).map(|i| (&x[..], i / 10)).collect();
        let ev = m.evaluate(&balanced).unwrap();
        assert_eq!((ev.accuracy, ev.per_class_mean), (0.5, 0.5));
        assert!(m.evaluate(&[]).is_err());
    }

    #[test]
    fn empty_classes_are_excluded_from_the_mean() {
        let m = Classifier::from_params(Mode::Identity, 1, 3, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
            .unwrap();
        let x = [0.0];
        let ev = m.evaluate(&[(&x, 0), (&x, 1)]).unwrap();
        assert_eq!(ev.per_class, vec![Some(1.0), Some(0.0), None]);
        assert_eq!(ev.per_class_mean, 0.5);
    }

    #[test]
    fn separable_toy_problem_is_learned() {
        let mut rng = seeded(5);
        let data: Vec<(Vec<f64>, usize)> = (0..40)
            .map(|i| {
                let c = i % 2;
                let s = if c == 0 { 1.0 } else { -1.0 };
                (
                    vec![s * rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0)],
                    c,
                )
            })
            .collect();
        let mut m = Classifier::new(Mode::Identity, 2, 2, &mut rng).unwrap();
        let mut opt = Sgd::new(&m);
        let cfg = TrainConfig::default();
        let batch = borrow(&data);
        for _ in 0..200 {
            for chunk in batch.chunks(cfg.batch_size) {
                m.step_supervised(&mut opt, chunk, &[], &cfg).unwrap();
            }
        }
        assert_eq!(m.evaluate(&batch).unwrap().accuracy, 1.0);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = seeded(6);
        for (i, mode) in [Mode::Identity, Mode::Hidden(7)].into_iter().enumerate() {
            let m = Classifier::new(mode, 5, 3, &mut rng).unwrap();
            let path = dir.path().join(format!("m{i}.bin"));
            m.save(&path).unwrap();
            assert_eq!(Classifier::load(&path).unwrap(), m);
            let bytes = fs::read(&path).unwrap();
            fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
            assert!(Classifier::load(&path).is_err());
        }
    }
}
