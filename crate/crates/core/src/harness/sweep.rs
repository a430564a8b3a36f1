use rayon::prelude::*;

use super::config::{parse_override, RunConfig};
use super::run::run_experiment;
use crate::anchor::PaaMode;
use crate::error::{LadaError, Result};
use crate::rng::{self, Stream};
use crate::stats::{mean, paired_bootstrap_ci, std_dev, PairedCi, BOOTSTRAP_RESAMPLES};

/// A named set of config overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: String,
    pub overrides: Vec<(String, String)>,
}

impl Variant {
    pub fn new(name: impl Into<String>, overrides: &[(&str, &str)]) -> Self {
        Variant {
            name: name.into(),
            overrides: overrides
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    /// `name` or `name:key=value,key=value`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let name = name.trim();
        if name.is_empty() {
            return Err(LadaError::config(format!("variant {spec:?} has no name")));
        }
        let overrides = rest
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(parse_override)
            .collect::<Result<_>>()?;
        Ok(Variant {
            name: name.to_string(),
            overrides,
        })
    }
}

/// Final-epoch outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalRow {
    pub variant: String,
    pub seed: u64,
    pub accuracy: f64,
    pub per_class_accuracy: f64,
    /// Largest over smallest class share in the final anchor set.
    pub anchor_share_ratio: f64,
    pub n_queried: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: String,
    pub seeds: usize,
    pub mean: f64,
    pub std: f64,
    pub per_class_mean: f64,
    pub baseline: String,
    /// Paired interval for `variant - baseline`; needs two or more seeds.
    pub ci: Option<PairedCi>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub finals: Vec<FinalRow>,
    pub summary: Vec<SummaryRow>,
}

impl SweepReport {
    pub fn row(&self, variant: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.variant == variant)
    }

    pub fn values(&self, variant: &str, pick: impl Fn(&FinalRow) -> f64) -> Vec<f64> {
        self.finals
            .iter()
            .filter(|r| r.variant == variant)
            .map(pick)
            .collect()
    }
}

fn run_final(variant: &str, cfg: &RunConfig) -> Result<FinalRow> {
    let out = run_experiment(cfg)?;
    let last = out.final_metrics();
    log::info!("{variant} seed {}: accuracy {:.4}", cfg.seed, last.accuracy);
    Ok(FinalRow {
        variant: variant.to_string(),
        seed: cfg.seed,
        accuracy: last.accuracy,
        per_class_accuracy: last.per_class_accuracy,
        anchor_share_ratio: last.anchor.share_ratio(),
        n_queried: last.n_queried,
    })
}

/// Runs every (label, config) pair on the rayon pool; results keep the input
/// order. All configs are validated before any run starts.
fn run_all(jobs: &[(String, RunConfig)]) -> Result<Vec<FinalRow>> {
    for (_, cfg) in jobs {
        cfg.validate()?;
    }
    jobs.par_iter()
        .map(|(name, cfg)| run_final(name, cfg))
        .collect()
}

/// Per-variant mean and spread, with paired bootstrap intervals against
/// `baseline`. Rows are paired by seed.
pub fn summarize(finals: &[FinalRow], baseline: &str, report_seed: u64) -> Result<Vec<SummaryRow>> {
    let mut names: Vec<&str> = Vec::new();
    for r in finals {
        if !names.contains(&r.variant.as_str()) {
            names.push(&r.variant);
        }
    }
    if !names.contains(&baseline) {
        return Err(LadaError::config(format!(
            "baseline variant {baseline:?} is not in the sweep"
        )));
    }
    let by_seed = |name: &str| {
        let mut v: Vec<&FinalRow> = finals.iter().filter(|r| r.variant == name).collect();
        v.sort_by_key(|r| r.seed);
        v
    };
    let base = by_seed(baseline);
    let mut rng = rng::stream(report_seed, Stream::Report);
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let rows = by_seed(name);
        let acc: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
        let pcm: Vec<f64> = rows.iter().map(|r| r.per_class_accuracy).collect();
        if rows.len() != base.len() || rows.iter().zip(&base).any(|(a, b)| a.seed != b.seed) {
            return Err(LadaError::data(format!(
                "variant {name:?} and baseline {baseline:?} were not run on the same seeds"
            )));
        }
        let ci = if rows.len() >= 2 {
            let base_acc: Vec<f64> = base.iter().map(|r| r.accuracy).collect();
            Some(paired_bootstrap_ci(
                &acc,
                &base_acc,
                BOOTSTRAP_RESAMPLES,
                &mut rng,
            )?)
        } else {
            None
        };
        out.push(SummaryRow {
            variant: name.to_string(),
            seeds: rows.len(),
            mean: mean(&acc),
            std: std_dev(&acc),
            per_class_mean: mean(&pcm),
            baseline: baseline.to_string(),
            ci,
        });
    }
    Ok(out)
}

/// Every variant on every seed; the baseline defaults to the first variant.
pub fn run_sweep(
    base: &RunConfig,
    seeds: &[u64],
    variants: &[Variant],
    baseline: Option<&str>,
) -> Result<SweepReport> {
    if variants.is_empty() || seeds.is_empty() {
        return Err(LadaError::config(
            "a sweep needs at least one variant and one seed",
        ));
    }
    let mut jobs = Vec::with_capacity(variants.len() * seeds.len());
    for v in variants {
        let mut cfg = base.clone();
        cfg.apply(&v.overrides)?;
        for &seed in seeds {
            let mut c = cfg.clone();
            c.seed = seed;
            jobs.push((v.name.clone(), c));
        }
    }
    let finals = run_all(&jobs)?;
    let baseline = baseline.unwrap_or(&variants[0].name);
    let summary = summarize(&finals, baseline, base.seed)?;
    Ok(SweepReport { finals, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    LaaBetter,
    RaaBetter,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::LaaBetter => "laa-better",
            Verdict::RaaBetter => "raa-better",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbRun {
    pub u: f64,
    pub mode: String,
    pub seed: u64,
    pub accuracy: f64,
    pub per_class_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbSummary {
    pub u: f64,
    pub mode: String,
    pub seeds: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbReport {
    pub runs: Vec<PerturbRun>,
    pub summary: Vec<PerturbSummary>,
    pub raa_non_increasing: bool,
    pub laa_non_increasing: bool,
    pub largest_u: f64,
    /// LAA minus RAA at the largest `u`.
    pub gap: Option<PairedCi>,
    pub verdict: Verdict,
}

impl PerturbReport {
    pub fn mean_at(&self, u: f64, mode: PaaMode) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.u == u && s.mode == mode.as_str())
            .map(|s| s.mean)
    }
}

/// RAA and LAA on sources perturbed by each `u`, over `seeds`.
pub fn run_perturbation_sweep(
    base: &RunConfig,
    u_values: &[f64],
    seeds: &[u64],
) -> Result<PerturbReport> {
    if !base.effective_criterion().eq_ignore_ascii_case("LAS") {
        return Err(LadaError::config(
            "the perturbation sweep expects LAS selection",
        ));
    }
    if u_values.is_empty() || seeds.is_empty() {
        return Err(LadaError::config(
            "the perturbation sweep needs u values and seeds",
        ));
    }
    let modes = [PaaMode::Raa, PaaMode::Laa];
    let mut jobs = Vec::new();
    let mut keys = Vec::new();
    for &u in u_values {
        for mode in modes {
            for &seed in seeds {
                let mut c = base.clone();
                c.perturb = u;
                c.paa.mode = mode;
                c.ablation.anchor_aug = true;
                c.seed = seed;
                jobs.push((format!("{}@{u}", mode.as_str()), c));
                keys.push((u, mode));
            }
        }
    }
    let finals = run_all(&jobs)?;
    let runs: Vec<PerturbRun> = finals
        .iter()
        .zip(&keys)
        .map(|(f, &(u, mode))| PerturbRun {
            u,
            mode: mode.as_str().to_string(),
            seed: f.seed,
            accuracy: f.accuracy,
            per_class_accuracy: f.per_class_accuracy,
        })
        .collect();

    let accs = |u: f64, mode: PaaMode| -> Vec<f64> {
        runs.iter()
            .filter(|r| r.u == u && r.mode == mode.as_str())
            .map(|r| r.accuracy)
            .collect()
    };
    let mut summary = Vec::new();
    for &u in u_values {
        for mode in modes {
            let a = accs(u, mode);
            summary.push(PerturbSummary {
                u,
                mode: mode.as_str().to_string(),
                seeds: a.len(),
                mean: mean(&a),
                std: std_dev(&a),
            });
        }
    }
    let mut sorted_u = u_values.to_vec();
    sorted_u.sort_by(f64::total_cmp);
    sorted_u.dedup();
    let non_increasing = |mode: PaaMode| {
        sorted_u
            .windows(2)
            .all(|w| mean(&accs(w[1], mode)) <= mean(&accs(w[0], mode)))
    };
    let largest_u = *sorted_u.last().expect("non-empty");
    let gap = if seeds.len() >= 2 {
        let mut rng = rng::stream(base.seed, Stream::Report);
        Some(paired_bootstrap_ci(
            &accs(largest_u, PaaMode::Laa),
            &accs(largest_u, PaaMode::Raa),
            BOOTSTRAP_RESAMPLES,
            &mut rng,
        )?)
    } else {
        None
    };
    let verdict = match gap {
        Some(ci) if ci.excludes_zero() && ci.mean_diff > 0.0 => Verdict::LaaBetter,
        Some(ci) if ci.excludes_zero() => Verdict::RaaBetter,
        _ => Verdict::Inconclusive,
    };
    let raa_non_increasing = non_increasing(PaaMode::Raa);
    let laa_non_increasing = non_increasing(PaaMode::Laa);
    Ok(PerturbReport {
        runs,
        summary,
        raa_non_increasing,
        laa_non_increasing,
        largest_u,
        gap,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(variant: &str, seed: u64, accuracy: f64) -> FinalRow {
        FinalRow {
            variant: variant.into(),
            seed,
            accuracy,
            per_class_accuracy: accuracy,
            anchor_share_ratio: 1.0,
            n_queried: 0,
        }
    }

    #[test]
    fn variant_spec_parsing() {
        let v = Variant::parse("noCBR:ablation.cbr=false, paa.mode=raa").unwrap();
        assert_eq!(v.name, "noCBR");
        assert_eq!(v.overrides.len(), 2);
        assert_eq!(Variant::parse("plain").unwrap().overrides, vec![]);
        assert!(Variant::parse(":a=b").is_err());
        assert!(Variant::parse("x:novalue").is_err());
    }

    #[test]
    fn variant_against_itself() {
        let finals: Vec<FinalRow> = (0..5).map(|s| row("a", s, 0.5 + 0.01 * s as f64)).collect();
        let s = summarize(&finals, "a", 0).unwrap();
        let ci = s[0].ci.unwrap();
        assert_eq!(ci.mean_diff, 0.0);
        assert!(ci.lower <= 0.0 && ci.upper >= 0.0);
    }

    #[test]
    fn constant_metrics_have_zero_spread() {
        let finals: Vec<FinalRow> = (0..4).map(|s| row("a", s, 0.7)).collect();
        assert_eq!(summarize(&finals, "a", 0).unwrap()[0].std, 0.0);
    }

    #[test]
    fn mismatched_seeds_are_rejected() {
        let mut finals: Vec<FinalRow> = (0..3).map(|s| row("a", s, 0.7)).collect();
        finals.extend((0..2).map(|s| row("b", s, 0.6)));
        assert!(matches!(
            summarize(&finals, "a", 0),
            Err(LadaError::Data(_))
        ));
        assert!(matches!(
            summarize(&finals, "zzz", 0),
            Err(LadaError::Config(_))
        ));
    }

    #[test]
    fn single_seed_has_no_interval() {
        let finals = vec![row("a", 0, 0.7), row("b", 0, 0.6)];
        let s = summarize(&finals, "a", 0).unwrap();
        assert!(s.iter().all(|r| r.ci.is_none()));
    }
}
