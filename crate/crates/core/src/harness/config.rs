//! Run configuration and its text format.
//!
//! The file is UTF-8, one `key = value` per line. `[section]` headers prefix
//! the keys that follow with `section.`; keys before the first header are
//! top-level. `#` starts a comment, blank lines are ignored. The same dotted
//! keys serve as command-line overrides (`train.lr=0.05`).
//!
//! ```text
//! seed = 3
//!
//! [data]
//! classes = 8
//! rsut_gamma = 6
//!
//! [active]
//! criterion = LAS
//! budget = 0.05
//!
//! [paa]
//! mode = laa
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::anchor::{PaaConfig, PaaMode};
use crate::dataio::SynthConfig;
use crate::error::{LadaError, Result};
use crate::model::{Mode, TrainConfig};
use crate::selection::{default_schedule, DatasetKind};

/// Parses the text format into `(dotted key, value)` pairs in file order.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut section = String::new();
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| {
                    LadaError::config(format!("line {}: unterminated section header", n + 1))
                })?
                .trim();
            if name.is_empty() {
                return Err(LadaError::config(format!(
                    "line {}: empty section name",
                    n + 1
                )));
            }
            section = name.to_ascii_lowercase();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| LadaError::config(format!("line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(LadaError::config(format!("line {}: missing key", n + 1)));
        }
        let full = if section.is_empty() {
            key
        } else {
            format!("{section}.{key}")
        };
        out.push((full, value.trim().to_string()));
    }
    Ok(out)
}

/// `key=value` override as given on a command line.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| LadaError::config(format!("override {s:?} is not key=value")))?;
    Ok((k.trim().to_ascii_lowercase(), v.trim().to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SynthConfig),
    File(PathBuf),
}

/// Component switches for ablations. Turning anchor augmentation off also turns off
/// mixing; class balancing only matters while anchors are augmented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ablation {
    pub div_sel: bool,
    pub anchor_aug: bool,
    pub mixup: bool,
    pub cbr: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation {
            div_sel: true,
            anchor_aug: true,
            mixup: true,
            cbr: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSource,
    /// Seed of the synthetic generator; the master seed when unset.
    pub data_seed: Option<u64>,
    /// Source perturbation scale `u`; 0 leaves the source untouched.
    pub perturb: f64,
    /// Hidden width of the trainable feature layer; 0 keeps features fixed.
    pub hidden: usize,
    pub train: TrainConfig,
    pub pretrain_epochs: usize,
    pub adapt_epochs: usize,
    /// Model updates per epoch; 0 means `ceil(n_target / batch_size)`.
    pub iterations: usize,
    pub criterion: String,
    pub budget: f64,
    pub rounds: usize,
    pub schedule: Vec<usize>,
    /// Neighborhood size for the selection scores.
    pub k: usize,
    /// Overrides the oversampling ratio derived from the budget.
    pub oversample: Option<usize>,
    pub huge_per_class: bool,
    pub paa: PaaConfig,
    pub ablation: Ablation,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            data: DataSource::Synthetic(SynthConfig::default()),
            data_seed: None,
            perturb: 0.0,
            hidden: 0,
            train: TrainConfig::default(),
            pretrain_epochs: 10,
            adapt_epochs: 30,
            iterations: 0,
            criterion: "LAS".into(),
            budget: 0.05,
            rounds: 5,
            schedule: default_schedule(5),
            k: 10,
            oversample: None,
            huge_per_class: false,
            paa: PaaConfig::default(),
            ablation: Ablation::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| LadaError::config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(LadaError::config(format!(
            "{key}: expected true or false, got {v:?}"
        ))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply(&parse_config_text(text)?)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            LadaError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::from_text(&text)?;
        if let DataSource::File(p) = &cfg.data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.data = DataSource::File(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    fn synth_mut(&mut self, key: &str) -> Result<&mut SynthConfig> {
        match &mut self.data {
            DataSource::Synthetic(s) => Ok(s),
            DataSource::File(_) => Err(LadaError::config(format!(
                "{key} applies to synthetic data only"
            ))),
        }
    }

    /// Sets one dotted key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase();
        let k = key.as_str();
        match k {
            "seed" => self.seed = parse_num(k, v)?,
            "data.path" => self.data = DataSource::File(PathBuf::from(v)),
            "data.seed" => self.data_seed = Some(parse_num(k, v)?),
            "data.perturb" => self.perturb = parse_num(k, v)?,
            "data.classes" => self.synth_mut(k)?.num_classes = parse_num(k, v)?,
            "data.dim" => self.synth_mut(k)?.dim = parse_num(k, v)?,
            "data.source_per_class" => self.synth_mut(k)?.source_per_class = parse_num(k, v)?,
            "data.target_per_class" => self.synth_mut(k)?.target_per_class = parse_num(k, v)?,
            "data.radius" => self.synth_mut(k)?.radius = parse_num(k, v)?,
            "data.within_std" => self.synth_mut(k)?.within_std = parse_num(k, v)?,
            "data.rotation" => self.synth_mut(k)?.rotation = parse_num(k, v)?,
            "data.translation" => self.synth_mut(k)?.translation = parse_num(k, v)?,
            "data.cov_ratio" => self.synth_mut(k)?.cov_ratio = parse_num(k, v)?,
            "data.rsut_gamma" => self.synth_mut(k)?.rsut_gamma = parse_num(k, v)?,
            "model.hidden" => self.hidden = parse_num(k, v)?,
            "train.lr" => self.train.learning_rate = parse_num(k, v)?,
            "train.momentum" => self.train.momentum = parse_num(k, v)?,
            "train.batch" => self.train.batch_size = parse_num(k, v)?,
            "train.mixup_alpha" => self.train.mixup_alpha = parse_num(k, v)?,
            "train.mixup_beta" => self.train.mixup_beta = parse_num(k, v)?,
            "train.pretrain_epochs" => self.pretrain_epochs = parse_num(k, v)?,
            "train.adapt_epochs" => self.adapt_epochs = parse_num(k, v)?,
            "train.iterations" => self.iterations = parse_num(k, v)?,
            "active.criterion" => self.criterion = v.to_string(),
            "active.budget" => self.budget = parse_num(k, v)?,
            "active.rounds" => {
                self.rounds = parse_num(k, v)?;
                self.schedule = (0..self.rounds)
                    .map(|r| self.pretrain_epochs + 2 * r)
                    .collect();
            }
            "active.schedule" => self.schedule = parse_list(k, v)?,
            "active.k" => self.k = parse_num(k, v)?,
            "active.oversample" => {
                self.oversample = match v.to_ascii_lowercase().as_str() {
                    "auto" | "" => None,
                    _ => Some(parse_num(k, v)?),
                }
            }
            "active.huge_per_class" => self.huge_per_class = parse_bool(k, v)?,
            "paa.mode" => self.paa.mode = PaaMode::parse(v)?,
            "paa.tau" => self.paa.tau = parse_num(k, v)?,
            "paa.k" => self.paa.k = parse_num(k, v)?,
            "paa.noise" => self.paa.noise = parse_num(k, v)?,
            "paa.dropout" => self.paa.dropout = parse_num(k, v)?,
            "ablation.div_sel" => self.ablation.div_sel = parse_bool(k, v)?,
            "ablation.anchor_aug" => self.ablation.anchor_aug = parse_bool(k, v)?,
            "ablation.mixup" => self.ablation.mixup = parse_bool(k, v)?,
            "ablation.cbr" => self.ablation.cbr = parse_bool(k, v)?,
            _ => return Err(LadaError::config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        if !(self.perturb.is_finite() && self.perturb >= 0.0) {
            return Err(LadaError::config("data.perturb must be >= 0"));
        }
        self.train.validate()?;
        self.paa.validate()?;
        if self.k == 0 {
            return Err(LadaError::config("active.k must be positive"));
        }
        if self.adapt_epochs == 0 {
            return Err(LadaError::config(
                "at least one adaptation epoch is required",
            ));
        }
        if self.schedule.len() != self.rounds {
            return Err(LadaError::config(format!(
                "active.schedule lists {} epochs for {} rounds",
                self.schedule.len(),
                self.rounds
            )));
        }
        let end = self.pretrain_epochs + self.adapt_epochs;
        if let Some(&e) = self
            .schedule
            .iter()
            .find(|&&e| e < self.pretrain_epochs || e >= end)
        {
            return Err(LadaError::config(format!(
                "query epoch {e} falls outside the adaptation epochs {}..{end}",
                self.pretrain_epochs
            )));
        }
        if self.schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LadaError::config(
                "active.schedule must be strictly increasing",
            ));
        }
        Ok(())
    }

    /// PAA mode after the ablation switches.
    pub fn effective_paa_mode(&self) -> PaaMode {
        if self.ablation.anchor_aug {
            self.paa.mode
        } else {
            PaaMode::Off
        }
    }

    pub fn effective_mixup(&self) -> bool {
        self.ablation.mixup && self.effective_paa_mode() != PaaMode::Off
    }

    pub fn effective_paa(&self) -> PaaConfig {
        let mode = self.effective_paa_mode();
        PaaConfig {
            mode,
            cbr: self.ablation.cbr && mode != PaaMode::Off,
            ..self.paa.clone()
        }
    }

    /// LAS without the diversity step ranks raw local inconsistency.
    pub fn effective_criterion(&self) -> String {
        if !self.ablation.div_sel && self.criterion.eq_ignore_ascii_case("LAS") {
            "LAS-noDiv".into()
        } else {
            self.criterion.clone()
        }
    }

    pub fn model_mode(&self) -> Mode {
        if self.hidden == 0 {
            Mode::Identity
        } else {
            Mode::Hidden(self.hidden)
        }
    }

    pub fn dataset_kind(&self) -> DatasetKind {
        if self.huge_per_class {
            DatasetKind::HugePerClass
        } else {
            DatasetKind::Standard
        }
    }

    /// Renders every key in the text format; `from_text` of the result
    /// reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let b = |x: bool| if x { "true" } else { "false" };
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "\n[data]");
        match &self.data {
            DataSource::File(p) => {
                let _ = writeln!(s, "path = {}", p.display());
            }
            DataSource::Synthetic(d) => {
                let _ = writeln!(s, "classes = {}", d.num_classes);
                let _ = writeln!(s, "dim = {}", d.dim);
                let _ = writeln!(s, "source_per_class = {}", d.source_per_class);
                let _ = writeln!(s, "target_per_class = {}", d.target_per_class);
                let _ = writeln!(s, "radius = {}", d.radius);
                let _ = writeln!(s, "within_std = {}", d.within_std);
                let _ = writeln!(s, "rotation = {}", d.rotation);
                let _ = writeln!(s, "translation = {}", d.translation);
                let _ = writeln!(s, "cov_ratio = {}", d.cov_ratio);
                let _ = writeln!(s, "rsut_gamma = {}", d.rsut_gamma);
            }
        }
        if let Some(seed) = self.data_seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        let _ = writeln!(s, "perturb = {}", self.perturb);
        let _ = writeln!(s, "\n[model]\nhidden = {}", self.hidden);
        let t = &self.train;
        let _ = writeln!(s, "\n[train]");
        let _ = writeln!(
            s,
            "lr = {}\nmomentum = {}\nbatch = {}",
            t.learning_rate, t.momentum, t.batch_size
        );
        let _ = writeln!(
            s,
            "mixup_alpha = {}\nmixup_beta = {}",
            t.mixup_alpha, t.mixup_beta
        );
        let _ = writeln!(
            s,
            "pretrain_epochs = {}\nadapt_epochs = {}",
            self.pretrain_epochs, self.adapt_epochs
        );
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "\n[active]");
        let _ = writeln!(
            s,
            "criterion = {}\nbudget = {}\nrounds = {}",
            self.criterion, self.budget, self.rounds
        );
        let sched: Vec<String> = self.schedule.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(s, "schedule = {}", sched.join(","));
        let _ = writeln!(s, "k = {}", self.k);
        match self.oversample {
            Some(m) => {
                let _ = writeln!(s, "oversample = {m}");
            }
            None => {
                let _ = writeln!(s, "oversample = auto");
            }
        }
        let _ = writeln!(s, "huge_per_class = {}", b(self.huge_per_class));
        let p = &self.paa;
        let _ = writeln!(s, "\n[paa]");
        let _ = writeln!(
            s,
            "mode = {}\ntau = {}\nk = {}",
            p.mode.as_str(),
            p.tau,
            p.k
        );
        let _ = writeln!(s, "noise = {}\ndropout = {}", p.noise, p.dropout);
        let a = &self.ablation;
        let _ = writeln!(s, "\n[ablation]");
        let _ = writeln!(
            s,
            "div_sel = {}\nanchor_aug = {}",
            b(a.div_sel),
            b(a.anchor_aug)
        );
        let _ = writeln!(s, "mixup = {}\ncbr = {}", b(a.mixup), b(a.cbr));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_prefix_keys() {
        let pairs =
            parse_config_text("seed = 4\n# note\n[Train]\nlr = 0.1 # inline\n\n[paa]\nmode=raa\n")
                .unwrap();
        assert_eq!(
            pairs,
            vec![
                ("seed".to_string(), "4".to_string()),
                ("train.lr".to_string(), "0.1".to_string()),
                ("paa.mode".to_string(), "raa".to_string()),
            ]
        );
    }

    #[test]
    fn syntax_errors_name_the_line() {
        let err = parse_config_text("seed = 1\n[data\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = parse_config_text("seed 1\n").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        assert!(matches!(
            RunConfig::from_text("[train]\nspeed = 3\n"),
            Err(LadaError::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_text("[train]\nlr = fast\n"),
            Err(LadaError::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_text("[paa]\nmode = maybe\n"),
            Err(LadaError::Config(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::from_text(
            "seed = 9\n[active]\ncriterion = ENT\noversample = 4\n[ablation]\ncbr = false\n",
        )
        .unwrap();
        cfg.train.learning_rate = 0.037;
        let back = RunConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn ablation_switches_cascade() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.effective_criterion(), "LAS");
        cfg.ablation.anchor_aug = false;
        cfg.ablation.div_sel = false;
        assert_eq!(cfg.effective_paa_mode(), PaaMode::Off);
        assert!(!cfg.effective_mixup());
        assert!(!cfg.effective_paa().cbr);
        assert_eq!(cfg.effective_criterion(), "LAS-noDiv");
    }

    #[test]
    fn schedule_must_fit_the_adaptation_window() {
        let mut cfg = RunConfig::default();
        cfg.validate().unwrap();
        cfg.schedule = vec![5, 12, 14, 16, 18];
        assert!(cfg.validate().is_err());
        cfg.schedule = vec![10, 12];
        assert!(cfg.validate().is_err());
        cfg.set("active.rounds", "2").unwrap();
        assert_eq!(cfg.schedule, vec![10, 12]);
        cfg.validate().unwrap();
    }

    #[test]
    fn overrides_split_on_first_equals() {
        assert_eq!(
            parse_override("data.path=a=b").unwrap(),
            ("data.path".into(), "a=b".into())
        );
        assert!(parse_override("novalue").is_err());
    }
}
