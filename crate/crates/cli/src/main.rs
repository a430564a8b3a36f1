use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lada::dataio::{gen_synthetic, load_embeddings, write_embeddings};
use lada::harness::{
    load_dataset, parse_override, read_finals, run_experiment, run_perturbation_sweep, run_sweep,
    summarize, write_finals, write_perturbation, write_run, write_summary, DataSource, RunConfig,
    Variant,
};
use lada::model::Classifier;
use lada::rng::{self, Stream};
use lada::selection::{plan_budget, select, CriterionRegistry, SelectionContext};
use lada::LadaError;

#[derive(Parser)]
#[command(
    name = "lada",
    version,
    about = "Active domain adaptation with local context-aware selection"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    criterion: Option<String>,
    /// off, raa or laa.
    #[arg(long)]
    paa: Option<String>,
    /// Label budget as a fraction of the target set.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Extra `section.key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let mut pairs: Vec<(String, String)> = Vec::new();
        if let Some(s) = self.seed {
            pairs.push(("seed".into(), s.to_string()));
        }
        if let Some(c) = &self.criterion {
            pairs.push(("active.criterion".into(), c.clone()));
        }
        if let Some(m) = &self.paa {
            pairs.push(("paa.mode".into(), m.clone()));
        }
        if let Some(b) = self.budget {
            pairs.push(("active.budget".into(), b.to_string()));
        }
        if let Some(r) = self.rounds {
            pairs.push(("active.rounds".into(), r.to_string()));
        }
        for o in &self.overrides {
            pairs.push(parse_override(o)?);
        }
        cfg.apply(&pairs)?;
        Ok(cfg)
    }

    fn out(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic two-domain dataset described by the config.
    GenData {
        #[command(flatten)]
        common: Common,
    },
    /// Score unlabeled target samples with a criterion.
    Score {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: ModelInput,
    },
    /// Pick one round's query set.
    Select {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: ModelInput,
        /// 0-based round number.
        #[arg(long, default_value_t = 0)]
        round: usize,
    },
    /// One full experiment.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Several variants over several seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Seeds as `a..b` or a comma list.
        #[arg(long, default_value = "0..3")]
        seeds: String,
        /// `name` or `name:key=value,key=value`; repeatable.
        #[arg(long = "variant", required = true)]
        variants: Vec<String>,
        /// Variant the others are compared with (default: the first).
        #[arg(long)]
        baseline: Option<String>,
    },
    /// RAA against LAA under growing source perturbation.
    Perturb {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0..10")]
        seeds: String,
        /// Comma-separated perturbation scales.
        #[arg(long, default_value = "0,0.5,1")]
        u: String,
    },
    /// Recompute a sweep report from its finals.csv.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        finals: PathBuf,
        #[arg(long)]
        baseline: String,
    },
}

#[derive(Args, Clone)]
struct ModelInput {
    /// Embeddings file (.bin or .csv); defaults to the config's dataset.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Model checkpoint written by `run`.
    #[arg(long)]
    model: PathBuf,
    /// CSV with an `id` column of already-queried target samples.
    #[arg(long)]
    queried: Option<PathBuf>,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        (a..b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse())
            .collect::<std::result::Result<_, _>>()?
    };
    if seeds.is_empty() {
        bail!(LadaError::config(format!("seed list {s:?} is empty")));
    }
    Ok(seeds)
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| LadaError::config(format!("bad number {x:?} in {s:?}")).into())
        })
        .collect()
}

fn read_queried(path: &Path) -> Result<BTreeSet<u64>> {
    let mut r = csv::Reader::from_path(path).map_err(LadaError::from)?;
    let col = r
        .headers()
        .map_err(LadaError::from)?
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| LadaError::parse(path.display().to_string(), "no `id` column"))?;
    let mut ids = BTreeSet::new();
    for rec in r.records() {
        let rec = rec.map_err(LadaError::from)?;
        let id = rec[col].parse().map_err(|_| {
            LadaError::parse(
                path.display().to_string(),
                format!("bad id {:?}", &rec[col]),
            )
        })?;
        ids.insert(id);
    }
    Ok(ids)
}

/// Model outputs for the target samples not yet queried.
fn context(cfg: &RunConfig, input: &ModelInput) -> Result<(SelectionContext, usize)> {
    let ds = match &input.data {
        Some(p) => load_embeddings(p)?,
        None => load_dataset(cfg)?,
    };
    let model = Classifier::load(&input.model)?;
    if model.dim() != ds.dim() || model.num_classes() != ds.num_classes() {
        bail!(LadaError::data(format!(
            "model expects d={} C={} but the data has d={} C={}",
            model.dim(),
            model.num_classes(),
            ds.dim(),
            ds.num_classes()
        )));
    }
    let queried = match &input.queried {
        Some(p) => read_queried(p)?,
        None => BTreeSet::new(),
    };
    let unlabeled: Vec<(u64, &[f64])> = ds
        .target()
        .iter()
        .filter(|s| !queried.contains(&s.id))
        .map(|s| (s.id, s.feature.as_slice()))
        .collect();
    let labeled: Vec<(u64, &[f64])> = ds
        .target()
        .iter()
        .filter(|s| queried.contains(&s.id))
        .map(|s| (s.id, s.feature.as_slice()))
        .collect();
    let plan = plan_budget(
        ds.target().len(),
        cfg.budget,
        cfg.rounds,
        cfg.dataset_kind(),
    )?;
    let oversample = cfg.oversample.unwrap_or(plan.oversample);
    let ctx = SelectionContext::from_model(&model, &unlabeled, &labeled, cfg.k, oversample)?;
    Ok((ctx, ds.target().len()))
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(LadaError::from)?;
    w.write_record(header).map_err(LadaError::from)?;
    for row in rows {
        w.write_record(&row).map_err(LadaError::from)?;
    }
    w.flush()?;
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData { common } => {
            let cfg = common.config()?;
            let DataSource::Synthetic(mut synth) = cfg.data.clone() else {
                bail!(LadaError::config(
                    "gen-data needs a synthetic data section, not data.path"
                ));
            };
            synth.seed = cfg.data_seed.unwrap_or(cfg.seed);
            let ds = gen_synthetic(&synth)?;
            let out = common.out("data.bin");
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            write_embeddings(&ds, &out)?;
            println!(
                "wrote {} source and {} target samples to {}",
                ds.source().len(),
                ds.target().len(),
                out.display()
            );
        }
        Command::Score { common, input } => {
            let cfg = common.config()?;
            let (ctx, n_target) = context(&cfg, &input)?;
            let criterion = CriterionRegistry::standard().get(&cfg.effective_criterion())?;
            let mut rng = rng::stream(cfg.seed, Stream::Select);
            let out = common.out("scores.csv");
            let name = criterion.name();
            match criterion.scores(&ctx, &mut rng)? {
                Some(s) => write_csv(
                    &out,
                    &["id", "criterion", "score"],
                    s.ids
                        .iter()
                        .zip(&s.scores)
                        .map(|(id, v)| vec![id.to_string(), name.to_string(), v.to_string()]),
                )?,
                None => {
                    // set-valued strategies: 1 for members of a first-round pick
                    let plan = plan_budget(n_target, cfg.budget, cfg.rounds, cfg.dataset_kind())?;
                    let picked: BTreeSet<u64> = criterion
                        .select(&ctx, plan.round_size(0), &mut rng)?
                        .into_iter()
                        .collect();
                    write_csv(
                        &out,
                        &["id", "criterion", "score"],
                        ctx.ids().iter().map(|id| {
                            let member = u8::from(picked.contains(id));
                            vec![id.to_string(), name.to_string(), member.to_string()]
                        }),
                    )?
                }
            }
            println!(
                "scored {} samples with {} into {}",
                ctx.len(),
                criterion.name(),
                out.display()
            );
        }
        Command::Select {
            common,
            input,
            round,
        } => {
            let cfg = common.config()?;
            let (ctx, n_target) = context(&cfg, &input)?;
            let criterion = CriterionRegistry::standard().get(&cfg.effective_criterion())?;
            let plan = plan_budget(n_target, cfg.budget, cfg.rounds, cfg.dataset_kind())?;
            let plan = plan
                .clone()
                .with_oversample(cfg.oversample.unwrap_or(plan.oversample));
            let mut rng = rng::stream(cfg.seed, Stream::Select);
            let ids = select(criterion.as_ref(), &ctx, &plan, round, &mut rng)?;
            let out = common.out("queries.csv");
            write_csv(
                &out,
                &["round", "id", "criterion"],
                ids.iter().map(|id| {
                    vec![
                        round.to_string(),
                        id.to_string(),
                        criterion.name().to_string(),
                    ]
                }),
            )?;
            println!("selected {} ids into {}", ids.len(), out.display());
        }
        Command::Run { common } => {
            let cfg = common.config()?;
            let out = run_experiment(&cfg)?;
            let dir = common.out("run");
            write_run(&dir, &out)?;
            let last = out.final_metrics();
            println!(
                "final accuracy {:.4} (per-class {:.4}) with {} queried labels; outputs in {}",
                last.accuracy,
                last.per_class_accuracy,
                last.n_queried,
                dir.display()
            );
        }
        Command::Sweep {
            common,
            seeds,
            variants,
            baseline,
        } => {
            let cfg = common.config()?;
            let seeds = parse_seeds(&seeds)?;
            let variants = variants
                .iter()
                .map(|v| Variant::parse(v))
                .collect::<lada::Result<Vec<_>>>()?;
            let report = run_sweep(&cfg, &seeds, &variants, baseline.as_deref())?;
            let dir = common.out("sweep");
            fs::create_dir_all(&dir)?;
            write_finals(&dir.join("finals.csv"), &report.finals)?;
            write_summary(&dir.join("report.csv"), &report.summary)?;
            for r in &report.summary {
                let ci =
                    r.ci.map(|c| {
                        format!(
                            " diff {:+.4} [{:+.4}, {:+.4}]",
                            c.mean_diff, c.lower, c.upper
                        )
                    })
                    .unwrap_or_default();
                println!("{:<16} mean {:.4} std {:.4}{ci}", r.variant, r.mean, r.std);
            }
        }
        Command::Perturb { common, seeds, u } => {
            let cfg = common.config()?;
            let report = run_perturbation_sweep(&cfg, &parse_floats(&u)?, &parse_seeds(&seeds)?)?;
            let dir = common.out("perturb");
            write_perturbation(&dir, &report)?;
            for s in &report.summary {
                println!(
                    "u={:<6} {} mean {:.4} std {:.4}",
                    s.u, s.mode, s.mean, s.std
                );
            }
            println!("verdict: {}", report.verdict.as_str());
        }
        Command::Report {
            common,
            finals,
            baseline,
        } => {
            let rows = read_finals(&finals)?;
            let seed = common.seed.unwrap_or(0);
            let summary = summarize(&rows, &baseline, seed)?;
            let out = common.out("report.csv");
            write_summary(&out, &summary)?;
            println!("wrote {} summary rows to {}", summary.len(), out.display());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<LadaError>() {
            return e.exit_code() as u8;
        }
        if cause.downcast_ref::<std::num::ParseIntError>().is_some() {
            return 2;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command).context("lada failed") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
