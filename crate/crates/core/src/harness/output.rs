//! CSV files written by runs and sweeps. Floats use Rust's shortest
//! round-trip formatting, so identical runs give identical bytes.

use std::fs;
use std::path::Path;

use super::run::{AnchorRow, MetricsRow, QueryRow, RunOutput};
use super::sweep::{FinalRow, PerturbReport, SummaryRow};
use crate::error::{LadaError, Result};

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_rows<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl Iterator<Item = [String; N]>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_rows(
        path,
        [
            "seed",
            "round",
            "epoch",
            "criterion",
            "paa_mode",
            "accuracy",
            "per_class_accuracy",
            "n_queried",
            "anchor_size",
            "anchor_queried",
            "anchor_pseudo",
            "class_min_share",
            "class_max_share",
            "pseudo_accuracy",
        ],
        rows.iter().map(|r| {
            [
                r.seed.to_string(),
                r.round.to_string(),
                r.epoch.to_string(),
                r.criterion.clone(),
                r.paa_mode.clone(),
                r.accuracy.to_string(),
                r.per_class_accuracy.to_string(),
                r.n_queried.to_string(),
                r.anchor.size.to_string(),
                r.anchor.queried.to_string(),
                r.anchor.pseudo.to_string(),
                r.anchor.class_min_share.to_string(),
                r.anchor.class_max_share.to_string(),
                opt(r.pseudo_accuracy),
            ]
        }),
    )
}

pub fn write_anchors(path: &Path, rows: &[AnchorRow]) -> Result<()> {
    write_rows(
        path,
        [
            "epoch",
            "pass",
            "anchor_size",
            "queried",
            "pseudo",
            "class_min_share",
            "class_max_share",
        ],
        rows.iter().map(|r| {
            [
                r.epoch.to_string(),
                r.pass.to_string(),
                r.stats.size.to_string(),
                r.stats.queried.to_string(),
                r.stats.pseudo.to_string(),
                r.stats.class_min_share.to_string(),
                r.stats.class_max_share.to_string(),
            ]
        }),
    )
}

pub fn write_queries(path: &Path, rows: &[QueryRow]) -> Result<()> {
    write_rows(
        path,
        ["round", "id", "criterion"],
        rows.iter()
            .map(|r| [r.round.to_string(), r.id.to_string(), r.criterion.clone()]),
    )
}

/// `metrics.csv`, `anchors.csv`, `queries.csv`, `config.ini` and `model.bin`.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_metrics(&dir.join("metrics.csv"), &out.metrics)?;
    write_anchors(&dir.join("anchors.csv"), &out.anchors)?;
    write_queries(&dir.join("queries.csv"), &out.queries)?;
    fs::write(dir.join("config.ini"), out.config.to_text())?;
    out.model.save(&dir.join("model.bin"))
}

const FINAL_HEADER: [&str; 6] = [
    "variant",
    "seed",
    "accuracy",
    "per_class_accuracy",
    "anchor_share_ratio",
    "n_queried",
];

pub fn write_finals(path: &Path, rows: &[FinalRow]) -> Result<()> {
    write_rows(
        path,
        FINAL_HEADER,
        rows.iter().map(|r| {
            [
                r.variant.clone(),
                r.seed.to_string(),
                r.accuracy.to_string(),
                r.per_class_accuracy.to_string(),
                r.anchor_share_ratio.to_string(),
                r.n_queried.to_string(),
            ]
        }),
    )
}

pub fn read_finals(path: &Path) -> Result<Vec<FinalRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != FINAL_HEADER {
        return Err(LadaError::parse(
            path.display().to_string(),
            "unexpected header for a finals file",
        ));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| {
                LadaError::parse(
                    format!("{}:{line}", path.display()),
                    format!("bad number {:?}", &rec[i]),
                )
            })
        };
        out.push(FinalRow {
            variant: rec[0].to_string(),
            seed: num(1)? as u64,
            accuracy: num(2)?,
            per_class_accuracy: num(3)?,
            anchor_share_ratio: num(4)?,
            n_queried: num(5)? as usize,
        });
    }
    Ok(out)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_rows(
        path,
        [
            "variant",
            "seeds",
            "mean_accuracy",
            "std_accuracy",
            "mean_per_class_accuracy",
            "baseline",
            "mean_diff",
            "ci_lower",
            "ci_upper",
        ],
        rows.iter().map(|r| {
            [
                r.variant.clone(),
                r.seeds.to_string(),
                r.mean.to_string(),
                r.std.to_string(),
                r.per_class_mean.to_string(),
                r.baseline.clone(),
                opt(r.ci.map(|c| c.mean_diff)),
                opt(r.ci.map(|c| c.lower)),
                opt(r.ci.map(|c| c.upper)),
            ]
        }),
    )
}

/// `perturb_runs.csv` (one row per run), `report.csv` (per `u` and mode) and
/// `verdict.csv` (trend flags and the LAA - RAA interval at the largest `u`).
pub fn write_perturbation(dir: &Path, report: &PerturbReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_rows(
        &dir.join("perturb_runs.csv"),
        ["u", "mode", "seed", "accuracy", "per_class_accuracy"],
        report.runs.iter().map(|r| {
            [
                r.u.to_string(),
                r.mode.clone(),
                r.seed.to_string(),
                r.accuracy.to_string(),
                r.per_class_accuracy.to_string(),
            ]
        }),
    )?;
    write_rows(
        &dir.join("report.csv"),
        ["u", "mode", "seeds", "mean_accuracy", "std_accuracy"],
        report.summary.iter().map(|s| {
            [
                s.u.to_string(),
                s.mode.clone(),
                s.seeds.to_string(),
                s.mean.to_string(),
                s.std.to_string(),
            ]
        }),
    )?;
    write_rows(
        &dir.join("verdict.csv"),
        [
            "raa_non_increasing",
            "laa_non_increasing",
            "largest_u",
            "laa_minus_raa",
            "ci_lower",
            "ci_upper",
            "verdict",
        ],
        std::iter::once([
            report.raa_non_increasing.to_string(),
            report.laa_non_increasing.to_string(),
            report.largest_u.to_string(),
            opt(report.gap.map(|c| c.mean_diff)),
            opt(report.gap.map(|c| c.lower)),
            opt(report.gap.map(|c| c.upper)),
            report.verdict.as_str().to_string(),
        ]),
    )
}
