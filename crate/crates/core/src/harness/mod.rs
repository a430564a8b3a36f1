//! End-to-end experiments: configuration, the training and query loop,
//! multi-seed sweeps and their CSV output.

mod config;
mod output;
mod run;
mod sweep;

pub use config::{parse_config_text, parse_override, Ablation, DataSource, RunConfig};
pub use output::{
    read_finals, write_anchors, write_finals, write_metrics, write_perturbation, write_queries,
    write_run, write_summary,
};
pub use run::{
    load_dataset, run_experiment, run_experiment_with, AnchorRow, MetricsRow, QueryRow, RunOutput,
};
pub use sweep::{
    run_perturbation_sweep, run_sweep, summarize, FinalRow, PerturbReport, PerturbRun,
    PerturbSummary, SummaryRow, SweepReport, Variant, Verdict,
};
