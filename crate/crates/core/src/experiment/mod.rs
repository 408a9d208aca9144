//! Batch experiments behind the `spectra` command line tool.

mod baseline;
pub mod config;
mod figures;
mod oneshot;
pub mod output;
mod verify;

use std::collections::BTreeMap;

use serde::Serialize;

pub use baseline::run_baseline_iid;
pub use config::{ExperimentConfig, LambdaMode, Subcommand, TauRule, TraceEstimator};
pub use figures::{run_figure_erasure, run_figure_singvals, run_figure_trace};
pub use oneshot::{run_reconstruct, run_spectrum, ReconstructionReport};
pub use output::{parse_table, Artifact, Artifacts, Provenance, Table};
pub use verify::{run_verify, CheckResult, VerifyReport};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Result of one subcommand.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub artifacts: Artifacts,
    /// Text for standard output, if the subcommand prints any.
    pub stdout: Option<String>,
    /// Names of failed checks (`verify` only).
    pub failures: Vec<String>,
}

/// Validates the config and runs its subcommand on a pool of
/// `config.threads` workers (0 lets the pool choose).
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
    pool.install(|| dispatch(config))
}

fn dispatch(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let plain = |artifacts| RunOutcome { artifacts, stdout: None, failures: Vec::new() };
    match cfg.subcommand.expect("validated") {
        Subcommand::FigureSingvals => run_figure_singvals(cfg).map(plain),
        Subcommand::FigureTrace => run_figure_trace(cfg).map(plain),
        Subcommand::FigureErasure => run_figure_erasure(cfg).map(plain),
        Subcommand::BaselineIid => run_baseline_iid(cfg).map(plain),
        Subcommand::Verify => {
            let (artifacts, report) = run_verify(cfg)?;
            let summary = report
                .checks
                .iter()
                .map(|c| format!("{} {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name))
                .collect();
            Ok(RunOutcome { artifacts, stdout: Some(summary), failures: report.failures() })
        }
        Subcommand::Spectrum => {
            let (artifacts, line) = run_spectrum(cfg)?;
            Ok(RunOutcome { artifacts, stdout: Some(line + "\n"), failures: Vec::new() })
        }
        Subcommand::Reconstruct => {
            let (artifacts, line) = run_reconstruct(cfg)?;
            Ok(RunOutcome { artifacts, stdout: Some(line + "\n"), failures: Vec::new() })
        }
    }
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Serialize)]
struct Metadata {
    subcommand: String,
    config_hash: String,
    seed: u64,
    substream: u64,
    config: BTreeMap<String, String>,
    /// Parameters the figures leave open, filled with desk-scale choices.
    artifact_defaults: Vec<String>,
}

pub(crate) fn metadata(cfg: &ExperimentConfig, root: &RngStream) -> impl Serialize {
    let config = cfg
        .to_text()
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .filter(|(k, _)| k != "threads" && k != "out")
        .collect();
    let mut notes = Vec::new();
    if cfg.c_grid.is_none() {
        notes.push(format!("C grid {:?} is an artifact default", cfg.effective_c_grid()));
    }
    notes.push(format!("|F| = {} for product frame sets is an artifact default unless set", cfg.f_size));
    if cfg.window.is_none() {
        notes.push(format!("window {} chosen by subcommand", cfg.effective_window().name()));
    }
    Metadata {
        subcommand: cfg.subcommand.map(|s| s.to_string()).unwrap_or_default(),
        config_hash: cfg.config_hash(),
        seed: root.seed,
        substream: root.substream,
        config,
        artifact_defaults: notes,
    }
}
