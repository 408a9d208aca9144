//! Data behind the three figures: extreme singular values for random `Λ`,
//! normalized trace expectations, and erasure robustness.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Subcommand, TraceEstimator};
use super::output::{fmt_real, Artifacts, Provenance, Table};
use super::{metadata, quantile};
use crate::bounds::{roots_of_unity_bound, thm5_failure_prob, wilson_interval, Z_99};
use crate::eigen::hermitian_eigenvalues;
use crate::erasure::{delta_heuristic, HeuristicOptions};
use crate::error::{Error, Result};
use crate::frameset::{build_frame_set, FrameSet, FrameSetSpec};
use crate::rng::RngStream;
use crate::spectral::{diagonal_spectrum, spectral_summary};
use crate::trace::{exact_trace_cost, exact_trace_moment, h_matrix, trace_power};
use crate::windows::{sample_window, WindowKind};

/// `size` distinct translations drawn uniformly from `Z_M`, ascending.
pub(crate) fn random_time_support(modulus: usize, size: usize, stream: &RngStream) -> Vec<i64> {
    let mut rng = stream.generator();
    let mut picked = rand::seq::index::sample(&mut rng, modulus, size.min(modulus)).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|k| k as i64).collect()
}

fn all_frequencies(modulus: usize) -> Vec<i64> {
    (0..modulus as i64).collect()
}

struct SingvalTrial {
    lambda_size: usize,
    normalized: Vec<f64>,
    cond: Option<f64>,
    stream: RngStream,
}

pub fn run_figure_singvals(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let hash = cfg.config_hash();
    let root = RngStream::new(cfg.seed, 0).child(Subcommand::FigureSingvals.tag());
    let window = cfg.effective_window();
    let c_grid = cfg.effective_c_grid();

    let mut trials_table = Table::new(&["C", "M", "trial", "lambda_size", "sig_min_norm", "sig_max_norm", "cond"]);
    let mut extremes = Table::new(&[
        "mode",
        "C",
        "M",
        "trials",
        "lambda_size_mean",
        "sig_min_q01",
        "sig_min_med",
        "sig_max_med",
        "sig_max_q99",
    ]);
    let mut hist = Table::new(&["C", "M", "bin_lo", "bin_hi", "count"]);

    for (ci, &c) in c_grid.iter().enumerate() {
        for &modulus in &cfg.m_grid {
            let base = root.child_path(&[ci as u64, modulus as u64]);
            let tau = cfg.tau_rule.tau(modulus, c, cfg.m);
            let results = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let stream = base.child(t as u64);
                    let lambda =
                        build_frame_set(&FrameSetSpec::BernoulliGrid { modulus, tau, stream: stream.child(0) })?;
                    if lambda.is_empty() {
                        return Err(Error::invalid(format!("trial {t} at M={modulus} drew an empty frame set")));
                    }
                    let g = sample_window(&window, modulus, &stream.child(1))?;
                    let summary = spectral_summary(&g, &lambda)?;
                    let scale = modulus as f64 / lambda.len() as f64;
                    Ok(SingvalTrial {
                        lambda_size: lambda.len(),
                        normalized: summary.sigma_sq.iter().map(|s| s * scale).collect(),
                        cond: summary.cond,
                        stream,
                    })
                })
                .collect::<Result<Vec<_>>>()?;

            for (t, r) in results.iter().enumerate() {
                trials_table.push(
                    vec![
                        fmt_real(c),
                        modulus.to_string(),
                        t.to_string(),
                        r.lambda_size.to_string(),
                        fmt_real(r.normalized[0]),
                        fmt_real(*r.normalized.last().unwrap()),
                        fmt_real(r.cond.unwrap_or(f64::INFINITY)),
                    ],
                    &Provenance::new(&r.stream, &hash),
                );
            }
            let prov = Provenance::new(&base, &hash);
            extremes.push(extreme_row("random", c, modulus, &results), &prov);

            let width = cfg.hist_max / cfg.hist_bins as f64;
            let mut counts = vec![0usize; cfg.hist_bins + 1];
            for v in results.iter().flat_map(|r| r.normalized.iter()) {
                let bin = ((v / width).floor().max(0.0) as usize).min(cfg.hist_bins);
                counts[bin] += 1;
            }
            for (b, count) in counts.iter().enumerate() {
                let hi = if b == cfg.hist_bins { f64::INFINITY } else { (b + 1) as f64 * width };
                hist.push(
                    vec![fmt_real(c), modulus.to_string(), fmt_real(b as f64 * width), fmt_real(hi), count.to_string()],
                    &prov,
                );
            }
        }
    }

    // Control rows: Steinhaus on F×Z_M and any window on the full grid are
    // tight, so every normalized value is 1.
    for &modulus in &cfg.m_grid {
        let base = root.child_path(&[u64::MAX, modulus as u64]);
        let time = random_time_support(modulus, cfg.f_size, &base.child(0));
        let product = FrameSet::time_product(&time, modulus)?;
        let g = sample_window(&WindowKind::Steinhaus, modulus, &base.child(1))?;
        let control = control_trial(&g, &product, base)?;
        extremes.push(extreme_row("control_product", f64::NAN, modulus, &[control]), &Provenance::new(&base, &hash));

        let full = FrameSet::full_grid(modulus)?;
        let g = sample_window(&window, modulus, &base.child(2))?;
        let control = control_trial(&g, &full, base)?;
        extremes.push(extreme_row("control_full", f64::NAN, modulus, &[control]), &Provenance::new(&base, &hash));
    }

    let mut out = Artifacts::default();
    out.add_table("singvals_trials.csv", &trials_table)?;
    out.add_table("singvals_extremes.csv", &extremes)?;
    out.add_table("singvals_hist.csv", &hist)?;
    out.add_json("singvals_meta.json", &metadata(cfg, &root))?;
    Ok(out)
}

fn control_trial(g: &crate::modvec::ModVector, lambda: &FrameSet, stream: RngStream) -> Result<SingvalTrial> {
    let summary = spectral_summary(g, lambda)?;
    let scale = lambda.modulus() as f64 / lambda.len() as f64;
    Ok(SingvalTrial {
        lambda_size: lambda.len(),
        normalized: summary.sigma_sq.iter().map(|s| s * scale).collect(),
        cond: summary.cond,
        stream,
    })
}

fn extreme_row(mode: &str, c: f64, modulus: usize, results: &[SingvalTrial]) -> Vec<String> {
    let mins: Vec<f64> = results.iter().map(|r| r.normalized[0]).collect();
    let maxs: Vec<f64> = results.iter().map(|r| *r.normalized.last().unwrap()).collect();
    let mean_size = results.iter().map(|r| r.lambda_size as f64).sum::<f64>() / results.len() as f64;
    vec![
        mode.to_string(),
        if c.is_nan() { String::new() } else { fmt_real(c) },
        modulus.to_string(),
        results.len().to_string(),
        fmt_real(mean_size),
        fmt_real(quantile(&mins, 0.01)),
        fmt_real(quantile(&mins, 0.5)),
        fmt_real(quantile(&maxs, 0.5)),
        fmt_real(quantile(&maxs, 0.99)),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TraceMode {
    Random,
    Product,
    ControlTight,
}

impl TraceMode {
    fn name(self) -> &'static str {
        match self {
            TraceMode::Random => "random",
            TraceMode::Product => "product",
            TraceMode::ControlTight => "control_tight",
        }
    }
}

fn trace_frame_set(mode: TraceMode, modulus: usize, c: f64, tau: f64, stream: &RngStream) -> Result<FrameSet> {
    let f_size = (c.ceil() as usize).clamp(1, modulus);
    match mode {
        TraceMode::Random => build_frame_set(&FrameSetSpec::BernoulliGrid { modulus, tau, stream: *stream }),
        TraceMode::Product => build_frame_set(&FrameSetSpec::Product {
            time: random_time_support(modulus, f_size, stream),
            freq: (0..=(modulus / 2) as i64).collect(),
            modulus,
        }),
        TraceMode::ControlTight => build_frame_set(&FrameSetSpec::Product {
            time: random_time_support(modulus, f_size, stream),
            freq: all_frequencies(modulus),
            modulus,
        }),
    }
}

pub fn run_figure_trace(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let hash = cfg.config_hash();
    let root = RngStream::new(cfg.seed, 0).child(Subcommand::FigureTrace.tag());
    let c_grid = cfg.effective_c_grid();
    let m = cfg.m;
    let exact = cfg.trace_method == TraceEstimator::Exact;
    let mut table = Table::new(&[
        "mode",
        "M",
        "C",
        "trials",
        "lambda_size_mean",
        "normalized_trace_estimate",
        "std_error",
        "method",
    ]);
    // Deviation events ‖H‖ ≥ δ|Λ|/M over joint (Λ, g) draws of the random
    // mode, next to the nominal level for g and the one for Λ.
    let mut deviation = Table::new(&[
        "M",
        "C",
        "tau",
        "trials",
        "lambda_size_mean",
        "delta",
        "c_prime",
        "exceed",
        "frequency",
        "wilson_low",
        "wilson_high",
        "window_level",
        "lambda_level",
    ]);
    let mut random_rows: Vec<(usize, f64, f64, f64)> = Vec::new();
    for mode in [TraceMode::Random, TraceMode::Product, TraceMode::ControlTight] {
        for (ci, &c) in c_grid.iter().enumerate() {
            for &modulus in &cfg.m_grid {
                let base = root.child_path(&[mode as u64, ci as u64, modulus as u64]);
                let tau = cfg.tau_rule.tau(modulus, c, m);
                let samples = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| {
                        let stream = base.child(t as u64);
                        let lambda = trace_frame_set(mode, modulus, c, tau, &stream.child(0))?;
                        if lambda.is_empty() {
                            return Err(Error::invalid(format!("trial {t} at M={modulus} drew an empty frame set")));
                        }
                        let level = lambda.len() as f64 / modulus as f64;
                        let scale = level.powi(-(m as i32));
                        let g = sample_window(&WindowKind::Steinhaus, modulus, &stream.child(1))?;
                        let h = h_matrix(&g, &lambda)?.matrix;
                        let value = if exact {
                            let cost = exact_trace_cost(&lambda, m);
                            if cost > cfg.budget {
                                return Err(Error::BudgetExceeded { estimate: cost, budget: cfg.budget });
                            }
                            exact_trace_moment(&lambda, m, cfg.budget)?.value
                        } else {
                            trace_power(&h, m)?
                        };
                        let exceeds = if mode == TraceMode::Random {
                            let eig = hermitian_eigenvalues(&h)?;
                            eig.iter().fold(0f64, |a, v| a.max(v.abs())) >= cfg.delta * level
                        } else {
                            false
                        };
                        Ok((lambda.len() as f64, scale * value, exceeds))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let n = samples.len() as f64;
                let mean_size = samples.iter().map(|s| s.0).sum::<f64>() / n;
                let mean = samples.iter().map(|s| s.1).sum::<f64>() / n;
                let var = samples.iter().map(|s| (s.1 - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let se = (var / n).sqrt();
                let prov = Provenance::new(&base, &hash);
                table.push(
                    vec![
                        mode.name().to_string(),
                        modulus.to_string(),
                        fmt_real(c),
                        samples.len().to_string(),
                        fmt_real(mean_size),
                        fmt_real(mean),
                        fmt_real(se),
                        if exact { "combinatorial" } else { "monte_carlo" }.to_string(),
                    ],
                    &prov,
                );
                if mode == TraceMode::Random {
                    random_rows.push((modulus, c, mean, se));
                    let exceed = samples.iter().filter(|s| s.2).count();
                    let (lo, hi) = wilson_interval(exceed, samples.len(), Z_99);
                    deviation.push(
                        vec![
                            modulus.to_string(),
                            fmt_real(c),
                            fmt_real(tau),
                            samples.len().to_string(),
                            fmt_real(mean_size),
                            fmt_real(cfg.delta),
                            fmt_real(cfg.c_prime),
                            exceed.to_string(),
                            fmt_real(exceed as f64 / n),
                            fmt_real(lo),
                            fmt_real(hi),
                            fmt_real(thm5_failure_prob(m, cfg.delta, c, cfg.c_prime)?.value),
                            fmt_real(roots_of_unity_bound(modulus, cfg.c_prime)?.failure_prob),
                        ],
                        &prov,
                    );
                }
            }
        }
    }
    let mut out = Artifacts::default();
    out.add_table("trace.csv", &table)?;
    out.add_table("trace_deviation.csv", &deviation)?;
    out.add_table("trace_c_slope.csv", &c_slope_table(cfg, &root, &random_rows)?)?;
    out.add_json("trace_meta.json", &metadata(cfg, &root))?;
    Ok(out)
}

/// Per M, the weighted least-squares slope of the random-mode estimate
/// against C; `flat` holds when zero lies inside the 99% interval.
fn c_slope_table(cfg: &ExperimentConfig, root: &RngStream, rows: &[(usize, f64, f64, f64)]) -> Result<Table> {
    let hash = cfg.config_hash();
    let mut table = Table::new(&["M", "C_count", "slope", "slope_se", "z", "flat"]);
    for &modulus in &cfg.m_grid {
        let pts: Vec<(f64, f64, f64)> = rows
            .iter()
            .filter(|r| r.0 == modulus)
            .map(|r| (r.1, r.2, 1.0 / r.3.powi(2).max(f64::MIN_POSITIVE)))
            .collect();
        let (slope, slope_se) = if pts.len() < 2 {
            (f64::NAN, f64::NAN)
        } else {
            let w: f64 = pts.iter().map(|p| p.2).sum();
            let xm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / w;
            let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / w;
            let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xm).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xm) * (p.1 - ym)).sum();
            (sxy / sxx, sxx.recip().sqrt())
        };
        let z = slope / slope_se;
        table.push(
            vec![
                modulus.to_string(),
                pts.len().to_string(),
                fmt_real(slope),
                fmt_real(slope_se),
                fmt_real(z),
                (z.abs() <= Z_99).to_string(),
            ],
            &Provenance::new(&root.child_path(&[TraceMode::Random as u64, u64::MAX, modulus as u64]), &hash),
        );
    }
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
struct ErasureTrial {
    delta: f64,
    method: &'static str,
    p0_sigma_sq_min: f64,
    p0_diagonal: f64,
    kept_size: usize,
}

pub fn run_figure_erasure(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let hash = cfg.config_hash();
    let root = RngStream::new(cfg.seed, 0).child(Subcommand::FigureErasure.tag());
    let window = cfg.effective_window();
    let mut trials_table = Table::new(&[
        "M",
        "trial",
        "F_size",
        "p",
        "kept_size",
        "delta",
        "method",
        "sigma_sq_min_p0",
        "diagonal_min_p0",
    ]);
    let mut summary = Table::new(&[
        "M",
        "F_size",
        "trials",
        "p",
        "delta_min",
        "sigma_sq_min_p0_min",
        "diagonal_min_p0_min",
        "certified",
    ]);
    for &modulus in &cfg.m_grid {
        let base = root.child(modulus as u64);
        let results = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let stream = base.child(t as u64);
                let time = random_time_support(modulus, cfg.f_size, &stream.child(0));
                let lambda = FrameSet::time_product(&time, modulus)?;
                let g = sample_window(&window, modulus, &stream.child(1))?;
                let report =
                    delta_heuristic(&g, &lambda, cfg.p, HeuristicOptions::new(cfg.restarts), &stream.child(2))?;
                let p0 = spectral_summary(&g, &lambda)?.sigma_sq[0];
                let diagonal = diagonal_spectrum(&g, &time)?.into_iter().fold(f64::INFINITY, f64::min);
                let method = report.method.name();
                Ok((
                    stream,
                    ErasureTrial {
                        delta: report.delta_value,
                        method,
                        p0_sigma_sq_min: p0,
                        p0_diagonal: diagonal,
                        kept_size: report.kept_size,
                    },
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        for (t, (stream, r)) in results.iter().enumerate() {
            trials_table.push(
                vec![
                    modulus.to_string(),
                    t.to_string(),
                    cfg.f_size.to_string(),
                    fmt_real(cfg.p),
                    r.kept_size.to_string(),
                    fmt_real(r.delta),
                    r.method.to_string(),
                    fmt_real(r.p0_sigma_sq_min),
                    fmt_real(r.p0_diagonal),
                ],
                &Provenance::new(stream, &hash),
            );
        }
        let min_of = |f: fn(&ErasureTrial) -> f64| results.iter().map(|(_, r)| f(r)).fold(f64::INFINITY, f64::min);
        summary.push(
            vec![
                modulus.to_string(),
                cfg.f_size.to_string(),
                results.len().to_string(),
                fmt_real(cfg.p),
                fmt_real(min_of(|r| r.delta)),
                fmt_real(min_of(|r| r.p0_sigma_sq_min)),
                fmt_real(min_of(|r| r.p0_diagonal)),
                "false".to_string(),
            ],
            &Provenance::new(&base, &hash),
        );
    }
    let mut out = Artifacts::default();
    out.add_table("erasure_trials.csv", &trials_table)?;
    out.add_table("erasure.csv", &summary)?;
    out.add_json("erasure_meta.json", &metadata(cfg, &root))?;
    Ok(out)
}
