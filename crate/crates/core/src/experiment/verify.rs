//! Invariant suite behind `spectra verify`.

use serde::Serialize;

use super::config::{ExperimentConfig, Subcommand};
use super::output::{Artifacts, Provenance};
use crate::bounds::{
    chi_square_check, gaussian_norm_check, hoeffding_check, hoeffding_tail, roots_of_unity_bound, roots_of_unity_check,
    thm4_sigma_bound, EmpiricalCheck,
};
use crate::eigen::JacobiOptions;
use crate::erasure::{binomial, delta_exhaustive, delta_heuristic, kept_size, HeuristicOptions};
use crate::error::Result;
use crate::frameset::{build_frame_set, FrameSet, FrameSetSpec};
use crate::gabor::frame_operator;
use crate::matrix::ComplexMatrix;
use crate::modvec::dft;
use crate::rng::RngStream;
use crate::spectral::{
    analysis_coefficients, diagonal_spectrum, dual_reconstruct, multiset_distance, spectral_summary,
    spectral_summary_with,
};
use crate::trace::{closed_form_trace2, exact_trace_moment, mc_trace_moment, stirling_first_total};
use crate::windows::{sample_window, WindowKind};

use super::figures::random_time_support;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// Worst observed discrepancy (or frequency for Monte Carlo checks).
    pub measured: f64,
    pub tolerance: f64,
    pub cases: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub all_pass: bool,
    pub checks: Vec<CheckResult>,
    #[serde(flatten)]
    pub provenance: Provenance,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect()
    }
}

fn max_check(name: &str, errors: &[f64], tolerance: f64) -> CheckResult {
    let measured = errors.iter().copied().fold(0.0, f64::max);
    CheckResult {
        name: name.to_string(),
        pass: errors.iter().all(|e| *e <= tolerance),
        measured,
        tolerance,
        cases: errors.len(),
    }
}

fn empirical(c: &EmpiricalCheck) -> CheckResult {
    CheckResult { name: c.name.clone(), pass: c.pass, measured: c.frequency, tolerance: c.bound, cases: c.trials }
}

fn small_modulus(stream: &RngStream, lo: usize, hi: usize) -> usize {
    use rand::Rng;
    stream.generator().random_range(lo..=hi)
}

pub fn run_verify(cfg: &ExperimentConfig) -> Result<(Artifacts, VerifyReport)> {
    let root = RngStream::new(cfg.seed, 0).child(Subcommand::Verify.tag());
    let opts = match cfg.fault_eigen_tolerance {
        Some(tolerance) => JacobiOptions { tolerance, ..JacobiOptions::default() },
        None => JacobiOptions::default(),
    };
    let mut checks = Vec::new();

    // Steinhaus windows make F×Z_M tight with bound |F|.
    let s = root.child(1);
    let mut errs = Vec::new();
    for i in 0..20u64 {
        let c = s.child(i);
        let m = small_modulus(&c, 2, 32);
        let f = 1 + small_modulus(&c.child(9), 0, m - 1);
        let time = random_time_support(m, f, &c.child(0));
        let g = sample_window(&WindowKind::Steinhaus, m, &c.child(1))?;
        let op = frame_operator(&g, &FrameSet::time_product(&time, m)?)?;
        let mut target = ComplexMatrix::identity(m);
        target.shift_diagonal(time.len() as f64 - 1.0);
        errs.push(op.sub(&target)?.max_abs());
    }
    checks.push(max_check("tightness_steinhaus_product", &errs, 1e-9));

    // Diagonal spectrum of F×Z_M against the eigensolver, directly and through
    // the unitary DFT conjugation onto Z_M×(−F), where the operator is dense.
    let s = root.child(2);
    let mut direct = Vec::new();
    let mut conjugate = Vec::new();
    for i in 0..20u64 {
        let c = s.child(i);
        let m = small_modulus(&c, 3, 24);
        let f = 1 + small_modulus(&c.child(9), 0, m / 2);
        let time = random_time_support(m, f, &c.child(0));
        let g = sample_window(&WindowKind::UniformSphere, m, &c.child(1))?;
        let diag = diagonal_spectrum(&g, &time)?;
        let eig = spectral_summary_with(&g, &FrameSet::time_product(&time, m)?, opts)?;
        direct.push(multiset_distance(&diag, &eig.sigma_sq) / m as f64);
        let neg: Vec<i64> = time.iter().map(|k| -k).collect();
        let freq_side =
            build_frame_set(&FrameSetSpec::Product { time: (0..m as i64).collect(), freq: neg, modulus: m })?;
        let eig = spectral_summary_with(&dft(&g), &freq_side, opts)?;
        conjugate.push(multiset_distance(&diag, &eig.sigma_sq) / m as f64);
    }
    checks.push(max_check("diagonal_spectrum_vs_eigensolver", &direct, 1e-8));
    checks.push(max_check("diagonal_spectrum_vs_eigensolver_conjugated", &conjugate, 1e-8));

    let mut errs = Vec::new();
    for (i, m) in [8usize, 16].into_iter().enumerate() {
        let g = sample_window(&WindowKind::UniformSphere, m, &root.child_path(&[3, i as u64]))?;
        let sum = spectral_summary(&g, &FrameSet::full_grid(m)?)?;
        errs.extend(sum.sigma_sq.iter().map(|v| (v - m as f64).abs()));
    }
    checks.push(max_check("full_grid_tightness", &errs, 1e-8));

    let s = root.child(4);
    let mut errs = Vec::new();
    for i in 0..10u64 {
        let c = s.child(i);
        let m = small_modulus(&c, 3, 16);
        let f = 1 + small_modulus(&c.child(9), 0, m - 1);
        let freq = random_time_support(m, f, &c.child(0));
        let g = sample_window(&WindowKind::ComplexGaussian, m, &c.child(1))?;
        let freq_side =
            build_frame_set(&FrameSetSpec::Product { time: (0..m as i64).collect(), freq: freq.clone(), modulus: m })?;
        let neg: Vec<i64> = freq.iter().map(|k| -k).collect();
        let a = spectral_summary(&dft(&g), &freq_side)?;
        let b = spectral_summary(&g, &FrameSet::time_product(&neg, m)?)?;
        errs.push(multiset_distance(&a.sigma_sq, &b.sigma_sq));
    }
    checks.push(max_check("dft_conjugation", &errs, 1e-8));

    // Exact enumeration, closed form and Monte Carlo for the trace moments.
    let s = root.child(5);
    let mut closed = Vec::new();
    let mut mc = Vec::new();
    for i in 0..8u64 {
        let c = s.child(i);
        let m = if i % 2 == 0 { 4 } else { 6 };
        let size = 1 + small_modulus(&c.child(9), 0, 9);
        let lambda = FrameSet::random_subset(m, size, &c.child(0))?;
        let exact2 = exact_trace_moment(&lambda, 2, cfg.budget)?.value;
        closed.push((exact2 - closed_form_trace2(&lambda).value).abs());
        if i < 4 {
            let order = 3 + (i as u32 % 2);
            let exact = exact_trace_moment(&lambda, order, cfg.budget)?.value;
            let est = mc_trace_moment(&lambda, order, 2000, &c.child(1))?;
            // Deterministic cases (e.g. |Λ| = 1) have a zero standard error up
            // to rounding, so the error is floored at the rounding level.
            let se = est.std_error.max(1e-9 * exact.abs().max(1.0));
            mc.push((est.value - exact).abs() / se);
        }
    }
    checks.push(max_check("trace_exact_vs_closed_form_m2", &closed, 1e-9));
    checks.push(max_check("trace_monte_carlo_within_4_se", &mc, 4.0));

    let mut errs = Vec::new();
    for m in 2..=16usize {
        let lambda = FrameSet::random_subset(m, 1, &root.child_path(&[6, m as u64]))?;
        let est = mc_trace_moment(&lambda, 2, 4, &root.child_path(&[6, m as u64, 1]))?;
        errs.push((est.value - (1.0 - 1.0 / m as f64)).abs().max(est.std_error));
    }
    checks.push(max_check("trace_rank_one", &errs, 1e-12));

    let mut errs = Vec::new();
    let mut fact = 1u64;
    for m in 1..=12u32 {
        fact *= m as u64;
        errs.push((stirling_first_total(m)? as f64 - fact as f64).abs());
    }
    checks.push(max_check("stirling_totals", &errs, 0.0));

    // Monotonicity of the evaluators over parameter grids.
    let mut violations = 0.0;
    for m in [8usize, 32] {
        for n in [1, m, m * m / 2] {
            let vals: Vec<f64> =
                (1..20).map(|e| thm4_sigma_bound(m, n, e as f64 / 20.0).map(|r| r.value)).collect::<Result<_>>()?;
            violations += vals.windows(2).filter(|w| w[1] > w[0]).count() as f64;
        }
    }
    for n in [1usize, 50] {
        let vals: Vec<f64> =
            (1..30).map(|i| hoeffding_tail(n, i as f64 * 0.03).map(|r| r.value)).collect::<Result<_>>()?;
        violations += vals.windows(2).filter(|w| w[1] > w[0]).count() as f64;
    }
    let vals: Vec<f64> = (0..30)
        .map(|i| roots_of_unity_bound(64, 5.7 + i as f64 * 0.3).map(|r| r.failure_prob))
        .collect::<Result<_>>()?;
    violations += vals.windows(2).filter(|w| w[1] > w[0]).count() as f64;
    checks.push(max_check("bound_monotonicity", &[violations], 0.0));

    // Erasure search: heuristic against exhaustive, and monotonicity in p.
    let s = root.child(7);
    let mut gaps = Vec::new();
    let mut mono = 0.0;
    for i in 0..3u64 {
        let c = s.child(i);
        let g = sample_window(&WindowKind::Steinhaus, 4, &c.child(0))?;
        let lambda = FrameSet::random_subset(4, 8, &c.child(1))?;
        let mut prev = f64::INFINITY;
        for p in [0.0, 0.125, 0.25, 0.375, 0.5] {
            let ex = delta_exhaustive(&g, &lambda, p, cfg.budget)?;
            let restarts = binomial(8, kept_size(8, p)?).unwrap_or(u128::MAX) as usize;
            let h = delta_heuristic(&g, &lambda, p, HeuristicOptions::new(restarts), &c.child(2))?;
            gaps.push((h.delta_value - ex.delta_value).abs());
            if ex.delta_value > prev {
                mono += 1.0;
            }
            prev = ex.delta_value;
        }
    }
    checks.push(max_check("erasure_heuristic_equals_exhaustive", &gaps, 0.0));
    checks.push(max_check("erasure_monotone_in_p", &[mono], 0.0));

    let s = root.child(8);
    let mut errs = Vec::new();
    for i in 0..5u64 {
        let c = s.child(i);
        let m = small_modulus(&c, 4, 16);
        let g = sample_window(&WindowKind::UniformSphere, m, &c.child(0))?;
        let lambda = FrameSet::random_subset(m, 3 * m, &c.child(1))?;
        let x = sample_window(&WindowKind::ComplexGaussian, m, &c.child(2))?;
        let coeffs = analysis_coefficients(&g, &lambda, &x)?;
        errs.push(dual_reconstruct(&g, &lambda, &coeffs)?.distance(&x) / x.norm());
    }
    checks.push(max_check("dual_reconstruction_noiseless", &errs, 1e-8));

    // Tail bounds against simulation (99% Wilson margins).
    let s = root.child(9);
    for (i, t) in [1.0, 3.0].into_iter().enumerate() {
        for check in chi_square_check(64, t, 2000, &s.child(i as u64))? {
            checks.push(empirical(&check));
        }
    }
    for (i, m) in [16usize, 64].into_iter().enumerate() {
        let floor = 1.0 - (-9.0 * m as f64 / 32.0).exp();
        checks.push(empirical(&gaussian_norm_check(m, 1000, floor, &s.child(10 + i as u64))?));
    }
    for check in hoeffding_check(1000, 0.3, 0.05, 1000, &s.child(20))? {
        checks.push(empirical(&check));
    }
    checks.push(empirical(&roots_of_unity_check(128, 0.3, 12.0, 500, &s.child(21))?));

    let report = VerifyReport {
        all_pass: checks.iter().all(|c| c.pass),
        checks,
        provenance: Provenance::new(&root, &cfg.config_hash()),
    };
    let mut out = Artifacts::default();
    out.add_json("verify.json", &report)?;
    Ok((out, report))
}
