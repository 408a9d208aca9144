//! Extreme singular values of i.i.d. Gaussian `N × M` matrices next to Gabor
//! systems with `|Λ| = N` drawn uniformly from `Z_M × Z_M`.

use rayon::prelude::*;

use super::config::{ExperimentConfig, Subcommand};
use super::output::{fmt_real, Artifacts, Provenance, Table};
use super::{metadata, quantile};
use crate::eigen::hermitian_eigenvalues;
use crate::error::Result;
use crate::frameset::FrameSet;
use crate::rng::RngStream;
use crate::spectral::{rank_threshold, spectral_summary};
use crate::windows::{iid_gaussian_matrix, sample_window, WindowKind};

pub fn run_baseline_iid(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let hash = cfg.config_hash();
    let root = RngStream::new(cfg.seed, 0).child(Subcommand::BaselineIid.tag());
    let mut table = Table::new(&[
        "M",
        "N",
        "trials",
        "gauss_sq_min_med",
        "gauss_sq_max_med",
        "gabor_sq_min_med",
        "gabor_sq_max_med",
        "gauss_min_positive",
        "gabor_min_positive",
        "gauss_max_growth",
        "gabor_over_gauss_min",
        "gabor_over_gauss_max",
    ]);
    for &modulus in &cfg.m_grid {
        // σ_max median at the first N of this M, for the √(N/M) growth ratio.
        let mut first: Option<(f64, f64)> = None;
        for &factor in &cfg.n_factors {
            let n = factor * modulus;
            let base = root.child_path(&[modulus as u64, n as u64]);
            let results = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let stream = base.child(t as u64);
                    let a = iid_gaussian_matrix(n, modulus, &stream.child(0))?;
                    let mut gauss = hermitian_eigenvalues(&a.adjoint().matmul(&a)?)?;
                    gauss.sort_by(f64::total_cmp);
                    let g_min = gauss[0].max(0.0);
                    let g_max = *gauss.last().unwrap();
                    let lambda = FrameSet::random_subset(modulus, n, &stream.child(1))?;
                    let window = sample_window(&WindowKind::Steinhaus, modulus, &stream.child(2))?;
                    let gabor = spectral_summary(&window, &lambda)?;
                    Ok([
                        g_min,
                        g_max,
                        gabor.sigma_sq_min,
                        gabor.sigma_sq_max,
                        f64::from(u8::from(g_min > rank_threshold(modulus, g_max))),
                        f64::from(u8::from(gabor.cond.is_some())),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            let column = |i: usize| results.iter().map(|r| r[i]).collect::<Vec<f64>>();
            let count = |i: usize| results.iter().filter(|r| r[i] > 0.5).count();
            let med: Vec<f64> = (0..4).map(|i| quantile(&column(i), 0.5)).collect();
            let (n0, s0) = *first.get_or_insert((n as f64, med[1].sqrt()));
            let growth = (med[1].sqrt() / s0) / (n as f64 / n0).sqrt();
            table.push(
                vec![
                    modulus.to_string(),
                    n.to_string(),
                    results.len().to_string(),
                    fmt_real(med[0]),
                    fmt_real(med[1]),
                    fmt_real(med[2]),
                    fmt_real(med[3]),
                    count(4).to_string(),
                    count(5).to_string(),
                    fmt_real(growth),
                    fmt_real(med[2] / med[0]),
                    fmt_real(med[3] / med[1]),
                ],
                &Provenance::new(&base, &hash),
            );
        }
    }
    let mut out = Artifacts::default();
    out.add_table("baseline_iid.csv", &table)?;
    out.add_json("baseline_meta.json", &metadata(cfg, &root))?;
    Ok(out)
}
