//! Single-instance commands: the spectrum of one Gabor system and a dual
//! frame reconstruction demo.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::{ExperimentConfig, LambdaMode, Subcommand};
use super::figures::random_time_support;
use super::output::{Artifacts, Provenance};
use crate::error::Result;
use crate::frameset::{build_frame_set, FrameSet, FrameSetSpec};
use crate::modvec::ModVector;
use crate::rng::RngStream;
use crate::spectral::{analysis_coefficients, dual_reconstruct, spectral_summary, SpectralSummary};
use crate::windows::{sample_window, WindowKind};

fn instance(cfg: &ExperimentConfig, root: &RngStream) -> Result<(ModVector, FrameSet)> {
    let modulus = cfg.m_grid[0];
    let lambda = match cfg.effective_lambda_mode() {
        LambdaMode::Bernoulli => {
            let tau = cfg.tau_rule.tau(modulus, cfg.effective_c_grid()[0], cfg.m);
            build_frame_set(&FrameSetSpec::BernoulliGrid { modulus, tau, stream: root.child(0) })?
        }
        LambdaMode::Product => {
            FrameSet::time_product(&random_time_support(modulus, cfg.f_size, &root.child(0)), modulus)?
        }
        LambdaMode::Full => FrameSet::full_grid(modulus)?,
        LambdaMode::Explicit => {
            let path = cfg.frame_set_file.as_ref().expect("validated");
            FrameSet::read_csv(std::fs::File::open(path)?, modulus)?
        }
    };
    let g = sample_window(&cfg.effective_window(), modulus, &root.child(1))?;
    Ok((g, lambda))
}

#[derive(Serialize)]
struct SpectrumDocument<'a> {
    #[serde(flatten)]
    summary: &'a SpectralSummary,
    window: String,
    #[serde(flatten)]
    provenance: Provenance,
}

/// Returns the artifacts and the summary JSON for stdout.
pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<(Artifacts, String)> {
    let root = RngStream::new(cfg.seed, 0).child(Subcommand::Spectrum.tag());
    let (g, lambda) = instance(cfg, &root)?;
    let summary = spectral_summary(&g, &lambda)?;
    let mut out = Artifacts::default();
    out.add_json(
        "spectrum.json",
        &SpectrumDocument {
            summary: &summary,
            window: cfg.effective_window().name().to_string(),
            provenance: Provenance::new(&root, &cfg.config_hash()),
        },
    )?;
    let mut frame_csv = Vec::new();
    lambda.write_csv(&mut frame_csv)?;
    out.add_text("frame_set.csv", String::from_utf8_lossy(&frame_csv).into_owned());
    Ok((out, summary.to_json()?))
}

#[derive(Debug, Serialize)]
pub struct ReconstructionReport {
    #[serde(rename = "M")]
    pub modulus: usize,
    pub lambda_size: usize,
    pub noise: f64,
    pub cond: Option<f64>,
    pub error_norm: f64,
    pub relative_error: f64,
    /// `‖noise‖ / σ_min`, the worst-case error of the canonical dual.
    pub error_bound: f64,
    #[serde(flatten)]
    pub provenance: Provenance,
}

pub fn run_reconstruct(cfg: &ExperimentConfig) -> Result<(Artifacts, String)> {
    let root = RngStream::new(cfg.seed, 0).child(Subcommand::Reconstruct.tag());
    let (g, lambda) = instance(cfg, &root)?;
    let modulus = lambda.modulus();
    let x = sample_window(&WindowKind::ComplexGaussian, modulus, &root.child(2))?;
    let mut coefficients = analysis_coefficients(&g, &lambda, &x)?;
    let mut rng = root.child(3).generator();
    let s = cfg.noise / std::f64::consts::SQRT_2;
    let mut noise_sq = 0.0;
    for c in coefficients.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let e = Complex64::new(re * s, im * s);
        noise_sq += e.norm_sqr();
        *c += e;
    }
    let summary = spectral_summary(&g, &lambda)?;
    let recovered = dual_reconstruct(&g, &lambda, &coefficients)?;
    let error_norm = recovered.distance(&x);
    let report = ReconstructionReport {
        modulus,
        lambda_size: lambda.len(),
        noise: cfg.noise,
        cond: summary.cond,
        error_norm,
        relative_error: error_norm / x.norm(),
        error_bound: noise_sq.sqrt() / summary.sigma_sq_min.sqrt(),
        provenance: Provenance::new(&root, &cfg.config_hash()),
    };
    let mut out = Artifacts::default();
    out.add_json("reconstruct.json", &report)?;
    let line = serde_json::to_string(&report)?;
    Ok((out, line))
}
