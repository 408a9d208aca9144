//! Frame bounds and condition numbers from the spectrum of the frame operator.

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::eigen::{hermitian_eigen, hermitian_eigenvalues_with, JacobiOptions};
use crate::error::{Error, Result};
use crate::frameset::FrameSet;
use crate::gabor::{frame_operator, synthesis_matrix};
use crate::modvec::{wrap, ModVector};

/// Eigenvalues below `M · 2^{-46} · σ²_max` are treated as zero.
pub fn rank_threshold(modulus: usize, sigma_sq_max: f64) -> f64 {
    modulus as f64 * 2f64.powi(-46) * sigma_sq_max
}

/// Squared singular values of the analysis matrix `Φ*`, ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    #[serde(rename = "M")]
    pub modulus: usize,
    pub lambda_size: usize,
    pub sigma_sq: Vec<f64>,
    #[serde(skip)]
    pub sigma_sq_min: f64,
    #[serde(skip)]
    pub sigma_sq_max: f64,
    /// `None` when the system is not a frame (infinite condition number).
    #[serde(serialize_with = "serialize_cond")]
    pub cond: Option<f64>,
}

pub(crate) fn serialize_cond<S: Serializer>(cond: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match cond {
        Some(v) => s.serialize_f64(*v),
        None => s.serialize_str("inf"),
    }
}

impl SpectralSummary {
    /// Builds a summary from frame-operator eigenvalues. Tiny negative
    /// round-off is clamped to zero.
    pub fn from_eigenvalues(modulus: usize, lambda_size: usize, mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sigma_sq_min = values[0];
        let sigma_sq_max = *values.last().expect("nonempty spectrum");
        let cond = if sigma_sq_min <= rank_threshold(modulus, sigma_sq_max) {
            None
        } else {
            Some((sigma_sq_max / sigma_sq_min).sqrt().max(1.0))
        };
        SpectralSummary { modulus, lambda_size, sigma_sq: values, sigma_sq_min, sigma_sq_max, cond }
    }

    pub fn is_frame(&self) -> bool {
        self.cond.is_some()
    }

    pub fn cond_or_inf(&self) -> f64 {
        self.cond.unwrap_or(f64::INFINITY)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

pub fn spectral_summary(window: &ModVector, frame_set: &FrameSet) -> Result<SpectralSummary> {
    spectral_summary_with(window, frame_set, JacobiOptions::default())
}

pub fn spectral_summary_with(window: &ModVector, frame_set: &FrameSet, opts: JacobiOptions) -> Result<SpectralSummary> {
    let op = frame_operator(window, frame_set)?;
    let values = hermitian_eigenvalues_with(&op, opts)?;
    Ok(SpectralSummary::from_eigenvalues(frame_set.modulus(), frame_set.len(), values))
}

/// Spectrum of the frame operator for `Λ = F × Z_M`, which is diagonal with
/// entries `M Σ_{k∈F} |g(m − k)|²`. Returned in index order `m = 0..M`.
pub fn diagonal_spectrum(window: &ModVector, time: &[i64]) -> Result<Vec<f64>> {
    if time.is_empty() {
        return Err(Error::EmptyFrameSet);
    }
    let m = window.modulus();
    let mut ks: Vec<usize> = time.iter().map(|&k| wrap(k, m)).collect();
    ks.sort_unstable();
    let before = ks.len();
    ks.dedup();
    if ks.len() != before {
        return Err(Error::invalid("time factor contains repeated elements"));
    }
    let energy: Vec<f64> = window.entries().iter().map(|z| z.norm_sqr()).collect();
    Ok((0..m).map(|row| m as f64 * ks.iter().map(|&k| energy[(row + m - k) % m]).sum::<f64>()).collect())
}

/// Analysis coefficients `Φ* x`, in frame-set order.
pub fn analysis_coefficients(window: &ModVector, frame_set: &FrameSet, signal: &ModVector) -> Result<Vec<Complex64>> {
    signal.check_modulus(frame_set.modulus())?;
    let phi = synthesis_matrix(window, frame_set)?;
    phi.adjoint().mul_vec(signal.entries())
}

/// Canonical dual reconstruction `(ΦΦ*)^{-1} Φ c`, applied through the
/// eigendecomposition of `ΦΦ*`.
pub fn dual_reconstruct(window: &ModVector, frame_set: &FrameSet, coefficients: &[Complex64]) -> Result<ModVector> {
    if coefficients.len() != frame_set.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} frame vectors",
            coefficients.len(),
            frame_set.len()
        )));
    }
    let phi = synthesis_matrix(window, frame_set)?;
    let op = frame_operator(window, frame_set)?;
    let eig = hermitian_eigen(&op, JacobiOptions::default())?;
    let m = frame_set.modulus();
    let max = eig.values[m - 1];
    let threshold = rank_threshold(m, max);
    if eig.values[0] <= threshold {
        return Err(Error::NotAFrame { sigma_sq_min: eig.values[0], threshold });
    }
    let synthesized = phi.mul_vec(coefficients)?;
    let v = &eig.vectors;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (j, &lambda) in eig.values.iter().enumerate() {
        let proj: Complex64 = (0..m).map(|r| v[(r, j)].conj() * synthesized[r]).sum::<Complex64>() / lambda;
        for (r, o) in out.iter_mut().enumerate() {
            *o += v[(r, j)] * proj;
        }
    }
    ModVector::new(out)
}

/// Largest gap between two equally sized multisets after sorting.
pub fn multiset_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets must have equal size");
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}
