//! Closed-form evaluators for the analytic bounds and thresholds, plus the
//! Monte Carlo checks that compare them against simulation.
//!
//! Logarithms are natural throughout.

use std::collections::BTreeMap;
use std::f64::consts::{E, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frameset::{bernoulli_subset, fourier_bias};
use crate::rng::RngStream;
use crate::windows::{sample_window, WindowKind};

/// Two-sided 99% normal quantile used for Wilson-score margins.
pub const Z_99: f64 = 2.575_829_303_548_901;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Threshold,
    Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
    pub kind: BoundKind,
    /// Set when a probability expression fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

impl BoundReport {
    fn threshold(name: &str, inputs: &[(&str, f64)], value: f64) -> Self {
        BoundReport {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            kind: BoundKind::Threshold,
            clamped: false,
        }
    }

    fn probability(name: &str, inputs: &[(&str, f64)], raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        let clamped = value != raw;
        if clamped {
            log::debug!("{name}: probability {raw} clamped to {value}");
        }
        BoundReport {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            kind: BoundKind::Probability,
            clamped,
        }
    }

    /// One JSON object on a single line.
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(msg()))
    }
}

/// `|Λ|/M + √((|Λ|/ε)(1 − |Λ|/M²))`: with probability at least `1 − ε` the
/// largest squared singular value for a Steinhaus window stays below this.
pub fn thm4_sigma_bound(modulus: usize, lambda_size: usize, eps: f64) -> Result<BoundReport> {
    let m = modulus as f64;
    let n = lambda_size as f64;
    require(modulus >= 1 && lambda_size >= 1 && lambda_size <= modulus * modulus, || {
        format!("need 1 <= |Λ| <= M², got |Λ|={lambda_size}, M={modulus}")
    })?;
    require(eps > 0.0 && eps < 1.0, || format!("ε must lie in (0, 1), got {eps}"))?;
    let value = n / m + ((n / eps) * (1.0 - n / (m * m))).max(0.0).sqrt();
    Ok(BoundReport::threshold("thm4_sigma_bound", &[("M", m), ("lambda_size", n), ("eps", eps)], value))
}

/// `(2C′/C)^m · m! · δ^{−m}`, clamped to `[0, 1]`: the failure probability of
/// the two-sided `(1 ± δ)|Λ|/M` singular value estimate for random `Λ` with
/// `τ = C log M / M^{(m−1)/m}`.
pub fn thm5_failure_prob(m: u32, delta: f64, c: f64, c_prime: f64) -> Result<BoundReport> {
    require(m > 0 && m.is_multiple_of(2), || format!("m must be even and positive, got {m}"))?;
    require(delta > 0.0 && c > 0.0 && c_prime > 0.0, || {
        format!("δ, C, C′ must be positive, got δ={delta}, C={c}, C′={c_prime}")
    })?;
    let factorial: f64 = (1..=m).map(f64::from).product();
    let raw = (2.0 * c_prime / c).powi(m as i32) * factorial * delta.powi(-(m as i32));
    Ok(BoundReport::probability(
        "thm5_failure_prob",
        &[("m", m as f64), ("delta", delta), ("C", c), ("C_prime", c_prime)],
        raw,
    ))
}

/// One-sided Hoeffding tail `e^{−2t²N}` for the mean of `N` Bernoulli draws.
pub fn hoeffding_tail(n: usize, t: f64) -> Result<BoundReport> {
    require(n >= 1, || "Hoeffding needs N >= 1".to_string())?;
    require(t > 0.0, || format!("Hoeffding needs t > 0, got {t}"))?;
    let raw = (-2.0 * t * t * n as f64).exp();
    Ok(BoundReport::probability("hoeffding_tail", &[("N", n as f64), ("t", t)], raw))
}

/// Laurent–Massart deviation thresholds for `Z = Σ c_k (Y_k² − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTails {
    /// `P{Z ≥ upper_threshold} ≤ tail_prob`.
    pub upper_threshold: f64,
    /// `P{Z ≤ lower_threshold} ≤ tail_prob`.
    pub lower_threshold: f64,
    pub tail_prob: f64,
}

pub fn chi_square_tails(weights: &[f64], t: f64) -> Result<ChiSquareTails> {
    require(t > 0.0, || format!("chi-square tails need t > 0, got {t}"))?;
    if let Some(bad) = weights.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
        return Err(Error::invalid(format!("chi-square weights must be nonnegative, got {bad}")));
    }
    let l2 = weights.iter().map(|c| c * c).sum::<f64>().sqrt();
    let linf = weights.iter().copied().fold(0.0, f64::max);
    Ok(ChiSquareTails {
        upper_threshold: 2.0 * l2 * t.sqrt() + 2.0 * linf * t,
        lower_threshold: -2.0 * l2 * t.sqrt(),
        tail_prob: (-t).exp(),
    })
}

/// Fraction of `CN(0, I/M)` draws with `1/2 < ‖h‖₂ < 2`. Trial `i` uses
/// `stream.child(i)`.
pub fn gaussian_norm_interval_check(modulus: usize, trials: usize, stream: &RngStream) -> Result<f64> {
    require(trials >= 100, || format!("norm interval check needs at least 100 trials, got {trials}"))?;
    require(modulus >= 1, || "modulus must be at least 1".to_string())?;
    let mut inside = 0usize;
    for i in 0..trials {
        let h = sample_window(&WindowKind::ComplexGaussian, modulus, &stream.child(i as u64))?;
        let norm = h.norm();
        if norm > 0.5 && norm < 2.0 {
            inside += 1;
        }
    }
    Ok(inside as f64 / trials as f64)
}

/// Lower bound `1 − e^{−M/2} − e^{−9M/32}` on `P{1/2 < ‖h‖₂ < 2}`.
pub fn gaussian_norm_interval_bound(modulus: usize) -> BoundReport {
    let m = modulus as f64;
    let raw = 1.0 - (-m / 2.0).exp() - (-9.0 * m / 32.0).exp();
    BoundReport::probability("gaussian_norm_interval", &[("M", m)], raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootsOfUnityBound {
    /// `C′ ln M`.
    pub threshold: f64,
    /// `M^{−(C′/(2√2) − 2)}`, at most 1.
    pub failure_prob: f64,
    pub vacuous: bool,
}

/// Bound on the largest nontrivial exponential sum over a Bernoulli subset
/// of `Z_M`. `C′ = 4√2` is the vacuous boundary (failure probability 1);
/// anything below it is rejected.
pub fn roots_of_unity_bound(modulus: usize, c_prime: f64) -> Result<RootsOfUnityBound> {
    require(modulus >= 2, || format!("need M >= 2, got {modulus}"))?;
    let boundary = 4.0 * SQRT_2;
    if c_prime < boundary - 1e-12 || !c_prime.is_finite() {
        return Err(Error::invalid(format!("C′ must exceed 4√2 ≈ {boundary:.6}, got {c_prime}")));
    }
    let m = modulus as f64;
    let exponent = (c_prime / (2.0 * SQRT_2) - 2.0).max(0.0);
    let failure_prob = m.powf(-exponent).min(1.0);
    Ok(RootsOfUnityBound { threshold: c_prime * m.ln(), failure_prob, vacuous: failure_prob >= 1.0 })
}

/// `ln(e²/(4(e − 1)))`.
pub fn sparse_gabor_constant() -> f64 {
    (E * E / (4.0 * (E - 1.0))).ln()
}

/// Right-hand side `δ²M / (4e(ln(|Λ|/ε) + c))` of the sparse Gabor hypothesis.
pub fn sparse_gabor_rhs(lambda_size: usize, modulus: usize, delta: f64, eps: f64) -> Result<f64> {
    require(delta > 0.0 && delta < 1.0, || format!("δ must lie in (0, 1), got {delta}"))?;
    require(eps > 0.0 && eps < 1.0, || format!("ε must lie in (0, 1), got {eps}"))?;
    require(lambda_size >= 1, || "|Λ| must be at least 1".to_string())?;
    let denom = 4.0 * E * ((lambda_size as f64 / eps).ln() + sparse_gabor_constant());
    Ok(delta * delta * modulus as f64 / denom)
}

/// Whether `|Λ| ≤ δ²M / (4e(ln(|Λ|/ε) + c))` holds.
pub fn sparse_gabor_threshold(lambda_size: usize, modulus: usize, delta: f64, eps: f64) -> Result<bool> {
    Ok(lambda_size as f64 <= sparse_gabor_rhs(lambda_size, modulus, delta, eps)?)
}

/// `(√(M/N), ((C−1)/(C+1))√(1−p) − √(ε + 2p(1 − ln p)))`.
pub fn nerf_gaussian_sides(modulus: usize, n: usize, p: f64, c: f64, eps: f64) -> Result<(f64, f64)> {
    require(p > 0.0 && p < 1.0, || format!("p must lie in (0, 1), got {p}"))?;
    require(c >= 1.0, || format!("C must be at least 1, got {c}"))?;
    require(eps > 0.0, || format!("ε must be positive, got {eps}"))?;
    require(n >= 1, || "N must be at least 1".to_string())?;
    let lhs = (modulus as f64 / n as f64).sqrt();
    let rhs = (c - 1.0) / (c + 1.0) * (1.0 - p).sqrt() - (eps + 2.0 * p * (1.0 - p.ln())).sqrt();
    Ok((lhs, rhs))
}

/// Whether an `N × M` Gaussian frame meets the sufficient condition for
/// being `(p, C)` numerically erasure robust.
pub fn nerf_gaussian_feasible(modulus: usize, n: usize, p: f64, c: f64, eps: f64) -> Result<bool> {
    let (lhs, rhs) = nerf_gaussian_sides(modulus, n, p, c, eps)?;
    Ok(lhs <= rhs)
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Outcome of comparing an empirical frequency against a nominal bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCheck {
    pub name: String,
    pub events: usize,
    pub trials: usize,
    pub frequency: f64,
    pub bound: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub pass: bool,
}

impl EmpiricalCheck {
    /// The event frequency should be at most `bound`; fails only when the
    /// whole 99% Wilson interval lies above it.
    pub fn at_most(name: &str, events: usize, trials: usize, bound: f64) -> Self {
        let (lo, hi) = wilson_interval(events, trials, Z_99);
        Self::build(name, events, trials, bound, lo, hi, lo <= bound)
    }

    /// The event frequency should be at least `bound`; fails only when the
    /// whole 99% Wilson interval lies below it.
    pub fn at_least(name: &str, events: usize, trials: usize, bound: f64) -> Self {
        let (lo, hi) = wilson_interval(events, trials, Z_99);
        Self::build(name, events, trials, bound, lo, hi, hi >= bound)
    }

    fn build(name: &str, events: usize, trials: usize, bound: f64, lo: f64, hi: f64, pass: bool) -> Self {
        EmpiricalCheck {
            name: name.to_string(),
            events,
            trials,
            frequency: if trials == 0 { 0.0 } else { events as f64 / trials as f64 },
            bound,
            wilson_low: lo,
            wilson_high: hi,
            pass,
        }
    }
}

/// Draws `Z = Σ_{k<size} (Y_k² − 1)` and counts upper and lower threshold
/// violations separately.
pub fn chi_square_check(size: usize, t: f64, trials: usize, stream: &RngStream) -> Result<[EmpiricalCheck; 2]> {
    let tails = chi_square_tails(&vec![1.0; size], t)?;
    let mut upper = 0;
    let mut lower = 0;
    for i in 0..trials {
        let mut rng = stream.child(i as u64).generator();
        let z: f64 = (0..size)
            .map(|_| {
                let y: f64 = rng.sample(StandardNormal);
                y * y - 1.0
            })
            .sum();
        if z >= tails.upper_threshold {
            upper += 1;
        }
        if z <= tails.lower_threshold {
            lower += 1;
        }
    }
    Ok([
        EmpiricalCheck::at_most(&format!("chi_square_upper(k={size},t={t})"), upper, trials, tails.tail_prob),
        EmpiricalCheck::at_most(&format!("chi_square_lower(k={size},t={t})"), lower, trials, tails.tail_prob),
    ])
}

/// Binomial(`n`, `p`) draws against the Hoeffding tail, one check per side.
pub fn hoeffding_check(n: usize, p: f64, t: f64, trials: usize, stream: &RngStream) -> Result<[EmpiricalCheck; 2]> {
    require(p > 0.0 && p < 1.0, || format!("p must lie in (0, 1), got {p}"))?;
    let bound = hoeffding_tail(n, t)?.value;
    let nf = n as f64;
    let mut above = 0;
    let mut below = 0;
    for i in 0..trials {
        let mut rng = stream.child(i as u64).generator();
        let s = (0..n).filter(|_| rng.random::<f64>() < p).count() as f64;
        if s > (p + t) * nf {
            above += 1;
        }
        if s < (p - t) * nf {
            below += 1;
        }
    }
    Ok([
        EmpiricalCheck::at_most(&format!("hoeffding_upper(N={n},t={t})"), above, trials, bound),
        EmpiricalCheck::at_most(&format!("hoeffding_lower(N={n},t={t})"), below, trials, bound),
    ])
}

/// Frequency of `1/2 < ‖h‖₂ < 2` against `floor`, which callers choose
/// (the proven level is [`gaussian_norm_interval_bound`]).
pub fn gaussian_norm_check(modulus: usize, trials: usize, floor: f64, stream: &RngStream) -> Result<EmpiricalCheck> {
    let freq = gaussian_norm_interval_check(modulus, trials, stream)?;
    let inside = (freq * trials as f64).round() as usize;
    Ok(EmpiricalCheck::at_least(&format!("gaussian_norm_interval(M={modulus})"), inside, trials, floor))
}

/// Bernoulli(`tau`) subsets of `Z_M` whose Fourier bias reaches `C′ ln M`.
pub fn roots_of_unity_check(
    modulus: usize,
    tau: f64,
    c_prime: f64,
    trials: usize,
    stream: &RngStream,
) -> Result<EmpiricalCheck> {
    let bound = roots_of_unity_bound(modulus, c_prime)?;
    let mut violations = 0;
    for i in 0..trials {
        let set = bernoulli_subset(modulus, tau, &stream.child(i as u64));
        let bias = if set.is_empty() { 0.0 } else { fourier_bias(&set, modulus)? };
        if bias >= bound.threshold {
            violations += 1;
        }
    }
    Ok(EmpiricalCheck::at_most(
        &format!("roots_of_unity(M={modulus},C'={c_prime})"),
        violations,
        trials,
        bound.failure_prob,
    ))
}
