//! Trace moments of the centered frame operator `H = ΦΦ* − (|Λ|/M) I` for
//! Steinhaus windows.
//!
//! `E Tr H^m` is available three ways: Monte Carlo over windows, exact
//! enumeration of the moment expansion, and (for `m = 2`) a closed form in the
//! fiber sizes `|A_k|`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frameset::{fibers, FrameSet};
use crate::gabor::frame_operator;
use crate::matrix::ComplexMatrix;
use crate::modvec::ModVector;
use crate::rng::RngStream;
use crate::windows::{sample_window, WindowKind};

/// Operation cap for [`exact_trace_moment`] unless the caller overrides it.
pub const DEFAULT_ENUMERATION_BUDGET: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMethod {
    Direct,
    MonteCarlo,
    Combinatorial,
    ClosedForm,
}

impl TraceMethod {
    pub fn is_exact(self) -> bool {
        matches!(self, TraceMethod::Combinatorial | TraceMethod::ClosedForm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMomentEstimate {
    pub m: u32,
    pub method: TraceMethod,
    pub value: f64,
    pub std_error: f64,
    pub trials: usize,
    pub lambda_size: usize,
    #[serde(rename = "M")]
    pub modulus: usize,
}

impl TraceMomentEstimate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// `H = ΦΦ* − (|Λ|/M) I` together with whether the window has flat modulus
/// `|g(j)|² = 1/M`, in which case the diagonal of `H` vanishes identically.
#[derive(Debug, Clone)]
pub struct CenteredFrameOperator {
    pub matrix: ComplexMatrix,
    pub flat_window: bool,
}

pub fn h_matrix(window: &ModVector, frame_set: &FrameSet) -> Result<CenteredFrameOperator> {
    let norm_sqr = window.norm_sqr();
    if (norm_sqr - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("centered frame operator needs a unit-norm window, got ‖g‖² = {norm_sqr}")));
    }
    let m = frame_set.modulus();
    let mut matrix = frame_operator(window, frame_set)?;
    let level = 1.0 / m as f64;
    let flat_window = window.entries().iter().all(|z| (z.norm_sqr() - level).abs() <= 1e-12 * level);
    let shift = frame_set.len() as f64 / m as f64;
    for i in 0..m {
        matrix[(i, i)] =
            if flat_window { Complex64::new(0.0, 0.0) } else { Complex64::new(matrix[(i, i)].re - shift, 0.0) };
    }
    Ok(CenteredFrameOperator { matrix, flat_window })
}

/// `Tr H^m` for Hermitian `H`, as `Σ_ij (H^a)_ij (H^b)_ji` with `a + b = m`.
pub fn trace_power(h: &ComplexMatrix, m: u32) -> Result<f64> {
    if m < 1 {
        return Err(Error::invalid("trace power needs m >= 1"));
    }
    if !h.is_square() {
        return Err(Error::NotSquare { rows: h.rows(), cols: h.cols() });
    }
    let defect = h.hermitian_defect();
    if defect > 1e-10 * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    if m == 1 {
        return Ok(h.trace().re);
    }
    let low = m / 2;
    let high = m - low;
    let mut p_low = h.clone();
    for _ in 1..low {
        p_low = p_low.matmul(h)?;
    }
    let p_high = if high == low { p_low.clone() } else { p_low.matmul(h)? };
    let n = h.rows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += p_high[(i, j)] * p_low[(j, i)];
        }
    }
    let scale = h.frobenius_norm().powi(m as i32).max(1.0);
    if acc.im.abs() > 1e-9 * scale {
        return Err(Error::Verification(format!("Tr H^{m} has imaginary residue {:e}", acc.im)));
    }
    Ok(acc.re)
}

fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of `E Tr H^m` over Steinhaus windows; trial `t` uses
/// the substream `stream.child(t)`.
pub fn mc_trace_moment(frame_set: &FrameSet, m: u32, trials: usize, stream: &RngStream) -> Result<TraceMomentEstimate> {
    if trials < 2 {
        return Err(Error::invalid("Monte Carlo trace moment needs at least 2 trials"));
    }
    if m < 1 {
        return Err(Error::invalid("trace power needs m >= 1"));
    }
    if frame_set.is_empty() {
        return Err(Error::EmptyFrameSet);
    }
    let modulus = frame_set.modulus();
    let samples = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let g = sample_window(&WindowKind::Steinhaus, modulus, &stream.child(t))?;
            let h = h_matrix(&g, frame_set)?;
            trace_power(&h.matrix, m)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (value, std_error) = mean_and_std_error(&samples);
    Ok(TraceMomentEstimate {
        m,
        method: TraceMethod::MonteCarlo,
        value,
        std_error,
        trials,
        lambda_size: frame_set.len(),
        modulus,
    })
}

/// Operation count used by the budget guard of [`exact_trace_moment`]:
/// cyclic adjacent-distinct `j`-tuples times translation tuples over the
/// fiber support times the per-leaf work.
pub fn exact_trace_cost(frame_set: &FrameSet, m: u32) -> f64 {
    let modulus = frame_set.modulus() as f64;
    let support = fibers(frame_set).support().len() as f64;
    let mi = m as i32;
    let j_tuples = (modulus - 1.0).powi(mi) + if m.is_multiple_of(2) { modulus - 1.0 } else { -(modulus - 1.0) };
    j_tuples.max(0.0) * support.powi(mi) * (2.0 * m as f64)
}

/// Exact `E Tr H^m` for a Steinhaus window, by enumerating
///
/// `Σ_{j cyclic, j_t ≠ j_{t+1}} Σ_{k_1..k_m} E(j, k) Π_t Σ_{ℓ∈A_{k_t}} e^{2πiℓ(j_t − j_{t+1})/M}`
///
/// where `E(j, k) = M^{-m}` when the multisets `{j_t − k_t}` and
/// `{j_t − k_{t−1}}` (with `k_0 = k_m`) coincide and `0` otherwise. Matching
/// multisets is equivalent to the existence of a bijection pairing the
/// window factors with their conjugates.
pub fn exact_trace_moment(frame_set: &FrameSet, m: u32, budget: f64) -> Result<TraceMomentEstimate> {
    if m < 1 {
        return Err(Error::invalid("trace power needs m >= 1"));
    }
    let modulus = frame_set.modulus();
    let estimate = exact_trace_cost(frame_set, m);
    if estimate > budget {
        return Err(Error::BudgetExceeded { estimate, budget });
    }
    let result = |value| TraceMomentEstimate {
        m,
        method: TraceMethod::Combinatorial,
        value,
        std_error: 0.0,
        trials: 0,
        lambda_size: frame_set.len(),
        modulus,
    };
    if m == 1 || modulus < 2 || frame_set.is_empty() {
        return Ok(result(0.0));
    }
    let fib = fibers(frame_set);
    let support = fib.support();
    let sums = fib.exponential_sums();
    let order = m as usize;

    let partials: Vec<Complex64> = (0..modulus)
        .into_par_iter()
        .map(|j1| {
            let mut enumerator = Enumerator {
                modulus,
                order,
                support: &support,
                sums: &sums,
                js: vec![0; order],
                ks: vec![0; order],
                counts: vec![0i32; modulus],
                total: Complex64::new(0.0, 0.0),
            };
            enumerator.js[0] = j1;
            enumerator.walk_j(1);
            enumerator.total
        })
        .collect();
    let total: Complex64 = partials.iter().sum::<Complex64>() / (modulus as f64).powi(m as i32);
    if total.im.abs() > 1e-9 * total.re.abs().max(1.0) {
        return Err(Error::Verification(format!("enumerated E Tr H^{m} has imaginary part {:e}", total.im)));
    }
    Ok(result(total.re))
}

struct Enumerator<'a> {
    modulus: usize,
    order: usize,
    support: &'a [usize],
    sums: &'a [Vec<Complex64>],
    js: Vec<usize>,
    ks: Vec<usize>,
    counts: Vec<i32>,
    total: Complex64,
}

impl Enumerator<'_> {
    fn walk_j(&mut self, t: usize) {
        if t == self.order {
            if self.js[t - 1] != self.js[0] {
                self.walk_k(0, Complex64::new(1.0, 0.0));
            }
            return;
        }
        for j in 0..self.modulus {
            if j != self.js[t - 1] {
                self.js[t] = j;
                self.walk_j(t + 1);
            }
        }
    }

    fn walk_k(&mut self, t: usize, weight: Complex64) {
        let m = self.modulus;
        if t == self.order {
            if self.pairing_exists() {
                self.total += weight;
            }
            return;
        }
        let next_j = self.js[(t + 1) % self.order];
        let d = (self.js[t] + m - next_j) % m;
        for &k in self.support {
            let factor = self.sums[k][d];
            if factor.norm_sqr() < 1e-28 {
                continue;
            }
            self.ks[t] = k;
            self.walk_k(t + 1, weight * factor);
        }
    }

    fn pairing_exists(&mut self) -> bool {
        let m = self.modulus;
        let n = self.order;
        for t in 0..n {
            let prev_k = self.ks[(t + n - 1) % n];
            self.counts[(self.js[t] + m - self.ks[t]) % m] += 1;
            self.counts[(self.js[t] + m - prev_k) % m] -= 1;
        }
        let mut balanced = true;
        for t in 0..n {
            let prev_k = self.ks[(t + n - 1) % n];
            let a = (self.js[t] + m - self.ks[t]) % m;
            let b = (self.js[t] + m - prev_k) % m;
            balanced &= self.counts[a] == 0 && self.counts[b] == 0;
            self.counts[a] = 0;
            self.counts[b] = 0;
        }
        balanced
    }
}

/// `E Tr H² = Σ_k |A_k| − (1/M) Σ_k |A_k|²`.
pub fn closed_form_trace2(frame_set: &FrameSet) -> TraceMomentEstimate {
    let sizes = fibers(frame_set).sizes();
    let modulus = frame_set.modulus();
    let total: usize = sizes.iter().sum();
    let squares: usize = sizes.iter().map(|s| s * s).sum();
    TraceMomentEstimate {
        m: 2,
        method: TraceMethod::ClosedForm,
        value: total as f64 - squares as f64 / modulus as f64,
        std_error: 0.0,
        trials: 0,
        lambda_size: frame_set.len(),
        modulus,
    }
}

/// `(M/|Λ|)^m E Tr H^m`, estimated by Monte Carlo. Value and standard error
/// are both scaled.
pub fn normalized_trace_expectation(
    frame_set: &FrameSet,
    m: u32,
    trials: usize,
    stream: &RngStream,
) -> Result<TraceMomentEstimate> {
    if frame_set.is_empty() {
        return Err(Error::EmptyFrameSet);
    }
    let mut est = mc_trace_moment(frame_set, m, trials, stream)?;
    let scale = (frame_set.modulus() as f64 / frame_set.len() as f64).powi(m as i32);
    est.value *= scale;
    est.std_error *= scale;
    Ok(est)
}

/// Markov bound on `P{‖H‖ > δ|Λ|/M}` from a value of `E Tr H^{2m}`:
/// `(M/|Λ|)^{2m} δ^{-2m} E Tr H^{2m}`, unclamped.
pub fn trace_markov_bound(modulus: usize, lambda_size: usize, delta: f64, half_order: u32, expected_trace: f64) -> f64 {
    let ratio = modulus as f64 / (lambda_size as f64 * delta);
    ratio.powi(2 * half_order as i32) * expected_trace
}

/// Unsigned Stirling number of the first kind `S(m, s)`: permutations of
/// `m` elements with exactly `s` cycles.
pub fn stirling_first(m: u32, s: u32) -> Result<u64> {
    if !(1..=12).contains(&m) {
        return Err(Error::invalid(format!("Stirling numbers supported for 1 <= m <= 12, got {m}")));
    }
    let n = m as usize;
    let mut table = vec![vec![0u64; n + 1]; n + 1];
    table[0][0] = 1;
    for i in 1..=n {
        for j in 1..=i {
            table[i][j] = table[i - 1][j - 1] + (i as u64 - 1) * table[i - 1][j];
        }
    }
    Ok(table[n].get(s as usize).copied().unwrap_or(0))
}

/// `Σ_s S(m, s)`, which equals `m!`.
pub fn stirling_first_total(m: u32) -> Result<u64> {
    stirling_first(m, 1)?;
    (1..=m).map(|s| stirling_first(m, s)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frameset::{build_frame_set, FrameSetSpec};
    use crate::modvec::{root_of_unity, TFIndex};

    /// Exact `E Tr H^m` by averaging over every window with entries
    /// `q`-th roots of unity (scaled by `M^{-1/2}`). Mixed moments
    /// `E z^a conj(z)^b` of a uniform `q`-th root equal those of a uniform
    /// unit-circle variable whenever `|a − b| < q`, which holds for `q > m`.
    fn brute_force_expectation(frame_set: &FrameSet, m: u32) -> f64 {
        let modulus = frame_set.modulus();
        let q = m as usize + 1;
        let count = q.pow(modulus as u32);
        let mut acc = 0.0;
        for code in 0..count {
            let mut c = code;
            let entries: Vec<Complex64> = (0..modulus)
                .map(|_| {
                    let phase = c % q;
                    c /= q;
                    root_of_unity(phase as i64, q) / (modulus as f64).sqrt()
                })
                .collect();
            let g = ModVector::new(entries).unwrap();
            let h = h_matrix(&g, frame_set).unwrap();
            acc += trace_power(&h.matrix, m).unwrap();
        }
        acc / count as f64
    }

    fn explicit(modulus: usize, pairs: &[(i64, i64)]) -> FrameSet {
        build_frame_set(&FrameSetSpec::Explicit { indices: pairs.to_vec(), modulus }).unwrap()
    }

    #[test]
    fn brute_force_oracle_values() {
        // Frozen from brute_force_expectation; recomputed below as a guard.
        let cases: Vec<(FrameSet, u32, f64)> = vec![
            (explicit(3, &[(0, 0), (1, 2)]), 2, 2.0 - 2.0 / 3.0),
            (explicit(3, &[(0, 0), (0, 1), (2, 2)]), 2, 3.0 - 5.0 / 3.0),
        ];
        for (s, m, expected) in cases {
            let brute = brute_force_expectation(&s, m);
            assert!((brute - expected).abs() < 1e-12, "brute {brute} expected {expected}");
        }
    }

    #[test]
    fn enumerator_matches_brute_force() {
        let sets = [
            explicit(3, &[(0, 0), (1, 2)]),
            explicit(3, &[(0, 0), (0, 1), (2, 2), (1, 1)]),
            explicit(4, &[(0, 1), (0, 3), (2, 1)]),
            explicit(4, &[(1, 0), (3, 2), (3, 3), (0, 0), (2, 1)]),
        ];
        for s in &sets {
            for m in 1..=4u32 {
                if s.modulus() == 4 && m == 4 {
                    continue; // 5^4 windows × 4 is fine, but keep the unit suite quick
                }
                let exact = exact_trace_moment(s, m, DEFAULT_ENUMERATION_BUDGET).unwrap();
                let brute = brute_force_expectation(s, m);
                assert!(
                    (exact.value - brute).abs() < 1e-9,
                    "m={m} {:?}: exact {} brute {brute}",
                    s.to_pairs(),
                    exact.value
                );
            }
        }
    }

    #[test]
    fn h_matrix_examples() {
        let m = 8;
        let g = sample_window(&WindowKind::Steinhaus, m, &RngStream::new(1, 2)).unwrap();
        let tight = FrameSet::time_product(&[1, 6], m).unwrap();
        let h = h_matrix(&g, &tight).unwrap();
        assert!(h.flat_window);
        assert!(h.matrix.max_abs() < 1e-10);

        let s = build_frame_set(&FrameSetSpec::BernoulliGrid { modulus: m, tau: 0.4, stream: RngStream::new(1, 3) })
            .unwrap();
        let h = h_matrix(&g, &s).unwrap();
        assert!((0..m).all(|i| h.matrix[(i, i)] == Complex64::new(0.0, 0.0)));

        let u = sample_window(&WindowKind::UniformSphere, m, &RngStream::new(1, 4)).unwrap();
        let hu = h_matrix(&u, &s).unwrap();
        assert!(!hu.flat_window);
        assert!(hu.matrix.trace().norm() < 1e-12);

        let not_unit = ModVector::from_real(&[2.0, 0.0]).unwrap();
        assert!(h_matrix(&not_unit, &FrameSet::full_grid(2).unwrap()).is_err());
    }

    #[test]
    fn trace_power_examples() {
        let z = ComplexMatrix::zeros(3, 3);
        assert_eq!(trace_power(&z, 4).unwrap(), 0.0);
        let d = ComplexMatrix::diagonal(&[1.0, -1.0]);
        assert_eq!(trace_power(&d, 2).unwrap(), 2.0);
        assert_eq!(trace_power(&d, 3).unwrap(), 0.0);
        assert!(trace_power(&d, 0).is_err());
        let d3 = ComplexMatrix::diagonal(&[2.0, 0.5, -1.0]);
        assert!((trace_power(&d3, 5).unwrap() - (32.0 + 0.03125 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rank_one_moment_is_deterministic() {
        for m in 2..=16usize {
            let s = FrameSet::new(m, vec![TFIndex { k: 1 % m, ell: 0 }]).unwrap();
            let est = mc_trace_moment(&s, 2, 5, &RngStream::new(3, m as u64)).unwrap();
            let expected = 1.0 - 1.0 / m as f64;
            assert!((est.value - expected).abs() < 1e-12);
            assert!(est.std_error < 1e-12);
            assert!((closed_form_trace2(&s).value - expected).abs() < 1e-15);
        }
        let s = FrameSet::new(4, vec![TFIndex { k: 2, ell: 3 }]).unwrap();
        assert!((exact_trace_moment(&s, 2, 1e9).unwrap().value - 0.75).abs() < 1e-12);
        let norm = normalized_trace_expectation(&s, 2, 3, &RngStream::new(0, 0)).unwrap();
        assert!((norm.value - 12.0).abs() < 1e-10);
    }

    #[test]
    fn tight_sets_have_vanishing_moments() {
        let s = FrameSet::time_product(&[0, 2], 6).unwrap();
        for m in 1..=4 {
            let est = mc_trace_moment(&s, m, 4, &RngStream::new(5, 0)).unwrap();
            assert!(est.value.abs() < 1e-10);
            assert!(exact_trace_moment(&s, m, 1e9).unwrap().value.abs() < 1e-9);
        }
        assert_eq!(closed_form_trace2(&s).value, 0.0);
        assert_eq!(closed_form_trace2(&FrameSet::full_grid(5).unwrap()).value, 0.0);
        let norm = normalized_trace_expectation(&s, 2, 4, &RngStream::new(5, 0)).unwrap();
        assert!(norm.value.abs() < 1e-10);
    }

    #[test]
    fn first_moment_is_zero() {
        let s = explicit(5, &[(0, 1), (3, 3), (4, 0)]);
        assert_eq!(exact_trace_moment(&s, 1, 1e9).unwrap().value, 0.0);
    }

    #[test]
    fn closed_form_matches_enumerator() {
        let root = RngStream::new(21, 0);
        for t in 0..20u64 {
            let modulus = 2 + (t as usize % 7);
            let s =
                build_frame_set(&FrameSetSpec::BernoulliGrid { modulus, tau: 0.35, stream: root.child(t) }).unwrap();
            let exact = exact_trace_moment(&s, 2, 1e9).unwrap().value;
            let closed = closed_form_trace2(&s).value;
            assert!((exact - closed).abs() < 1e-9, "M={modulus}: {exact} vs {closed}");
            let n = s.len() as f64;
            assert!(closed <= n * (1.0 - n / (modulus * modulus) as f64) + 1e-12);
        }
    }

    #[test]
    fn monte_carlo_brackets_closed_form() {
        let s = build_frame_set(&FrameSetSpec::BernoulliGrid { modulus: 10, tau: 0.2, stream: RngStream::new(4, 4) })
            .unwrap();
        let est = mc_trace_moment(&s, 2, 4000, &RngStream::new(4, 5)).unwrap();
        let exact = closed_form_trace2(&s).value;
        assert!((est.value - exact).abs() <= 3.0 * est.std_error, "{} ± {} vs {exact}", est.value, est.std_error);
    }

    #[test]
    fn budget_guard() {
        let s = FrameSet::full_grid(12).unwrap();
        match exact_trace_moment(&s, 6, 1e6) {
            Err(Error::BudgetExceeded { estimate, budget }) => {
                assert!(estimate > budget);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn stirling_totals_are_factorials() {
        assert_eq!(stirling_first_total(1).unwrap(), 1);
        assert_eq!(stirling_first_total(3).unwrap(), 6);
        assert_eq!(stirling_first_total(5).unwrap(), 120);
        let mut fact = 1u64;
        for m in 1..=12u32 {
            fact *= m as u64;
            assert_eq!(stirling_first_total(m).unwrap(), fact);
        }
        assert_eq!(stirling_first(4, 2).unwrap(), 11);
        assert!(stirling_first_total(0).is_err());
        assert!(stirling_first_total(13).is_err());
    }

    #[test]
    fn estimates_serialize() {
        let s = FrameSet::new(4, vec![TFIndex { k: 0, ell: 0 }]).unwrap();
        let j = closed_form_trace2(&s).to_json().unwrap();
        assert_eq!(
            j,
            r#"{"m":2,"method":"closed_form","value":0.75,"std_error":0.0,"trials":0,"lambda_size":1,"M":4}"#
        );
    }

    #[test]
    fn input_errors() {
        let s = FrameSet::full_grid(3).unwrap();
        assert!(mc_trace_moment(&s, 2, 1, &RngStream::new(0, 0)).is_err());
        assert!(mc_trace_moment(&s, 0, 10, &RngStream::new(0, 0)).is_err());
        assert!(exact_trace_moment(&s, 0, 1e9).is_err());
    }
}
