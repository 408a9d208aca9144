//! Worst-case frame bounds after erasures.
//!
//! `Δ(p)` is the smallest `σ²_min(Φ_J*)` over subsets `J ⊂ Λ` keeping
//! `⌈(1 − p)|Λ|⌉` columns. Deleting columns can only shrink `σ_min`, so the
//! minimum over the larger admissible subsets is attained at exactly that
//! size and nothing larger needs to be searched.

use std::cmp::Ordering;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::hermitian_eigenvalues;
use crate::error::{Error, Result};
use crate::frameset::FrameSet;
use crate::gabor::synthesis_matrix;
use crate::matrix::ComplexMatrix;
use crate::modvec::ModVector;
use crate::rng::RngStream;
use crate::spectral::{serialize_cond, SpectralSummary};

pub const DEFAULT_ERASURE_BUDGET: f64 = 1e9;

/// Above this `|Λ|² M³` the greedy step ranks candidates to first order
/// instead of recomputing the spectrum for every candidate deletion.
pub const EXACT_GREEDY_LIMIT: f64 = 2e7;

const CHUNK: u128 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErasureMethod {
    Exhaustive,
    Greedy,
    RandomSearch,
}

impl ErasureMethod {
    pub fn name(self) -> &'static str {
        match self {
            ErasureMethod::Exhaustive => "exhaustive",
            ErasureMethod::Greedy => "greedy",
            ErasureMethod::RandomSearch => "random_search",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErasureReport {
    pub p: f64,
    pub kept_size: usize,
    pub delta_value: f64,
    pub method: ErasureMethod,
    pub certified: bool,
    #[serde(rename = "M")]
    pub modulus: usize,
    pub lambda_size: usize,
    /// `(k, ℓ)` pairs of the kept subset.
    pub witness: Vec<(usize, usize)>,
    /// Positions of the witness inside `Λ`, ascending.
    pub positions: Vec<usize>,
}

impl ErasureReport {
    pub fn witness_set(&self, frame_set: &FrameSet) -> Result<FrameSet> {
        frame_set.select(&self.positions)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NerfReport {
    pub p: f64,
    pub c_bound: f64,
    pub kept_size: usize,
    pub robust: bool,
    /// Condition number of the worst subframe; `"inf"` when it is not a frame.
    #[serde(serialize_with = "serialize_cond")]
    pub worst_cond: Option<f64>,
    pub witness: Vec<(usize, usize)>,
    pub positions: Vec<usize>,
}

/// `⌈(1 − p)|Λ|⌉`.
pub fn kept_size(lambda_size: usize, p: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!("erasure fraction p must lie in [0, 1), got {p}")));
    }
    let raw = (1.0 - p) * lambda_size as f64;
    Ok(((raw - 1e-9).ceil().max(0.0) as usize).min(lambda_size))
}

pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn subset_cost(modulus: usize, kept: usize) -> f64 {
    let m = modulus as f64;
    kept as f64 * m * m + 10.0 * m * m * m
}

/// Estimated work of an exhaustive search over `kept`-subsets.
pub fn exhaustive_cost(modulus: usize, lambda_size: usize, kept: usize) -> f64 {
    let count = binomial(lambda_size, kept).map_or(f64::INFINITY, |c| c as f64);
    if kept < modulus {
        return 0.0;
    }
    count * subset_cost(modulus, kept)
}

struct Columns {
    modulus: usize,
    cols: Vec<Vec<Complex64>>,
}

impl Columns {
    fn new(window: &ModVector, frame_set: &FrameSet) -> Result<Self> {
        let phi = synthesis_matrix(window, frame_set)?;
        let cols = (0..phi.cols()).map(|j| phi.column(j)).collect();
        Ok(Columns { modulus: frame_set.modulus(), cols })
    }

    fn frame_operator(&self, positions: &[usize]) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(self.modulus, self.modulus);
        for &p in positions {
            s.rank_one_update(1.0, &self.cols[p]);
        }
        s
    }

    fn spectrum(&self, positions: &[usize]) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.frame_operator(positions))
    }

    /// `σ²_min` of the analysis matrix restricted to `positions`; exactly 0
    /// when fewer than `M` columns remain.
    fn sigma_sq_min(&self, positions: &[usize]) -> Result<f64> {
        if positions.len() < self.modulus {
            return Ok(0.0);
        }
        Ok(min_eigenvalue(&self.spectrum(positions)?))
    }
}

fn min_eigenvalue(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min).max(0.0)
}

/// Smaller value wins; ties go to the lexicographically smaller witness.
fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.1 < b.1,
    }
}

fn unrank_combination(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let mut candidate = next;
        loop {
            let rest = binomial(n - candidate - 1, k - slot - 1).unwrap_or(u128::MAX);
            if rank < rest {
                break;
            }
            rank -= rest;
            candidate += 1;
        }
        out.push(candidate);
        next = candidate + 1;
    }
    out
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Visits every `k`-subset of `0..n` in parallel chunks and keeps the
/// subset minimizing `score` (ties: lexicographically first). The result is
/// the same for any number of worker threads.
fn search_all_subsets<F>(n: usize, k: usize, score: F) -> Result<(f64, Vec<usize>)>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    let total = binomial(n, k).ok_or_else(|| Error::invalid("subset count overflows"))?;
    let chunks = total.div_ceil(CHUNK);
    let partial = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let start = c as u128 * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut combo = unrank_combination(n, k, start);
            let mut best: Option<(f64, Vec<usize>)> = None;
            for r in start..end {
                let v = score(&combo)?;
                let cand = (v, combo.clone());
                if best.as_ref().is_none_or(|b| better(&cand, b)) {
                    best = Some(cand);
                }
                if r + 1 < end {
                    next_combination(&mut combo, n);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    partial
        .into_iter()
        .flatten()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .ok_or_else(|| Error::invalid("no subsets to search"))
}

fn check_inputs(window: &ModVector, frame_set: &FrameSet, p: f64) -> Result<usize> {
    if frame_set.is_empty() {
        return Err(Error::EmptyFrameSet);
    }
    window.check_modulus(frame_set.modulus())?;
    kept_size(frame_set.len(), p)
}

fn report(
    columns: &Columns,
    frame_set: &FrameSet,
    p: f64,
    mut positions: Vec<usize>,
    method: ErasureMethod,
) -> Result<ErasureReport> {
    positions.sort_unstable();
    let delta_value = columns.sigma_sq_min(&positions)?;
    let witness = positions.iter().map(|&q| {
        let i = frame_set.indices()[q];
        (i.k, i.ell)
    });
    Ok(ErasureReport {
        p,
        kept_size: positions.len(),
        delta_value,
        method,
        certified: method == ErasureMethod::Exhaustive,
        modulus: frame_set.modulus(),
        lambda_size: frame_set.len(),
        witness: witness.collect(),
        positions,
    })
}

/// Certified `Δ(p)` by searching every subset of the kept size.
pub fn delta_exhaustive(window: &ModVector, frame_set: &FrameSet, p: f64, budget: f64) -> Result<ErasureReport> {
    let kept = check_inputs(window, frame_set, p)?;
    let n = frame_set.len();
    let modulus = frame_set.modulus();
    let columns = Columns::new(window, frame_set)?;
    if kept < modulus {
        return report(&columns, frame_set, p, (0..kept).collect(), ErasureMethod::Exhaustive);
    }
    let estimate = exhaustive_cost(modulus, n, kept);
    if estimate > budget {
        return Err(Error::BudgetExceeded { estimate, budget });
    }
    let (_, positions) = search_all_subsets(n, kept, |c| columns.sigma_sq_min(c))?;
    report(&columns, frame_set, p, positions, ErasureMethod::Exhaustive)
}

/// Checks whether every kept-size subframe has condition number at most
/// `c_bound`, and returns the worst-conditioned one.
pub fn nerf_check(window: &ModVector, frame_set: &FrameSet, p: f64, c_bound: f64, budget: f64) -> Result<NerfReport> {
    if !(c_bound >= 1.0) {
        return Err(Error::invalid(format!("condition bound must be at least 1, got {c_bound}")));
    }
    let kept = check_inputs(window, frame_set, p)?;
    let n = frame_set.len();
    let modulus = frame_set.modulus();
    let columns = Columns::new(window, frame_set)?;
    let positions: Vec<usize>;
    let worst_cond: Option<f64>;
    if kept < modulus {
        positions = (0..kept).collect();
        worst_cond = None;
    } else {
        let estimate = exhaustive_cost(modulus, n, kept);
        if estimate > budget {
            return Err(Error::BudgetExceeded { estimate, budget });
        }
        // Minimizing 1/cond maximizes cond; a non-frame scores 0.
        let (_, worst) = search_all_subsets(n, kept, |c| {
            let summary = SpectralSummary::from_eigenvalues(modulus, c.len(), columns.spectrum(c)?);
            Ok(summary.cond.map_or(0.0, |v| 1.0 / v))
        })?;
        let summary = SpectralSummary::from_eigenvalues(modulus, kept, columns.spectrum(&worst)?);
        worst_cond = summary.cond;
        positions = worst;
    }
    let witness = positions.iter().map(|&q| {
        let i = frame_set.indices()[q];
        (i.k, i.ell)
    });
    Ok(NerfReport {
        p,
        c_bound,
        kept_size: kept,
        robust: worst_cond.is_some_and(|c| c <= c_bound),
        worst_cond,
        witness: witness.collect(),
        positions,
    })
}

/// Options for [`delta_heuristic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicOptions {
    pub restarts: usize,
    /// Override for the exact-versus-first-order greedy switch.
    pub exact_greedy: Option<bool>,
}

impl HeuristicOptions {
    pub fn new(restarts: usize) -> Self {
        HeuristicOptions { restarts, exact_greedy: None }
    }
}

/// Uncertified upper bound on `Δ(p)`: the best of
///
/// * greedy deletion from the full set,
/// * greedy deletion from the exact minimizer at every size `k′ ≥ kept`
///   with at most `restarts` subsets of that size,
/// * `restarts` random subsets (restart `r` keeps a prefix of a permutation
///   drawn from `stream.child(r)`).
///
/// Every component is nested in `p`, so the result is monotone in `p`, and it
/// equals [`delta_exhaustive`] once `restarts ≥ C(|Λ|, kept)`.
pub fn delta_heuristic(
    window: &ModVector,
    frame_set: &FrameSet,
    p: f64,
    opts: HeuristicOptions,
    stream: &RngStream,
) -> Result<ErasureReport> {
    if opts.restarts < 1 {
        return Err(Error::invalid("heuristic erasure search needs at least one restart"));
    }
    let kept = check_inputs(window, frame_set, p)?;
    let n = frame_set.len();
    let modulus = frame_set.modulus();
    let columns = Columns::new(window, frame_set)?;
    let exact =
        opts.exact_greedy.unwrap_or_else(|| (n as f64).powi(2) * (modulus as f64).powi(3) <= EXACT_GREEDY_LIMIT);

    let mut candidates: Vec<(f64, Vec<usize>, ErasureMethod)> = Vec::new();
    let full: Vec<usize> = (0..n).collect();
    let greedy = greedy_descend(&columns, full, kept, exact)?;
    candidates.push((columns.sigma_sq_min(&greedy)?, greedy, ErasureMethod::Greedy));

    let mut enumerated_target = false;
    for size in (kept..n).rev() {
        let count = binomial(n, size).unwrap_or(u128::MAX);
        if count > opts.restarts as u128 {
            continue;
        }
        let (_, start) = search_all_subsets(n, size, |c| columns.sigma_sq_min(c))?;
        let method = if size == kept { ErasureMethod::RandomSearch } else { ErasureMethod::Greedy };
        enumerated_target |= size == kept;
        let path = greedy_descend(&columns, start, kept, exact)?;
        candidates.push((columns.sigma_sq_min(&path)?, path, method));
    }

    if !enumerated_target && kept < n {
        let draws = (0..opts.restarts as u64)
            .into_par_iter()
            .map(|r| {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut stream.child(r).generator());
                perm.truncate(kept);
                perm.sort_unstable();
                Ok((columns.sigma_sq_min(&perm)?, perm, ErasureMethod::RandomSearch))
            })
            .collect::<Result<Vec<_>>>()?;
        candidates.extend(draws);
    }

    let mut best = 0;
    for i in 1..candidates.len() {
        if candidates[i].0 < candidates[best].0 {
            best = i;
        }
    }
    let (_, positions, method) = candidates.swap_remove(best);
    report(&columns, frame_set, p, positions, method)
}

/// Deletes columns one at a time from `start` until `target` remain.
///
/// The exact rule removes the column whose deletion gives the smallest
/// `σ²_min`. The first-order rule removes the column with the largest
/// `|⟨v, φ_j⟩|²`, where `v` is the bottom eigenvector of the current frame
/// operator, obtained by inverse iteration.
fn greedy_descend(columns: &Columns, mut current: Vec<usize>, target: usize, exact: bool) -> Result<Vec<usize>> {
    current.sort_unstable();
    if current.len() <= target {
        return Ok(current);
    }
    let modulus = columns.modulus;
    let mut s = columns.frame_operator(&current);
    let mut v: Vec<Complex64> =
        (0..modulus).map(|j| Complex64::from_polar(1.0, 0.7 * j as f64 + 0.3 * (j * j) as f64)).collect();
    while current.len() > target {
        let pick = if current.len() <= modulus {
            // Already rank deficient: every deletion keeps σ²_min at 0.
            current.len() - 1
        } else if exact {
            exact_pick(columns, &s, &current)?
        } else {
            match bottom_eigenvector(&s, &mut v) {
                Some(()) => first_order_pick(columns, &current, &v),
                None => current.len() - 1,
            }
        };
        let removed = current.remove(pick);
        s.rank_one_update(-1.0, &columns.cols[removed]);
    }
    Ok(current)
}

fn exact_pick(columns: &Columns, s: &ComplexMatrix, current: &[usize]) -> Result<usize> {
    let values = current
        .par_iter()
        .map(|&q| {
            let mut t = s.clone();
            t.rank_one_update(-1.0, &columns.cols[q]);
            Ok(min_eigenvalue(&hermitian_eigenvalues(&t)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut pick = 0;
    for i in 1..values.len() {
        if values[i] < values[pick] {
            pick = i;
        }
    }
    Ok(pick)
}

fn first_order_pick(columns: &Columns, current: &[usize], v: &[Complex64]) -> usize {
    let mut pick = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &q) in current.iter().enumerate() {
        let inner: Complex64 = columns.cols[q].iter().zip(v).map(|(a, b)| b.conj() * a).sum();
        let score = inner.norm_sqr();
        if score > best {
            best = score;
            pick = i;
        }
    }
    pick
}

/// Inverse iteration for the bottom eigenvector of the Hermitian positive
/// definite `s`, warm-started from `v`. Returns `None` when `s` is
/// numerically singular.
fn bottom_eigenvector(s: &ComplexMatrix, v: &mut [Complex64]) -> Option<()> {
    let l = cholesky(s)?;
    for _ in 0..200 {
        let x = cholesky_solve(&l, v);
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return None;
        }
        // Fix the phase so successive iterates are comparable.
        let overlap: Complex64 = x.iter().zip(v.iter()).map(|(a, b)| b.conj() * a).sum();
        let phase = if overlap.norm() > 0.0 { overlap.conj() / overlap.norm() } else { Complex64::new(1.0, 0.0) };
        let mut change = 0.0;
        for (vi, xi) in v.iter_mut().zip(&x) {
            let next = xi * phase / norm;
            change += (next - *vi).norm_sqr();
            *vi = next;
        }
        if change < 1e-20 {
            break;
        }
    }
    Some(())
}

fn cholesky(s: &ComplexMatrix) -> Option<Vec<Complex64>> {
    let n = s.rows();
    let scale = (0..n).map(|i| s[(i, i)].re).fold(0.0, f64::max);
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = s[(j, j)].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 1e-13 * scale) {
            return None;
        }
        let ljj = d.sqrt();
        l[j * n + j] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut acc = s[(i, j)];
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = acc / ljj;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[i * n + k] * y[k];
        }
        y[i] = acc / l[i * n + i].re;
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in i + 1..n {
            acc -= l[k * n + i].conj() * x[k];
        }
        x[i] = acc / l[i * n + i].re;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::spectral_summary;
    use crate::windows::{sample_window, WindowKind};

    fn brute_force_delta(g: &ModVector, s: &FrameSet, kept: usize) -> f64 {
        let n = s.len();
        let mut best = f64::INFINITY;
        for mask in 0u64..(1 << n) {
            if mask.count_ones() as usize != kept {
                continue;
            }
            let positions: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let sub = s.select(&positions).unwrap();
            let v = spectral_summary(g, &sub).unwrap().sigma_sq[0];
            best = best.min(v);
        }
        best
    }

    fn small_instance(seed: u64) -> (ModVector, FrameSet) {
        let g = sample_window(&WindowKind::Steinhaus, 4, &RngStream::new(seed, 1)).unwrap();
        let s = FrameSet::random_subset(4, 8, &RngStream::new(seed, 2)).unwrap();
        (g, s)
    }

    #[test]
    fn kept_size_rounding() {
        assert_eq!(kept_size(8, 0.25).unwrap(), 6);
        assert_eq!(kept_size(9, 1.0 / 3.0).unwrap(), 6);
        assert_eq!(kept_size(10, 0.0).unwrap(), 10);
        assert_eq!(kept_size(10, 0.05).unwrap(), 10);
        assert!(kept_size(10, 1.0).is_err());
        assert!(kept_size(10, -0.1).is_err());
    }

    #[test]
    fn combinations_enumerate_in_order() {
        assert_eq!(binomial(8, 6), Some(28));
        assert_eq!(binomial(5, 7), Some(0));
        let mut all = Vec::new();
        let mut c = vec![0, 1, 2];
        loop {
            all.push(c.clone());
            if !next_combination(&mut c, 6) {
                break;
            }
        }
        assert_eq!(all.len(), 20);
        for (r, combo) in all.iter().enumerate() {
            assert_eq!(&unrank_combination(6, 3, r as u128), combo);
        }
    }

    #[test]
    fn p_zero_is_whole_frame() {
        let (g, s) = small_instance(3);
        let full = spectral_summary(&g, &s).unwrap().sigma_sq[0];
        let ex = delta_exhaustive(&g, &s, 0.0, 1e9).unwrap();
        assert!((ex.delta_value - full).abs() < 1e-10);
        assert_eq!(ex.positions, (0..8).collect::<Vec<_>>());
        assert!(ex.certified);
        let h = delta_heuristic(&g, &s, 0.0, HeuristicOptions::new(3), &RngStream::new(3, 3)).unwrap();
        assert!((h.delta_value - full).abs() < 1e-10);
        assert!(!h.certified);
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        for seed in 0..6 {
            let (g, s) = small_instance(seed);
            let ex = delta_exhaustive(&g, &s, 0.25, 1e9).unwrap();
            assert_eq!(ex.kept_size, 6);
            let brute = brute_force_delta(&g, &s, 6);
            assert!((ex.delta_value - brute).abs() < 1e-9, "{} vs {brute}", ex.delta_value);
            let direct = spectral_summary(&g, &ex.witness_set(&s).unwrap()).unwrap().sigma_sq[0];
            assert!((ex.delta_value - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_deficient_subsets_give_zero() {
        let (g, s) = small_instance(1);
        let ex = delta_exhaustive(&g, &s, 0.7, 1e9).unwrap();
        assert_eq!(ex.kept_size, 3);
        assert_eq!(ex.delta_value, 0.0);
        let nerf = nerf_check(&g, &s, 0.7, 10.0, 1e9).unwrap();
        assert!(!nerf.robust);
        assert_eq!(nerf.worst_cond, None);
    }

    #[test]
    fn heuristic_equals_exhaustive_with_enough_restarts() {
        for seed in 0..6 {
            let (g, s) = small_instance(seed);
            for p in [0.0, 0.1, 0.25, 0.4, 0.5] {
                let kept = kept_size(8, p).unwrap();
                let restarts = binomial(8, kept).unwrap() as usize;
                let ex = delta_exhaustive(&g, &s, p, 1e9).unwrap();
                let h = delta_heuristic(&g, &s, p, HeuristicOptions::new(restarts), &RngStream::new(seed, 7)).unwrap();
                assert_eq!(h.delta_value, ex.delta_value, "seed {seed} p {p}");
            }
        }
    }

    #[test]
    fn heuristic_never_beats_exhaustive_and_is_monotone() {
        for seed in 0..6 {
            let g = sample_window(&WindowKind::UniformSphere, 4, &RngStream::new(seed, 1)).unwrap();
            let s = FrameSet::random_subset(4, 10, &RngStream::new(seed, 2)).unwrap();
            for exact in [true, false] {
                let opts = HeuristicOptions { restarts: 5, exact_greedy: Some(exact) };
                let mut prev = f64::INFINITY;
                let mut prev_ex = f64::INFINITY;
                for i in 0..9 {
                    let p = i as f64 * 0.1;
                    let h = delta_heuristic(&g, &s, p, opts, &RngStream::new(seed, 9)).unwrap();
                    let ex = delta_exhaustive(&g, &s, p, 1e9).unwrap();
                    assert!(h.delta_value >= ex.delta_value - 1e-12);
                    assert!(h.delta_value <= prev + 1e-12, "heuristic not monotone at p={p}");
                    assert!(ex.delta_value <= prev_ex + 1e-12);
                    prev = h.delta_value;
                    prev_ex = ex.delta_value;
                }
            }
        }
    }

    #[test]
    fn first_order_greedy_tracks_bottom_eigenvector() {
        let g = sample_window(&WindowKind::UniformSphere, 12, &RngStream::new(2, 1)).unwrap();
        let s = FrameSet::time_product(&[0, 3, 5, 9], 12).unwrap();
        let columns = Columns::new(&g, &s).unwrap();
        let sop = columns.frame_operator(&(0..s.len()).collect::<Vec<_>>());
        let mut v = vec![Complex64::new(1.0, 0.0); 12];
        bottom_eigenvector(&sop, &mut v).unwrap();
        let sv = sop.mul_vec(&v).unwrap();
        let rayleigh: f64 = v.iter().zip(&sv).map(|(a, b)| (a.conj() * b).re).sum();
        let lmin = min_eigenvalue(&hermitian_eigenvalues(&sop).unwrap());

        assert!((rayleigh - lmin).abs() < 1e-8 * lmin.max(1.0));
        let fast = delta_heuristic(
            &g,
            &s,
            1.0 / 3.0,
            HeuristicOptions { restarts: 2, exact_greedy: Some(false) },
            &RngStream::new(0, 0),
        )
        .unwrap();
        let direct = spectral_summary(&g, &fast.witness_set(&s).unwrap()).unwrap().sigma_sq[0];
        assert!((fast.delta_value - direct).abs() < 1e-9);
        assert_eq!(fast.kept_size, 32);
    }

    #[test]
    fn interlacing_caps_sigma_max() {
        let g = sample_window(&WindowKind::UniformSphere, 6, &RngStream::new(8, 1)).unwrap();
        let s = FrameSet::full_grid(6).unwrap();
        let h = delta_heuristic(&g, &s, 0.5, HeuristicOptions::new(4), &RngStream::new(8, 2)).unwrap();
        let sub = spectral_summary(&g, &h.witness_set(&s).unwrap()).unwrap();
        assert!(sub.sigma_sq_max <= 6.0 + 1e-9);
    }

    #[test]
    fn nerf_matches_brute_force() {
        for seed in 0..4 {
            let (g, s) = small_instance(seed);
            let report = nerf_check(&g, &s, 0.25, 10.0, 1e9).unwrap();
            let mut worst: f64 = 0.0;
            for mask in 0u64..256 {
                if mask.count_ones() != 6 {
                    continue;
                }
                let positions: Vec<usize> = (0..8).filter(|i| mask >> i & 1 == 1).collect();
                let cond = spectral_summary(&g, &s.select(&positions).unwrap()).unwrap().cond_or_inf();
                worst = worst.max(cond);
            }
            let got = report.worst_cond.unwrap_or(f64::INFINITY);
            assert!((got - worst).abs() <= 1e-8 * worst, "{got} vs {worst}");
            assert_eq!(report.robust, worst <= 10.0);
        }
        let (g, s) = small_instance(0);
        let single = nerf_check(&g, &s, 0.0, 1e6, 1e9).unwrap();
        let whole = spectral_summary(&g, &s).unwrap();
        assert_eq!(single.worst_cond.is_some(), whole.cond.is_some());
    }

    #[test]
    fn budget_and_input_errors() {
        let g = sample_window(&WindowKind::Steinhaus, 8, &RngStream::new(0, 0)).unwrap();
        let s = FrameSet::full_grid(8).unwrap();
        assert!(matches!(delta_exhaustive(&g, &s, 0.5, 1e9), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(nerf_check(&g, &s, 0.5, 5.0, 1e9), Err(Error::BudgetExceeded { .. })));
        assert!(delta_heuristic(&g, &s, 0.5, HeuristicOptions::new(0), &RngStream::new(0, 0)).is_err());
        let wrong = sample_window(&WindowKind::Steinhaus, 4, &RngStream::new(0, 0)).unwrap();
        assert!(delta_exhaustive(&wrong, &s, 0.1, 1e9).is_err());
    }

    #[test]
    fn report_serializes_witness() {
        let (g, s) = small_instance(2);
        let ex = delta_exhaustive(&g, &s, 0.25, 1e9).unwrap();
        let json = ex.to_json().unwrap();
        assert!(json.starts_with(r#"{"p":0.25,"kept_size":6,"delta_value":"#));
        assert!(json.contains(r#""method":"exhaustive","certified":true,"M":4,"lambda_size":8,"witness":[["#));
    }
}
