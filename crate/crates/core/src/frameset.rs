//! Time-frequency index sets `Λ ⊂ Z_M × Z_M`, their fibers and the Fourier
//! bias of subsets of `Z_M`.

use std::collections::HashSet;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modvec::{root_of_unity, wrap, TFIndex};
use crate::rng::RngStream;

/// Ordered set of distinct time-frequency indices with its modulus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSet {
    modulus: usize,
    indices: Vec<TFIndex>,
}

/// Recipes accepted by [`build_frame_set`].
#[derive(Debug, Clone)]
pub enum FrameSetSpec {
    FullGrid {
        modulus: usize,
    },
    /// `F × L`, with both factors given as index lists (wrapped mod M).
    Product {
        time: Vec<i64>,
        freq: Vec<i64>,
        modulus: usize,
    },
    /// Each cell kept independently with probability `tau`.
    BernoulliGrid {
        modulus: usize,
        tau: f64,
        stream: RngStream,
    },
    /// Kept in the given order.
    Explicit {
        indices: Vec<(i64, i64)>,
        modulus: usize,
    },
}

fn distinct_sorted(values: &[i64], modulus: usize, what: &str) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = values.iter().map(|&v| wrap(v, modulus)).collect();
    out.sort_unstable();
    let before = out.len();
    out.dedup();
    if out.len() != before {
        return Err(Error::invalid(format!("{what} contains repeated elements")));
    }
    Ok(out)
}

pub fn build_frame_set(spec: &FrameSetSpec) -> Result<FrameSet> {
    match spec {
        FrameSetSpec::FullGrid { modulus } => {
            let m = check_modulus(*modulus)?;
            let indices = (0..m).flat_map(|k| (0..m).map(move |ell| TFIndex { k, ell })).collect();
            Ok(FrameSet { modulus: m, indices })
        }
        FrameSetSpec::Product { time, freq, modulus } => {
            let m = check_modulus(*modulus)?;
            if time.is_empty() || freq.is_empty() {
                return Err(Error::EmptyFrameSet);
            }
            let time = distinct_sorted(time, m, "time factor")?;
            let freq = distinct_sorted(freq, m, "frequency factor")?;
            let indices = time.iter().flat_map(|&k| freq.iter().map(move |&ell| TFIndex { k, ell })).collect();
            Ok(FrameSet { modulus: m, indices })
        }
        FrameSetSpec::BernoulliGrid { modulus, tau, stream } => {
            let m = check_modulus(*modulus)?;
            if !(*tau > 0.0 && *tau < 1.0) {
                return Err(Error::invalid(format!("inclusion probability must lie in (0,1), got {tau}")));
            }
            let mut rng = stream.generator();
            let mut indices = Vec::new();
            for k in 0..m {
                for ell in 0..m {
                    if rng.random::<f64>() < *tau {
                        indices.push(TFIndex { k, ell });
                    }
                }
            }
            Ok(FrameSet { modulus: m, indices })
        }
        FrameSetSpec::Explicit { indices, modulus } => {
            let m = check_modulus(*modulus)?;
            FrameSet::new(m, indices.iter().map(|&(k, l)| TFIndex::wrapped(k, l, m)).collect())
        }
    }
}

fn check_modulus(modulus: usize) -> Result<usize> {
    if modulus == 0 {
        return Err(Error::invalid("modulus must be at least 1"));
    }
    Ok(modulus)
}

impl FrameSet {
    /// Validates an explicit index list; order is preserved.
    pub fn new(modulus: usize, indices: Vec<TFIndex>) -> Result<Self> {
        check_modulus(modulus)?;
        let mut seen = HashSet::with_capacity(indices.len());
        for idx in &indices {
            if idx.k >= modulus || idx.ell >= modulus {
                return Err(Error::invalid(format!(
                    "index ({}, {}) outside Z_{modulus} x Z_{modulus}",
                    idx.k, idx.ell
                )));
            }
            if !seen.insert(*idx) {
                return Err(Error::DuplicateIndex { k: idx.k, ell: idx.ell });
            }
        }
        Ok(FrameSet { modulus, indices })
    }

    pub fn full_grid(modulus: usize) -> Result<Self> {
        build_frame_set(&FrameSetSpec::FullGrid { modulus })
    }

    /// `F × Z_M`.
    pub fn time_product(time: &[i64], modulus: usize) -> Result<Self> {
        build_frame_set(&FrameSetSpec::Product { time: time.to_vec(), freq: (0..modulus as i64).collect(), modulus })
    }

    /// Uniformly random subset of the full grid with exactly `size` cells,
    /// listed lexicographically.
    pub fn random_subset(modulus: usize, size: usize, stream: &RngStream) -> Result<Self> {
        check_modulus(modulus)?;
        let total = modulus * modulus;
        if size > total {
            return Err(Error::invalid(format!("cannot pick {size} of {total} cells")));
        }
        let mut rng = stream.generator();
        let mut cells: Vec<usize> = rand::seq::index::sample(&mut rng, total, size).into_vec();
        cells.sort_unstable();
        let indices = cells.into_iter().map(|c| TFIndex { k: c / modulus, ell: c % modulus }).collect();
        Ok(FrameSet { modulus, indices })
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn indices(&self) -> &[TFIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The subset at the given positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> Result<FrameSet> {
        let indices = positions
            .iter()
            .map(|&p| self.indices.get(p).copied().ok_or_else(|| Error::invalid(format!("position {p} out of range"))))
            .collect::<Result<Vec<_>>>()?;
        FrameSet::new(self.modulus, indices)
    }

    pub fn to_pairs(&self) -> Vec<(usize, usize)> {
        self.indices.iter().map(|i| (i.k, i.ell)).collect()
    }

    /// Writes the `k,ell` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "ell"])?;
        for idx in &self.indices {
            w.write_record([idx.k.to_string(), idx.ell.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `k,ell` CSV form. Lines starting with `#` are ignored.
    pub fn read_csv<R: Read>(reader: R, modulus: usize) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "k" || &headers[1] != "ell" {
            return Err(Error::invalid(format!("expected header `k,ell`, found {headers:?}")));
        }
        let mut pairs = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse =
                |s: &str| s.parse::<i64>().map_err(|_| Error::invalid(format!("bad index {s:?} in frame set CSV")));
            pairs.push((parse(&rec[0])?, parse(&rec[1])?));
        }
        build_frame_set(&FrameSetSpec::Explicit { indices: pairs, modulus })
    }
}

/// `A_k = {ℓ : (k, ℓ) ∈ Λ}` for every `k ∈ Z_M`, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberMap {
    modulus: usize,
    fibers: Vec<Vec<usize>>,
}

pub fn fibers(frame_set: &FrameSet) -> FiberMap {
    let m = frame_set.modulus();
    let mut fibers = vec![Vec::new(); m];
    for idx in frame_set.indices() {
        fibers[idx.k].push(idx.ell);
    }
    for f in &mut fibers {
        f.sort_unstable();
    }
    FiberMap { modulus: m, fibers }
}

impl FiberMap {
    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn fiber(&self, k: usize) -> &[usize] {
        &self.fibers[k]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.fibers.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.fibers.iter().map(Vec::len).sum()
    }

    /// Translations with a nonempty fiber.
    pub fn support(&self) -> Vec<usize> {
        (0..self.modulus).filter(|&k| !self.fibers[k].is_empty()).collect()
    }

    /// `table[k][d] = Σ_{ℓ ∈ A_k} e^{2πiℓd/M}`.
    pub fn exponential_sums(&self) -> Vec<Vec<Complex64>> {
        let m = self.modulus;
        self.fibers
            .iter()
            .map(|fiber| (0..m).map(|d| fiber.iter().map(|&l| root_of_unity((l * d) as i64, m)).sum()).collect())
            .collect()
    }
}

/// `max_{m ≠ 0} |Σ_{c ∈ C} e^{2πicm/M}|`, the unnormalized Fourier bias.
/// Elements of `set` are taken mod `modulus` and must be distinct.
pub fn fourier_bias(set: &[i64], modulus: usize) -> Result<f64> {
    if modulus < 2 {
        return Err(Error::invalid("Fourier bias needs M >= 2"));
    }
    let elems = distinct_sorted(set, modulus, "subset")?;
    let bias = (1..modulus)
        .map(|freq| elems.iter().map(|&c| root_of_unity((c * freq) as i64, modulus)).sum::<Complex64>().norm())
        .fold(0.0, f64::max);
    Ok(bias)
}

/// Random subset of `Z_M` with independent inclusions of probability `tau`.
pub fn bernoulli_subset(modulus: usize, tau: f64, stream: &RngStream) -> Vec<i64> {
    let mut rng = stream.generator();
    (0..modulus as i64).filter(|_| rng.random::<f64>() < tau).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinalities() {
        assert_eq!(FrameSet::full_grid(4).unwrap().len(), 16);
        let p =
            build_frame_set(&FrameSetSpec::Product { time: vec![2, 0], freq: (0..8).collect(), modulus: 8 }).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p.indices()[0], TFIndex { k: 0, ell: 0 });
        assert_eq!(p.indices()[8], TFIndex { k: 2, ell: 0 });
    }

    #[test]
    fn explicit_keeps_order_and_rejects_duplicates() {
        let s =
            build_frame_set(&FrameSetSpec::Explicit { indices: vec![(2, 1), (0, 3), (-4, 1)], modulus: 4 }).unwrap();
        assert_eq!(s.to_pairs(), vec![(2, 1), (0, 3), (0, 1)]);
        let dup = build_frame_set(&FrameSetSpec::Explicit { indices: vec![(1, 1), (5, 1)], modulus: 4 });
        assert!(matches!(dup, Err(Error::DuplicateIndex { k: 1, ell: 1 })));
    }

    #[test]
    fn empty_product_factor_is_error() {
        let r = build_frame_set(&FrameSetSpec::Product { time: vec![], freq: vec![0], modulus: 3 });
        assert!(matches!(r, Err(Error::EmptyFrameSet)));
    }

    #[test]
    fn bernoulli_rejects_bad_tau() {
        for tau in [0.0, 1.0, -0.2, f64::NAN] {
            let spec = FrameSetSpec::BernoulliGrid { modulus: 4, tau, stream: RngStream::new(0, 0) };
            assert!(build_frame_set(&spec).is_err());
        }
    }

    #[test]
    fn bernoulli_cardinality_concentrates() {
        let m = 32;
        let tau = 0.1;
        let n = (m * m) as f64;
        let half_width = 3.0 * (n * tau * (1.0 - tau)).sqrt();
        let root = RngStream::new(99, 0);
        let trials = 1000;
        let inside = (0..trials)
            .filter(|&t| {
                let s =
                    build_frame_set(&FrameSetSpec::BernoulliGrid { modulus: m, tau, stream: root.child(t) }).unwrap();
                (s.len() as f64 - tau * n).abs() <= half_width
            })
            .count();
        assert!(inside as f64 >= 0.99 * trials as f64, "{inside}/{trials}");
    }

    #[test]
    fn fiber_examples() {
        let full = fibers(&FrameSet::full_grid(3).unwrap());
        for k in 0..3 {
            assert_eq!(full.fiber(k), &[0, 1, 2]);
        }
        let prod = fibers(&FrameSet::time_product(&[1], 4).unwrap());
        assert_eq!(prod.sizes(), vec![0, 4, 0, 0]);

        let s = FrameSet::new(4, vec![TFIndex { k: 0, ell: 3 }, TFIndex { k: 0, ell: 1 }, TFIndex { k: 2, ell: 1 }])
            .unwrap();
        let f = fibers(&s);
        assert_eq!(f.fiber(0), &[1, 3]);
        assert_eq!(f.fiber(2), &[1]);
        assert!(f.fiber(1).is_empty() && f.fiber(3).is_empty());
        assert_eq!(f.total(), 3);
        assert_eq!(f.support(), vec![0, 2]);
    }

    #[test]
    fn fourier_bias_examples() {
        assert!(fourier_bias(&(0..9).collect::<Vec<_>>(), 9).unwrap() < 1e-12);
        assert!((fourier_bias(&[5], 9).unwrap() - 1.0).abs() < 1e-12);
        assert!((fourier_bias(&[0, 2], 4).unwrap() - 2.0).abs() < 1e-12);
        assert!(fourier_bias(&[0], 1).is_err());
        assert!(fourier_bias(&[1, 5], 4).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = FrameSet::new(5, vec![TFIndex { k: 4, ell: 0 }, TFIndex { k: 1, ell: 3 }]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "k,ell\n4,0\n1,3\n");
        assert_eq!(FrameSet::read_csv(buf.as_slice(), 5).unwrap(), s);
        assert!(FrameSet::read_csv("a,b\n1,2\n".as_bytes(), 5).is_err());
        assert!(FrameSet::read_csv("k,ell\n1,2\n1,2\n".as_bytes(), 5).is_err());
    }

    #[test]
    fn random_subset_has_requested_size() {
        let s = FrameSet::random_subset(8, 20, &RngStream::new(1, 1)).unwrap();
        assert_eq!(s.len(), 20);
        assert!(s.indices().windows(2).all(|w| w[0] < w[1]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bias_is_translation_and_reflection_invariant(
                modulus in 2usize..40,
                raw in prop::collection::btree_set(0i64..40, 1..20),
                shift in -100i64..100,
            ) {
                let set: Vec<i64> = raw.into_iter().filter(|&c| (c as usize) < modulus).collect();
                prop_assume!(!set.is_empty());
                let b = fourier_bias(&set, modulus).unwrap();
                let shifted: Vec<i64> = set.iter().map(|c| c + shift).collect();
                let reflected: Vec<i64> = set.iter().map(|c| -c).collect();
                prop_assert!((fourier_bias(&shifted, modulus).unwrap() - b).abs() < 1e-12 * set.len() as f64 + 1e-12);
                prop_assert!((fourier_bias(&reflected, modulus).unwrap() - b).abs() < 1e-12 * set.len() as f64 + 1e-12);
                prop_assert!(b >= 0.0 && b <= set.len() as f64 + 1e-12);
            }

            #[test]
            fn fiber_sizes_sum_to_cardinality(modulus in 1usize..12, tau in 0.05f64..0.95, seed in 0u64..1000) {
                let s = build_frame_set(&FrameSetSpec::BernoulliGrid { modulus, tau, stream: RngStream::new(seed, 0) }).unwrap();
                prop_assert_eq!(fibers(&s).total(), s.len());
            }
        }
    }
}
