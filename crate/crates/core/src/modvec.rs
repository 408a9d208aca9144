//! Complex vectors indexed by the cyclic group Z_M and the unitary operators
//! acting on them: cyclic translation, modulation, time-frequency shifts and
//! the normalized DFT.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduces an arbitrary (possibly negative) integer into `[0, modulus)`.
#[inline]
pub fn wrap(index: i64, modulus: usize) -> usize {
    index.rem_euclid(modulus as i64) as usize
}

/// `e^{2πi·numer/modulus}`, with the numerator reduced first so that large
/// products do not lose phase accuracy.
#[inline]
pub fn root_of_unity(numer: i64, modulus: usize) -> Complex64 {
    let r = wrap(numer, modulus);
    Complex64::from_polar(1.0, 2.0 * PI * r as f64 / modulus as f64)
}

/// A time-frequency index `(k, ℓ)` in `Z_M × Z_M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TFIndex {
    pub k: usize,
    pub ell: usize,
}

impl TFIndex {
    /// Builds an index from arbitrary integers, wrapping both into `[0, modulus)`.
    pub fn wrapped(k: i64, ell: i64, modulus: usize) -> Self {
        TFIndex { k: wrap(k, modulus), ell: wrap(ell, modulus) }
    }
}

/// A vector `x: Z_M → C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModVector {
    entries: Vec<Complex64>,
}

impl ModVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("ModVector needs modulus M >= 1"));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("ModVector entries must be finite"));
        }
        Ok(ModVector { entries })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(modulus: usize) -> Self {
        assert!(modulus >= 1);
        ModVector { entries: vec![Complex64::new(0.0, 0.0); modulus] }
    }

    /// The Kronecker delta at `index`.
    pub fn delta(modulus: usize, index: i64) -> Self {
        let mut v = Self::zeros(modulus);
        v.entries[wrap(index, modulus)] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn modulus(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    /// Entry at a cyclic index.
    #[inline]
    pub fn at(&self, index: i64) -> Complex64 {
        self.entries[wrap(index, self.modulus())]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> ModVector {
        ModVector { entries: self.entries.iter().map(|&z| z * factor).collect() }
    }

    /// Euclidean distance `‖self − other‖₂`.
    pub fn distance(&self, other: &ModVector) -> f64 {
        debug_assert_eq!(self.modulus(), other.modulus());
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn check_modulus(&self, expected: usize) -> Result<()> {
        if self.modulus() != expected {
            return Err(Error::ModulusMismatch { expected, actual: self.modulus() });
        }
        Ok(())
    }
}

/// Cyclic translation `(T_k x)(m) = x(m − k)`.
pub fn translate(x: &ModVector, k: i64) -> ModVector {
    let modulus = x.modulus();
    let shift = wrap(k, modulus);
    let entries = (0..modulus).map(|m| x.entries[(m + modulus - shift) % modulus]).collect();
    ModVector { entries }
}

/// Modulation `(M_ℓ x)(m) = e^{2πiℓm/M} x(m)`.
pub fn modulate(x: &ModVector, ell: i64) -> ModVector {
    let modulus = x.modulus();
    let ell = wrap(ell, modulus);
    let entries = x.entries.iter().enumerate().map(|(m, &v)| root_of_unity((ell * m) as i64, modulus) * v).collect();
    ModVector { entries }
}

/// Time-frequency shift `π(k, ℓ) = M_ℓ T_k`.
pub fn tf_shift(x: &ModVector, index: TFIndex) -> ModVector {
    let modulus = x.modulus();
    let k = index.k % modulus;
    let ell = index.ell % modulus;
    let entries = (0..modulus)
        .map(|m| root_of_unity((ell * m) as i64, modulus) * x.entries[(m + modulus - k) % modulus])
        .collect();
    ModVector { entries }
}

/// Unitary DFT `(Wx)(k) = M^{-1/2} Σ_m e^{−2πikm/M} x(m)`, evaluated directly.
pub fn dft(x: &ModVector) -> ModVector {
    let modulus = x.modulus();
    let norm = 1.0 / (modulus as f64).sqrt();
    let entries = (0..modulus)
        .map(|k| {
            let acc: Complex64 =
                x.entries.iter().enumerate().map(|(m, &v)| root_of_unity(-((k * m) as i64), modulus) * v).sum();
            acc * norm
        })
        .collect();
    ModVector { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &ModVector, b: &ModVector, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    fn sample(modulus: usize, salt: u64) -> ModVector {
        // small deterministic pseudo-random vector for unit tests
        let mut state = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        ModVector::new((0..modulus).map(|_| c(next(), next())).collect()).unwrap()
    }

    #[test]
    fn translate_rotates_right() {
        let x = ModVector::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let y = translate(&x, 1);
        assert_eq!(y.entries(), &[c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(translate(&x, 0), x);
        assert_eq!(translate(&x, 3), x);
        assert_eq!(translate(&x, -2), y);
    }

    #[test]
    fn modulate_by_half_band_alternates_sign() {
        let x = ModVector::new(vec![c(1.0, 0.5), c(2.0, 0.0), c(3.0, -1.0), c(4.0, 2.0)]).unwrap();
        let y = modulate(&x, 2);
        let expected = ModVector::new(vec![c(1.0, 0.5), c(-2.0, 0.0), c(3.0, -1.0), c(-4.0, -2.0)]).unwrap();
        assert!(close(&y, &expected, 1e-14));
        assert_eq!(modulate(&x, 0), x);

        let ones = ModVector::from_real(&[1.0, 1.0]).unwrap();
        assert!(close(&modulate(&ones, 1), &ModVector::from_real(&[1.0, -1.0]).unwrap(), 1e-15));
    }

    #[test]
    fn tf_shift_hand_case() {
        let x = ModVector::from_real(&[1.0, 0.0]).unwrap();
        let y = tf_shift(&x, TFIndex { k: 1, ell: 1 });
        assert!(close(&y, &ModVector::from_real(&[0.0, -1.0]).unwrap(), 1e-15));
        assert_eq!(tf_shift(&x, TFIndex { k: 0, ell: 0 }), x);
    }

    #[test]
    fn dft_of_delta_and_constant() {
        for modulus in [1usize, 2, 5, 8] {
            let d = dft(&ModVector::delta(modulus, 0));
            let flat = 1.0 / (modulus as f64).sqrt();
            assert!(d.entries().iter().all(|z| (z - c(flat, 0.0)).norm() < 1e-14));

            let ones = ModVector::from_real(&vec![1.0; modulus]).unwrap();
            let e = dft(&ones);
            let expected = ModVector::delta(modulus, 0).scale(c((modulus as f64).sqrt(), 0.0));
            assert!(close(&e, &expected, 1e-12));
        }
    }

    #[test]
    fn commutation_relation() {
        let modulus = 7;
        let x = sample(modulus, 3);
        for k in 0..modulus as i64 {
            for ell in 0..modulus as i64 {
                let lhs = modulate(&translate(&x, k), ell);
                let rhs = translate(&modulate(&x, ell), k).scale(root_of_unity(k * ell, modulus));
                assert!(close(&lhs, &rhs, 1e-12));
            }
        }
    }

    #[test]
    fn dft_conjugates_time_frequency_shifts() {
        for modulus in [4usize, 9] {
            let g = sample(modulus, 11);
            let wg = dft(&g);
            for k in 0..modulus as i64 {
                for ell in 0..modulus as i64 {
                    let lhs = dft(&tf_shift(&g, TFIndex::wrapped(k, ell, modulus)));
                    let rhs = tf_shift(&wg, TFIndex::wrapped(ell, -k, modulus)).scale(root_of_unity(k * ell, modulus));
                    assert!(close(&lhs, &rhs, 1e-10), "k={k} ell={ell}");
                }
            }
        }
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(ModVector::new(vec![]).is_err());
        assert!(ModVector::new(vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ModVector::new(vec![c(0.0, f64::INFINITY)]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vector() -> impl Strategy<Value = ModVector> {
            prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..24)
                .prop_map(|v| ModVector::new(v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
        }

        proptest! {
            #[test]
            fn operators_preserve_norm(x in vector(), k in -50i64..50, ell in -50i64..50) {
                let n = x.norm();
                let tol = 1e-12 * n.max(1e-300);
                prop_assert!((translate(&x, k).norm() - n).abs() <= tol);
                prop_assert!((modulate(&x, ell).norm() - n).abs() <= tol);
                let idx = TFIndex::wrapped(k, ell, x.modulus());
                prop_assert!((tf_shift(&x, idx).norm() - n).abs() <= tol);
                prop_assert!((dft(&x).norm() - n).abs() <= tol);
            }

            #[test]
            fn tf_shift_is_modulated_translate(x in vector(), k in -50i64..50, ell in -50i64..50) {
                let idx = TFIndex::wrapped(k, ell, x.modulus());
                let a = tf_shift(&x, idx);
                let b = modulate(&translate(&x, k), ell);
                prop_assert!(a.distance(&b) <= 1e-12 * x.norm().max(1.0));
            }
        }
    }
}
