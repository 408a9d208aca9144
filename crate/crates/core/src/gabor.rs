use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frameset::{fibers, FrameSet};
use crate::matrix::ComplexMatrix;
use crate::modvec::{root_of_unity, ModVector};

fn check_inputs(window: &ModVector, frame_set: &FrameSet) -> Result<()> {
    window.check_modulus(frame_set.modulus())?;
    if frame_set.is_empty() {
        return Err(Error::EmptyFrameSet);
    }
    Ok(())
}

/// `M × |Λ|` matrix whose columns are `π(λ)g` in frame-set order.
pub fn synthesis_matrix(window: &ModVector, frame_set: &FrameSet) -> Result<ComplexMatrix> {
    check_inputs(window, frame_set)?;
    let m = frame_set.modulus();
    let n = frame_set.len();
    let mut out = ComplexMatrix::zeros(m, n);
    for (col, idx) in frame_set.indices().iter().enumerate() {
        for row in 0..m {
            out[(row, col)] = root_of_unity((idx.ell * row) as i64, m) * window.at(row as i64 - idx.k as i64);
        }
    }
    Ok(out)
}

/// The frame operator `Φ Φ*`.
///
/// Grouping columns by translation gives
/// `S(a, b) = Σ_k g(a−k) conj(g(b−k)) Σ_{ℓ∈A_k} e^{2πiℓ(a−b)/M}`,
/// so the cost is `M²` per nonempty fiber rather than per column.
pub fn frame_operator(window: &ModVector, frame_set: &FrameSet) -> Result<ComplexMatrix> {
    check_inputs(window, frame_set)?;
    let m = frame_set.modulus();
    let fib = fibers(frame_set);
    let sums = fib.exponential_sums();
    let g = window.entries();
    let mut out = ComplexMatrix::zeros(m, m);
    for k in fib.support() {
        let e = &sums[k];
        for a in 0..m {
            let ga = g[(a + m - k) % m];
            for b in a..m {
                let d = (a + m - b) % m;
                out[(a, b)] += ga * g[(b + m - k) % m].conj() * e[d];
            }
        }
    }
    for a in 0..m {
        out[(a, a)] = Complex64::new(out[(a, a)].re, 0.0);
        for b in (a + 1)..m {
            out[(b, a)] = out[(a, b)].conj();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frameset::{build_frame_set, FrameSetSpec};
    use crate::modvec::tf_shift;
    use crate::rng::RngStream;
    use crate::windows::{sample_window, WindowKind};

    #[test]
    fn two_shifts_of_delta_give_identity() {
        let g = ModVector::from_real(&[1.0, 0.0]).unwrap();
        let s = FrameSet::new(2, vec![crate::TFIndex { k: 0, ell: 0 }, crate::TFIndex { k: 1, ell: 0 }]).unwrap();
        let phi = synthesis_matrix(&g, &s).unwrap();
        assert!(phi.sub(&ComplexMatrix::identity(2)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn columns_are_shifts_with_window_norm() {
        let g = sample_window(&WindowKind::ComplexGaussian, 6, &RngStream::new(4, 4)).unwrap();
        let s = FrameSet::full_grid(6).unwrap();
        let phi = synthesis_matrix(&g, &s).unwrap();
        assert_eq!(phi.cols(), 36);
        for (j, idx) in s.indices().iter().enumerate() {
            let col = phi.column(j);
            let expect = tf_shift(&g, *idx);
            let err: f64 = col.iter().zip(expect.entries()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-14);
            let n: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((n - g.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn fiber_form_matches_explicit_product() {
        for (seed, tau) in [(1u64, 0.2), (2, 0.5), (3, 0.9)] {
            let s = build_frame_set(&FrameSetSpec::BernoulliGrid { modulus: 9, tau, stream: RngStream::new(seed, 0) })
                .unwrap();
            let g = sample_window(&WindowKind::ComplexGaussian, 9, &RngStream::new(seed, 1)).unwrap();
            let phi = synthesis_matrix(&g, &s).unwrap();
            let direct = phi.matmul(&phi.adjoint()).unwrap();
            let fast = frame_operator(&g, &s).unwrap();
            assert!(direct.sub(&fast).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn steinhaus_time_product_is_tight() {
        let m = 12;
        let g = sample_window(&WindowKind::Steinhaus, m, &RngStream::new(8, 0)).unwrap();
        let s = FrameSet::time_product(&[0, 3, 7], m).unwrap();
        let op = frame_operator(&g, &s).unwrap();
        let mut target = ComplexMatrix::identity(m);
        target.shift_diagonal(2.0);
        assert!(op.sub(&target).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn trace_and_hermitian() {
        let g = sample_window(&WindowKind::UniformSphere, 7, &RngStream::new(5, 5)).unwrap();
        let s = build_frame_set(&FrameSetSpec::BernoulliGrid { modulus: 7, tau: 0.3, stream: RngStream::new(5, 6) })
            .unwrap();
        let op = frame_operator(&g, &s).unwrap();
        assert!((op.trace().re - s.len() as f64).abs() < 1e-10);
        assert_eq!(op.hermitian_defect(), 0.0);
    }

    #[test]
    fn input_errors() {
        let g = ModVector::delta(3, 0);
        let s = FrameSet::full_grid(4).unwrap();
        assert!(matches!(synthesis_matrix(&g, &s), Err(Error::ModulusMismatch { .. })));
        let empty = FrameSet::new(3, vec![]).unwrap();
        assert!(matches!(frame_operator(&g, &empty), Err(Error::EmptyFrameSet)));
    }
}
