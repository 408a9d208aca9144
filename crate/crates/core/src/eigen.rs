//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation `U = [[c, s e^{iφ}], [−s e^{−iφ}, c]]` annihilates one
//! off-diagonal pair, where `φ = arg a_pq` and `(c, s)` is the classical real
//! Jacobi rotation of the phase-stripped 2×2 block.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Relative Hermitian defect accepted on input.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiOptions {
    /// Stop when the off-diagonal Frobenius norm falls below `tolerance · ‖A‖_F`.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        JacobiOptions { tolerance: 1e-12, max_sweeps: 64 }
    }
}

/// Eigenvalues ascending, eigenvectors as the matching columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

fn validate(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    Ok(())
}

pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigenvalues_with(a, JacobiOptions::default())
}

pub fn hermitian_eigenvalues_with(a: &ComplexMatrix, opts: JacobiOptions) -> Result<Vec<f64>> {
    validate(a)?;
    let mut work = Workspace::new(a, false);
    work.run(opts)?;
    let mut values = work.diagonal();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn hermitian_eigen(a: &ComplexMatrix, opts: JacobiOptions) -> Result<HermitianEigen> {
    validate(a)?;
    let n = a.rows();
    let mut work = Workspace::new(a, true);
    work.run(opts)?;
    let diag = work.diagonal();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let v = work.vectors.expect("vectors requested");
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, new_col)] = v[r * n + old_col];
        }
    }
    Ok(HermitianEigen { values: order.iter().map(|&i| diag[i]).collect(), vectors })
}

struct Workspace {
    n: usize,
    a: Vec<Complex64>,
    vectors: Option<Vec<Complex64>>,
}

impl Workspace {
    fn new(a: &ComplexMatrix, want_vectors: bool) -> Self {
        let n = a.rows();
        let mut data = a.as_slice().to_vec();
        // symmetrize so the rotation updates can rely on exact Hermitian structure
        for i in 0..n {
            data[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                let avg = (data[i * n + j] + data[j * n + i].conj()) * 0.5;
                data[i * n + j] = avg;
                data[j * n + i] = avg.conj();
            }
        }
        let vectors = want_vectors.then(|| {
            let mut v = vec![Complex64::new(0.0, 0.0); n * n];
            for i in 0..n {
                v[i * n + i] = Complex64::new(1.0, 0.0);
            }
            v
        });
        Workspace { n, a: data, vectors }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.a[i * self.n + i].re).collect()
    }

    fn off_norm_sqr(&self) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += self.a[i * n + j].norm_sqr();
            }
        }
        2.0 * s
    }

    fn run(&mut self, opts: JacobiOptions) -> Result<()> {
        let n = self.n;
        let total: f64 = self.a.iter().map(|z| z.norm_sqr()).sum();
        let target = (opts.tolerance * total.sqrt()).powi(2);
        if n < 2 || total == 0.0 {
            return Ok(());
        }
        let mut off = self.off_norm_sqr();
        let mut sweeps = 0;
        while off > target {
            if sweeps == opts.max_sweeps {
                return Err(Error::NoConvergence { sweeps, off: off.sqrt() });
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    self.rotate(p, q);
                }
            }
            sweeps += 1;
            off = self.off_norm_sqr();
        }
        Ok(())
    }

    #[inline]
    fn rotate(&mut self, p: usize, q: usize) {
        let n = self.n;
        let b = self.a[p * n + q];
        let abs_b = b.norm();
        if abs_b == 0.0 {
            return;
        }
        let app = self.a[p * n + p].re;
        let aqq = self.a[q * n + q].re;
        let theta = (aqq - app) / (2.0 * abs_b);
        let t = if theta.is_infinite() { 0.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
        if t == 0.0 {
            // |a_pq| is below the resolution of the diagonal gap
            self.a[p * n + q] = Complex64::new(0.0, 0.0);
            self.a[q * n + p] = Complex64::new(0.0, 0.0);
            return;
        }
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        let phase = b / abs_b;
        let s_minus = phase.conj() * s; // s e^{−iφ}
        let s_plus = phase * s; // s e^{iφ}

        for r in 0..n {
            if r == p || r == q {
                continue;
            }
            let arp = self.a[r * n + p];
            let arq = self.a[r * n + q];
            let new_rp = arp * c - s_minus * arq;
            let new_rq = s_plus * arp + arq * c;
            self.a[r * n + p] = new_rp;
            self.a[r * n + q] = new_rq;
            self.a[p * n + r] = new_rp.conj();
            self.a[q * n + r] = new_rq.conj();
        }
        self.a[p * n + p] = Complex64::new(app - t * abs_b, 0.0);
        self.a[q * n + q] = Complex64::new(aqq + t * abs_b, 0.0);
        self.a[p * n + q] = Complex64::new(0.0, 0.0);
        self.a[q * n + p] = Complex64::new(0.0, 0.0);

        if let Some(v) = self.vectors.as_mut() {
            for r in 0..n {
                let vrp = v[r * n + p];
                let vrq = v[r * n + q];
                v[r * n + p] = vrp * c - s_minus * vrq;
                v[r * n + q] = s_plus * vrp + vrq * c;
            }
        }
    }
}
