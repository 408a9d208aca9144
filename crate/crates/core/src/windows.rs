//! Random Gabor windows and i.i.d. Gaussian baseline matrices.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::modvec::ModVector;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub enum WindowKind {
    /// `g(m) = M^{-1/2} e^{2πi y_m}` with `y_m` uniform on `[0, 1)`.
    Steinhaus,
    /// `g ~ CN(0, I/M)`.
    ComplexGaussian,
    /// Uniform on the complex unit sphere.
    UniformSphere,
    Fixed(ModVector),
}

impl WindowKind {
    pub fn name(&self) -> &'static str {
        match self {
            WindowKind::Steinhaus => "steinhaus",
            WindowKind::ComplexGaussian => "gaussian",
            WindowKind::UniformSphere => "sphere",
            WindowKind::Fixed(_) => "fixed",
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "steinhaus" => Ok(WindowKind::Steinhaus),
            "gaussian" | "complex-gaussian" | "complexgaussian" => Ok(WindowKind::ComplexGaussian),
            "sphere" | "uniform-sphere" | "uniformsphere" => Ok(WindowKind::UniformSphere),
            other => Err(Error::invalid(format!("unknown window kind {other:?}"))),
        }
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, std_per_part: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * std_per_part, im * std_per_part)
}

pub fn sample_window(kind: &WindowKind, modulus: usize, stream: &RngStream) -> Result<ModVector> {
    if modulus == 0 {
        return Err(Error::invalid("window modulus must be at least 1"));
    }
    let mut rng = stream.generator();
    let entries = match kind {
        WindowKind::Steinhaus => {
            let amp = 1.0 / (modulus as f64).sqrt();
            (0..modulus)
                .map(|_| {
                    let y: f64 = rng.random();
                    Complex64::from_polar(amp, 2.0 * PI * y)
                })
                .collect()
        }
        WindowKind::ComplexGaussian => {
            let s = (0.5 / modulus as f64).sqrt();
            (0..modulus).map(|_| complex_gaussian(&mut rng, s)).collect()
        }
        WindowKind::UniformSphere => {
            let s = (0.5 / modulus as f64).sqrt();
            let h: Vec<Complex64> = (0..modulus).map(|_| complex_gaussian(&mut rng, s)).collect();
            let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::invalid("degenerate Gaussian draw"));
            }
            h.into_iter().map(|z| z / norm).collect()
        }
        WindowKind::Fixed(v) => {
            v.check_modulus(modulus)?;
            return Ok(v.clone());
        }
    };
    ModVector::new(entries)
}

/// `rows × cols` matrix with i.i.d. `CN(0, 1/cols)` entries.
pub fn iid_gaussian_matrix(rows: usize, cols: usize, stream: &RngStream) -> Result<ComplexMatrix> {
    if cols == 0 || rows < cols {
        return Err(Error::invalid(format!("iid Gaussian matrix needs N >= M >= 1, got N={rows}, M={cols}")));
    }
    let mut rng = stream.generator();
    let s = (0.5 / cols as f64).sqrt();
    let data = (0..rows * cols).map(|_| complex_gaussian(&mut rng, s)).collect();
    ComplexMatrix::from_row_major(rows, cols, data)
}
