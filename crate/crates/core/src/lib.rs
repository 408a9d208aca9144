//! Extreme singular values of finite Gabor frames with random windows.
//!
//! The crate builds Gabor systems `(g, Λ)` over `Z_M`, computes the spectra of
//! their frame operators, evaluates trace moments of the centered frame
//! operator (by Monte Carlo and by exact enumeration), evaluates the analytic
//! tail bounds, estimates erasure robustness and drives the batch experiments
//! behind the `spectra` CLI.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod eigen;
pub mod erasure;
pub mod error;
pub mod experiment;
pub mod frameset;
pub mod gabor;
pub mod matrix;
pub mod modvec;
pub mod rng;
pub mod spectral;
pub mod trace;
pub mod windows;

pub use error::{Error, Result};
pub use frameset::{build_frame_set, fibers, fourier_bias, FiberMap, FrameSet, FrameSetSpec};
pub use gabor::{frame_operator, synthesis_matrix};
pub use matrix::ComplexMatrix;
pub use modvec::{dft, modulate, tf_shift, translate, ModVector, TFIndex};
pub use num_complex::Complex64;
pub use rng::RngStream;
pub use spectral::{diagonal_spectrum, dual_reconstruct, spectral_summary, SpectralSummary};
pub use trace::{
    closed_form_trace2, exact_trace_moment, h_matrix, mc_trace_moment, normalized_trace_expectation,
    stirling_first_total, trace_power, TraceMethod, TraceMomentEstimate,
};
pub use windows::{iid_gaussian_matrix, sample_window, WindowKind};
