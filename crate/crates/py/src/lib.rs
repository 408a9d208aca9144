//! Python bindings. Results that are records on the Rust side (summaries,
//! estimates, reports) come back as plain dicts.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use tfspectra::bounds;
use tfspectra::erasure::{self, HeuristicOptions};
use tfspectra::experiment::{self, ExperimentConfig};
use tfspectra::{trace, Error, FrameSetSpec, RngStream, WindowKind};

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::NoConvergence { .. } | Error::Io(_) | Error::Verification(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn value_to_py<'py>(py: Python<'py>, value: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match value {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        // Non-finite values serialize as the string "inf".
        Value::String(s) if s == "inf" => f64::INFINITY.into_pyobject(py)?.into_any(),
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, value_to_py(py, v)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    value_to_py(py, &json)
}

/// A vector over Z_M with cyclic indexing.
#[pyclass(name = "ModVector", module = "tfspectra", from_py_object)]
#[derive(Clone)]
pub struct PyModVector {
    inner: tfspectra::ModVector,
}

#[pymethods]
impl PyModVector {
    #[new]
    fn new(entries: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyModVector { inner: tfspectra::ModVector::new(entries).map_err(to_py_err)? })
    }

    #[staticmethod]
    fn from_real(entries: Vec<f64>) -> PyResult<Self> {
        Ok(PyModVector { inner: tfspectra::ModVector::from_real(&entries).map_err(to_py_err)? })
    }

    #[getter]
    fn modulus(&self) -> usize {
        self.inner.modulus()
    }

    fn entries(&self) -> Vec<Complex64> {
        self.inner.entries().to_vec()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn translate(&self, k: i64) -> Self {
        PyModVector { inner: tfspectra::translate(&self.inner, k) }
    }

    fn modulate(&self, ell: i64) -> Self {
        PyModVector { inner: tfspectra::modulate(&self.inner, ell) }
    }

    fn tf_shift(&self, k: i64, ell: i64) -> Self {
        let m = self.inner.modulus();
        PyModVector { inner: tfspectra::tf_shift(&self.inner, tfspectra::TFIndex::wrapped(k, ell, m)) }
    }

    fn dft(&self) -> Self {
        PyModVector { inner: tfspectra::dft(&self.inner) }
    }

    fn __len__(&self) -> usize {
        self.inner.modulus()
    }

    fn __repr__(&self) -> String {
        format!("ModVector(M={}, norm={:.6})", self.inner.modulus(), self.inner.norm())
    }
}

/// A set of distinct time-frequency indices (k, ell) in Z_M × Z_M.
#[pyclass(name = "FrameSet", module = "tfspectra", from_py_object)]
#[derive(Clone)]
pub struct PyFrameSet {
    inner: tfspectra::FrameSet,
}

#[pymethods]
impl PyFrameSet {
    #[new]
    fn new(modulus: usize, pairs: Vec<(i64, i64)>) -> PyResult<Self> {
        let inner =
            tfspectra::build_frame_set(&FrameSetSpec::Explicit { indices: pairs, modulus }).map_err(to_py_err)?;
        Ok(PyFrameSet { inner })
    }

    #[staticmethod]
    fn full_grid(modulus: usize) -> PyResult<Self> {
        Ok(PyFrameSet { inner: tfspectra::FrameSet::full_grid(modulus).map_err(to_py_err)? })
    }

    /// F × Z_M.
    #[staticmethod]
    fn time_product(time: Vec<i64>, modulus: usize) -> PyResult<Self> {
        Ok(PyFrameSet { inner: tfspectra::FrameSet::time_product(&time, modulus).map_err(to_py_err)? })
    }

    #[staticmethod]
    fn product(time: Vec<i64>, freq: Vec<i64>, modulus: usize) -> PyResult<Self> {
        let inner = tfspectra::build_frame_set(&FrameSetSpec::Product { time, freq, modulus }).map_err(to_py_err)?;
        Ok(PyFrameSet { inner })
    }

    /// Each index kept independently with probability tau.
    #[staticmethod]
    #[pyo3(signature = (modulus, tau, seed, substream = 0))]
    fn bernoulli(modulus: usize, tau: f64, seed: u64, substream: u64) -> PyResult<Self> {
        let spec = FrameSetSpec::BernoulliGrid { modulus, tau, stream: RngStream::new(seed, substream) };
        Ok(PyFrameSet { inner: tfspectra::build_frame_set(&spec).map_err(to_py_err)? })
    }

    #[staticmethod]
    fn read_csv(path: PathBuf, modulus: usize) -> PyResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| to_py_err(e.into()))?;
        Ok(PyFrameSet { inner: tfspectra::FrameSet::read_csv(file, modulus).map_err(to_py_err)? })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| to_py_err(e.into()))?;
        self.inner.write_csv(file).map_err(to_py_err)
    }

    #[getter]
    fn modulus(&self) -> usize {
        self.inner.modulus()
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        self.inner.to_pairs()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("FrameSet(M={}, size={})", self.inner.modulus(), self.inner.len())
    }
}

/// Draws a window: "steinhaus", "gaussian" or "sphere".
#[pyfunction]
#[pyo3(signature = (kind, modulus, seed, substream = 0))]
fn sample_window(kind: &str, modulus: usize, seed: u64, substream: u64) -> PyResult<PyModVector> {
    let kind: WindowKind = kind.parse().map_err(to_py_err)?;
    let inner = tfspectra::sample_window(&kind, modulus, &RngStream::new(seed, substream)).map_err(to_py_err)?;
    Ok(PyModVector { inner })
}

/// Dict with keys M, lambda_size, sigma_sq, cond (inf when not a frame).
#[pyfunction]
fn spectral_summary<'py>(py: Python<'py>, window: &PyModVector, frame_set: &PyFrameSet) -> PyResult<Bound<'py, PyAny>> {
    let s = py.detach(|| tfspectra::spectral_summary(&window.inner, &frame_set.inner)).map_err(to_py_err)?;
    to_dict(py, &s)
}

#[pyfunction]
fn diagonal_spectrum(window: &PyModVector, time: Vec<i64>) -> PyResult<Vec<f64>> {
    tfspectra::diagonal_spectrum(&window.inner, &time).map_err(to_py_err)
}

#[pyfunction]
fn analysis_coefficients(
    window: &PyModVector,
    frame_set: &PyFrameSet,
    signal: &PyModVector,
) -> PyResult<Vec<Complex64>> {
    tfspectra::spectral::analysis_coefficients(&window.inner, &frame_set.inner, &signal.inner).map_err(to_py_err)
}

#[pyfunction]
fn dual_reconstruct(
    window: &PyModVector,
    frame_set: &PyFrameSet,
    coefficients: Vec<Complex64>,
) -> PyResult<PyModVector> {
    let inner = tfspectra::dual_reconstruct(&window.inner, &frame_set.inner, &coefficients).map_err(to_py_err)?;
    Ok(PyModVector { inner })
}

#[pyfunction]
#[pyo3(signature = (frame_set, m, trials, seed, substream = 0))]
fn mc_trace_moment<'py>(
    py: Python<'py>,
    frame_set: &PyFrameSet,
    m: u32,
    trials: usize,
    seed: u64,
    substream: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let est = py
        .detach(|| trace::mc_trace_moment(&frame_set.inner, m, trials, &RngStream::new(seed, substream)))
        .map_err(to_py_err)?;
    to_dict(py, &est)
}

#[pyfunction]
#[pyo3(signature = (frame_set, m, budget = trace::DEFAULT_ENUMERATION_BUDGET))]
fn exact_trace_moment<'py>(
    py: Python<'py>,
    frame_set: &PyFrameSet,
    m: u32,
    budget: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let est = py.detach(|| trace::exact_trace_moment(&frame_set.inner, m, budget)).map_err(to_py_err)?;
    to_dict(py, &est)
}

#[pyfunction]
fn closed_form_trace2<'py>(py: Python<'py>, frame_set: &PyFrameSet) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &trace::closed_form_trace2(&frame_set.inner))
}

#[pyfunction]
fn thm4_sigma_bound(modulus: usize, lambda_size: usize, eps: f64) -> PyResult<f64> {
    Ok(bounds::thm4_sigma_bound(modulus, lambda_size, eps).map_err(to_py_err)?.value)
}

#[pyfunction]
fn thm5_failure_prob(m: u32, delta: f64, c: f64, c_prime: f64) -> PyResult<f64> {
    Ok(bounds::thm5_failure_prob(m, delta, c, c_prime).map_err(to_py_err)?.value)
}

/// (threshold, failure_prob).
#[pyfunction]
fn roots_of_unity_bound(modulus: usize, c_prime: f64) -> PyResult<(f64, f64)> {
    let b = bounds::roots_of_unity_bound(modulus, c_prime).map_err(to_py_err)?;
    Ok((b.threshold, b.failure_prob))
}

#[pyfunction]
fn fourier_bias(set: Vec<i64>, modulus: usize) -> PyResult<f64> {
    tfspectra::fourier_bias(&set, modulus).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (window, frame_set, p, budget = erasure::DEFAULT_ERASURE_BUDGET))]
fn delta_exhaustive<'py>(
    py: Python<'py>,
    window: &PyModVector,
    frame_set: &PyFrameSet,
    p: f64,
    budget: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| erasure::delta_exhaustive(&window.inner, &frame_set.inner, p, budget)).map_err(to_py_err)?;
    to_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (window, frame_set, p, restarts, seed, substream = 0))]
fn delta_heuristic<'py>(
    py: Python<'py>,
    window: &PyModVector,
    frame_set: &PyFrameSet,
    p: f64,
    restarts: usize,
    seed: u64,
    substream: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| {
            erasure::delta_heuristic(
                &window.inner,
                &frame_set.inner,
                p,
                HeuristicOptions::new(restarts),
                &RngStream::new(seed, substream),
            )
        })
        .map_err(to_py_err)?;
    to_dict(py, &r)
}

/// Runs an experiment from config text (key=value lines, including
/// `subcommand`). Returns {file name: contents}; nothing is written to disk.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<Vec<(String, String)>> {
    let cfg = ExperimentConfig::parse(config).map_err(to_py_err)?;
    let outcome = py.detach(|| experiment::run(&cfg)).map_err(to_py_err)?;
    if !outcome.failures.is_empty() {
        return Err(PyRuntimeError::new_err(format!("failed checks: {}", outcome.failures.join(", "))));
    }
    Ok(outcome.artifacts.files.into_iter().map(|a| (a.name, a.contents)).collect())
}

#[pymodule]
#[pyo3(name = "tfspectra")]
fn tfspectra_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModVector>()?;
    m.add_class::<PyFrameSet>()?;
    m.add_function(wrap_pyfunction!(sample_window, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_summary, m)?)?;
    m.add_function(wrap_pyfunction!(diagonal_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(analysis_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(dual_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(mc_trace_moment, m)?)?;
    m.add_function(wrap_pyfunction!(exact_trace_moment, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_trace2, m)?)?;
    m.add_function(wrap_pyfunction!(thm4_sigma_bound, m)?)?;
    m.add_function(wrap_pyfunction!(thm5_failure_prob, m)?)?;
    m.add_function(wrap_pyfunction!(roots_of_unity_bound, m)?)?;
    m.add_function(wrap_pyfunction!(fourier_bias, m)?)?;
    m.add_function(wrap_pyfunction!(delta_exhaustive, m)?)?;
    m.add_function(wrap_pyfunction!(delta_heuristic, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
