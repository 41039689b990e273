//! Python bindings: codes, decoders, channel updates, PEXIT thresholds,
//! spreading signatures and FER sweeps.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use gmac_ldpc::gmac::{self, ChannelConfig};
use gmac_ldpc::ldpc;
use gmac_ldpc::pexit::{self, Estimator, StateInfoMode, ThresholdConfig};
use gmac_ldpc::protograph::{self, write_alist};
use gmac_ldpc::sim::{self, CodeSource, Layout, SimConfig};
use gmac_ldpc::spreading;
use gmac_ldpc::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidProtograph(_)
        | Error::Parse { .. }
        | Error::Dimension(_)
        | Error::Spreading(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Protograph", frozen)]
struct PyProtograph {
    inner: protograph::Protograph,
}

#[pymethods]
impl PyProtograph {
    #[new]
    fn new(rows: Vec<Vec<u32>>) -> PyResult<Self> {
        let r: Vec<&[u32]> = rows.iter().map(Vec::as_slice).collect();
        protograph::Protograph::from_rows(&r)
            .map(|inner| PyProtograph { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        protograph::Protograph::parse(text)
            .map(|inner| PyProtograph { inner })
            .map_err(err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    #[getter]
    fn design_rate(&self) -> f64 {
        self.inner.design_rate()
    }

    fn to_rows(&self) -> Vec<Vec<u32>> {
        self.inner.entries().chunks(self.inner.cols()).map(<[u32]>::to_vec).collect()
    }

    fn repetition(&self) -> Self {
        PyProtograph {
            inner: self.inner.repetition(),
        }
    }

    #[pyo3(signature = (z, seed = 0))]
    fn lift(&self, z: usize, seed: u64) -> PyResult<PyLiftedCode> {
        protograph::lift(&self.inner, z, seed)
            .map(|inner| PyLiftedCode { inner })
            .map_err(err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Protograph({:?})", self.to_rows())
    }
}

#[pyclass(name = "LiftedCode", frozen)]
struct PyLiftedCode {
    inner: protograph::LiftedCode,
}

#[pymethods]
impl PyLiftedCode {
    #[staticmethod]
    fn from_alist(text: &str) -> PyResult<Self> {
        let h = protograph::parse_alist(text).map_err(err)?;
        protograph::LiftedCode::from_parity_check(h)
            .map(|inner| PyLiftedCode { inner })
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (z, seed = 0))]
    fn baseline(z: usize, seed: u64) -> PyResult<Self> {
        sim::baseline_code(z, seed).map(|inner| PyLiftedCode { inner }).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate()
    }

    fn encode(&self, info: Vec<u8>) -> PyResult<Vec<u8>> {
        if info.len() != self.inner.k() || info.iter().any(|&b| b > 1) {
            return Err(PyValueError::new_err(format!(
                "expected {} bits of 0/1",
                self.inner.k()
            )));
        }
        Ok(self.inner.encode(&info))
    }

    fn is_codeword(&self, word: Vec<u8>) -> bool {
        word.len() == self.inner.n() && self.inner.is_codeword(&word)
    }

    fn four_cycles(&self) -> usize {
        self.inner.h().count_four_cycles()
    }

    fn to_alist(&self) -> String {
        write_alist(self.inner.h())
    }

    /// Single-user sum-product decoding; returns (codeword, converged, iterations).
    fn bp_decode(&self, llr: Vec<f64>, max_iters: usize) -> PyResult<(Vec<u8>, bool, usize)> {
        if llr.len() != self.inner.n() {
            return Err(PyValueError::new_err("llr length differs from n"));
        }
        let out = ldpc::bp_decode(&self.inner, &llr, max_iters);
        Ok((out.codeword, out.converged, out.iterations))
    }
}

#[pyfunction]
fn check_update(others: Vec<f64>) -> f64 {
    ldpc::check_update(&others)
}

#[pyfunction]
fn variable_update(others: Vec<f64>, state_llr: f64) -> f64 {
    ldpc::variable_update(&others, state_llr)
}

/// Extrinsic LLR of one user at a functional node given the other users' priors.
#[pyfunction]
#[pyo3(signature = (y, others, power = 1.0, n0 = 1.0))]
fn functional_node_update(y: f64, others: Vec<f64>, power: f64, n0: f64) -> PyResult<f64> {
    let cfg = ChannelConfig::new(others.len() + 1, power, n0).map_err(err)?;
    Ok(gmac::functional_node_update(y, &others, &cfg))
}

#[pyfunction]
fn j_func(sigma: f64) -> f64 {
    pexit::j_func(sigma)
}

#[pyfunction]
fn j_inv(info: f64) -> PyResult<f64> {
    pexit::j_inv(info).map_err(err)
}

/// PEXIT threshold in dB; returns None when no threshold lies in range.
#[pyfunction]
#[pyo3(signature = (proto, users, estimator = "mixture", samples = 10000, seed = 0, tabulated = false, lo_db = -2.0, hi_db = 12.0, resolution_db = 0.01))]
#[allow(clippy::too_many_arguments)]
fn pexit_threshold(
    py: Python<'_>,
    proto: &PyProtograph,
    users: usize,
    estimator: &str,
    samples: usize,
    seed: u64,
    tabulated: bool,
    lo_db: f64,
    hi_db: f64,
    resolution_db: f64,
) -> PyResult<Option<f64>> {
    let estimator: Estimator = estimator.parse().map_err(err)?;
    let cfg = ThresholdConfig {
        estimator,
        samples,
        seed,
        lo_db,
        hi_db,
        resolution_db,
        mode: if tabulated {
            StateInfoMode::Tabulated
        } else {
            StateInfoMode::MonteCarlo
        },
        ..ThresholdConfig::new(users)
    };
    let p = proto.inner.clone();
    match py.detach(|| pexit::pexit_threshold(&p, &cfg)) {
        Ok(t) => Ok(Some(t.ebn0_db)),
        Err(Error::NoThreshold { .. }) => Ok(None),
        Err(e) => Err(err(e)),
    }
}

/// Sparse spreading signatures as a list of per-user chip indices.
#[pyfunction]
#[pyo3(signature = (users, n, n_prime, seed = 0))]
fn generate_signatures(users: usize, n: usize, n_prime: usize, seed: u64) -> PyResult<Vec<Vec<usize>>> {
    spreading::generate_signatures(users, n, n_prime, seed)
        .map(|s| s.chip_of)
        .map_err(err)
}

/// (ebn0_db, frames, frame_errors, fer, ber, ci_low, ci_high)
type PointTuple = (f64, u64, u64, f64, f64, f64, f64);

/// FER sweep; returns one `PointTuple` per point.
#[pyfunction]
#[pyo3(signature = (code, users, ebn0_db, frames, stop_after_errors = 100, outer = 30, inner = 2, seed = 0, n_prime = None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    code: &PyLiftedCode,
    users: usize,
    ebn0_db: Vec<f64>,
    frames: usize,
    stop_after_errors: usize,
    outer: usize,
    inner: usize,
    seed: u64,
    n_prime: Option<usize>,
) -> PyResult<Vec<PointTuple>> {
    let cfg = SimConfig {
        stop_after_errors,
        schedule: gmac::Schedule { outer, inner },
        seed,
        layout: n_prime.map_or(Layout::Unspread, |n_prime| Layout::Spread { n_prime }),
        ..SimConfig::new(users, ebn0_db, frames)
    };
    let points = py.detach(|| sim::run_fer_sweep(&code.inner, &cfg)).map_err(err)?;
    Ok(points
        .into_iter()
        .map(|p| (p.ebn0_db, p.frames, p.frame_errors, p.fer, p.ber, p.ci_low, p.ci_high))
        .collect())
}

/// Builds the code described by a JSON code-source object.
#[pyfunction]
#[pyo3(signature = (source_json, base_dir = "."))]
fn build_code(source_json: &str, base_dir: &str) -> PyResult<PyLiftedCode> {
    let src: CodeSource = serde_json::from_str(source_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    src.build(Path::new(base_dir))
        .map(|inner| PyLiftedCode { inner })
        .map_err(err)
}

#[pymodule]
fn gmac_ldpc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProtograph>()?;
    m.add_class::<PyLiftedCode>()?;
    m.add_function(wrap_pyfunction!(check_update, m)?)?;
    m.add_function(wrap_pyfunction!(variable_update, m)?)?;
    m.add_function(wrap_pyfunction!(functional_node_update, m)?)?;
    m.add_function(wrap_pyfunction!(j_func, m)?)?;
    m.add_function(wrap_pyfunction!(j_inv, m)?)?;
    m.add_function(wrap_pyfunction!(pexit_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(generate_signatures, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(build_code, m)?)?;
    Ok(())
}
