//! Python bindings: grids, hydrogen sector states, splitting error sweeps,
//! rate fits, operator-identity checks and the closed-form constants.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use trotterlab::bounds::{self, Rational};
use trotterlab::oracle::{run_check, Check};
use trotterlab::ratefit::{self, ConvergenceSeries};
use trotterlab::spectral::Coulomb;
use trotterlab::states::{self, MultiSectorState};
use trotterlab::trotter::{build_contexts, trotter_sweep, Backend, SplittingScheme};
use trotterlab::{cutoff, norms, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Parse { .. } => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn scheme(name: &str) -> PyResult<SplittingScheme> {
    name.parse().map_err(to_py)
}

#[pyclass(frozen, name = "RadialGrid")]
struct PyRadialGrid {
    inner: Arc<trotterlab::spectral::RadialGrid>,
}

#[pymethods]
impl PyRadialGrid {
    #[new]
    fn new(r_max: f64, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(trotterlab::spectral::RadialGrid::new(r_max, n).map_err(to_py)?),
        })
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.inner.r_max()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("RadialGrid(r_max={}, n={})", self.inner.r_max(), self.inner.len())
    }
}

/// One `(ℓ, m)` sector profile `u = r f(r)`.
#[pyclass(frozen, name = "SectorState")]
struct PySectorState {
    inner: states::SectorState,
}

#[pymethods]
impl PySectorState {
    /// Hydrogen orbital `Ψ_{n ℓ m}` sampled on `grid` and renormalized.
    #[staticmethod]
    fn hydrogen(n: usize, ell: usize, m: i32, grid: &PyRadialGrid) -> PyResult<Self> {
        Ok(Self {
            inner: states::hydrogen_state(n, ell, m, grid.inner.clone()).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_samples(grid: &PyRadialGrid, ell: usize, m: i32, u: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self {
            inner: states::SectorState::new(grid.inner.clone(), ell, m, u).map_err(to_py)?,
        })
    }

    #[getter]
    fn ell(&self) -> usize {
        self.inner.ell()
    }

    #[getter]
    fn m(&self) -> i32 {
        self.inner.m()
    }

    fn u(&self) -> Vec<Complex64> {
        self.inner.u().to_vec()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn h2_norm(&self) -> f64 {
        norms::h2_norm(&self.inner)
    }

    fn weighted_h2_norm(&self, ell_weight: usize) -> f64 {
        norms::weighted_h2_norm(&self.inner, ell_weight)
    }

    /// Whether the state lies in sectors `≥ ell` with a finite weighted norm.
    fn check_assumption(&self, ell: usize) -> PyResult<bool> {
        let s = MultiSectorState::from(self.inner.clone());
        Ok(states::check_assumption(&s, ell, f64::INFINITY).map_err(to_py)?.verdict)
    }

    /// Splitting errors `(t, error)` of the attractive `c = 2` problem for each
    /// step count.
    #[pyo3(signature = (scheme_name, total_time, steps, backend = "auto"))]
    fn trotter_errors(
        &self,
        py: Python<'_>,
        scheme_name: &str,
        total_time: f64,
        steps: Vec<usize>,
        backend: &str,
    ) -> PyResult<Vec<(f64, f64)>> {
        let scheme = scheme(scheme_name)?;
        let backend = match backend {
            "auto" => Backend::Auto,
            "dense" => Backend::Dense,
            "chebyshev" => Backend::Chebyshev,
            other => return Err(PyValueError::new_err(format!("unknown backend {other:?}"))),
        };
        let state = MultiSectorState::from(self.inner.clone());
        let grid = self.inner.grid().clone();
        let ell = self.inner.ell();
        py.detach(|| {
            let ctx = build_contexts(grid, &[ell], Coulomb::hydrogen(), backend)?;
            trotter_sweep(scheme, &ctx, &state, total_time, &steps)
        })
        .map(|runs| runs.iter().map(|r| (r.t_step, r.error_l2)).collect())
        .map_err(to_py)
    }
}

#[pyclass(frozen, name = "RateReport")]
struct PyRateReport {
    inner: ratefit::RateReport,
}

#[pymethods]
impl PyRateReport {
    #[getter]
    fn global_slope(&self) -> f64 {
        self.inner.global_slope
    }

    #[getter]
    fn pre_crossover_slope(&self) -> f64 {
        self.inner.pre_crossover_slope
    }

    #[getter]
    fn crossover_t(&self) -> Option<f64> {
        self.inner.crossover_t
    }

    #[getter]
    fn passed(&self) -> bool {
        self.inner.passed()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "RateReport(pre_crossover_slope={:.4}, predicted={}, passed={})",
            self.inner.pre_crossover_slope,
            self.inner.predicted_rate,
            self.inner.passed()
        )
    }
}

/// Fits `(t, error)` points, coarsest first, against a rate such as `"3/2"`.
#[pyfunction]
#[pyo3(signature = (points, predicted, tol = 0.15))]
fn assess(points: Vec<(f64, f64)>, predicted: &str, tol: f64) -> PyResult<PyRateReport> {
    let rate = Rational::parse(predicted).ok_or_else(|| PyValueError::new_err(format!("bad rate {predicted:?}")))?;
    let series = ConvergenceSeries::new(points).map_err(to_py)?;
    Ok(PyRateReport {
        inner: ratefit::assess(&series, rate, tol).map_err(to_py)?,
    })
}

#[pyfunction]
fn gamma_rate(scheme_name: &str, ell: usize) -> PyResult<String> {
    Ok(bounds::gamma_rate(scheme(scheme_name)?, ell).to_string())
}

#[pyfunction]
fn c_n(n_particles: usize, c0: f64) -> PyResult<f64> {
    bounds::c_n(n_particles, c0).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n_particles, c0, abs_const = 1.0))]
fn c_tilde_n(n_particles: usize, c0: f64, abs_const: f64) -> PyResult<f64> {
    bounds::c_tilde_n(n_particles, c0, abs_const).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (grid, ell_max = 0))]
fn hardy_estimate(grid: &PyRadialGrid, ell_max: usize) -> PyResult<f64> {
    norms::hardy_norm_estimate(&grid.inner, ell_max).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (beta = cutoff::DEFAULT_BETA))]
fn cutoff_constants<'py>(py: Python<'py>, beta: f64) -> PyResult<Bound<'py, PyDict>> {
    let profile = cutoff::CutoffProfile::new(beta).map_err(to_py)?;
    let k = cutoff::cutoff_constants(&profile);
    let d = PyDict::new(py);
    d.set_item("c0", k.c0)?;
    d.set_item("c_f1", k.c_f1)?;
    d.set_item("c_f1_bound", k.c_f1_bound)?;
    d.set_item("c_f2", k.c_f2)?;
    d.set_item("c_f2_bound", k.c_f2_bound)?;
    Ok(d)
}

/// `(residual, tolerance, passed)` for one operator identity check.
#[pyfunction]
#[pyo3(signature = (check, dim, seed, t, nodes = 24, steps = 4))]
fn oracle_check(check: &str, dim: usize, seed: u64, t: f64, nodes: usize, steps: usize) -> PyResult<(f64, f64, bool)> {
    let check: Check = check.parse().map_err(to_py)?;
    let r = run_check(check, dim, seed, t, nodes, steps).map_err(to_py)?;
    Ok((r.residual, r.tolerance, r.pass))
}

#[pymodule]
fn trotterlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRadialGrid>()?;
    m.add_class::<PySectorState>()?;
    m.add_class::<PyRateReport>()?;
    m.add_function(wrap_pyfunction!(assess, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_rate, m)?)?;
    m.add_function(wrap_pyfunction!(c_n, m)?)?;
    m.add_function(wrap_pyfunction!(c_tilde_n, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(cutoff_constants, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    Ok(())
}
