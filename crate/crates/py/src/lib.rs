//! Python bindings for `records_core`.
//!
//! Structured results (estimates, verdicts, reports) are returned as plain
//! dicts with the same field names as the CLI's JSON output. Exact values
//! are returned as `fractions.Fraction`.

use pyo3::exceptions::{PyArithmeticError, PyNotImplementedError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use records_core::exact::{self, EvalMethod, ExactRational, Family};
use records_core::samplers::Sampler;
use records_core::{frontier, ordering, simulate, Error, ExperimentConfig, RngState};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. } | Error::DimensionMismatch { .. } => PyValueError::new_err(e.to_string()),
        Error::Unsupported(_) => PyNotImplementedError::new_err(e.to_string()),
        Error::PrecisionLoss { .. } => PyArithmeticError::new_err(e.to_string()),
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn to_fraction<'py>(py: Python<'py>, r: &ExactRational) -> PyResult<Bound<'py, PyAny>> {
    let text = format!("{}/{}", r.numer(), r.denom());
    py.import("fractions")?.getattr("Fraction")?.call1((text,))
}

fn parse_family(name: &str) -> PyResult<Family> {
    match name {
        "dir" => Ok(Family::Dir),
        "pa" => Ok(Family::Pa),
        _ => Err(PyValueError::new_err(format!("unknown family `{name}`, expected `dir` or `pa`"))),
    }
}

fn parse_method(name: &str, n: usize, nodes: usize) -> PyResult<EvalMethod> {
    match name {
        "auto" => Ok(EvalMethod::default_for(n)),
        "exact" => Ok(EvalMethod::AlternatingSumExact),
        "float" => Ok(EvalMethod::AlternatingSumFloat),
        "quad" => Ok(EvalMethod::GaussQuadrature { nodes }),
        _ => Err(PyValueError::new_err(format!("unknown method `{name}`"))),
    }
}

fn parse_estimator(name: &str) -> PyResult<simulate::Estimator> {
    match name {
        "indicator" => Ok(simulate::Estimator::Indicator),
        "survival" => Ok(simulate::Estimator::Survival),
        _ => Err(PyValueError::new_err(format!("unknown estimator `{name}`"))),
    }
}

/// A distribution on the positive orthant.
#[pyclass(name = "DistributionSpec", module = "pareto_records", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PySpec {
    inner: records_core::DistributionSpec,
}

impl PySpec {
    fn checked(inner: records_core::DistributionSpec) -> PyResult<Self> {
        inner.validate().map_err(to_py_err)?;
        Ok(Self { inner })
    }
}

#[pymethods]
impl PySpec {
    /// Independent standard exponential coordinates.
    #[staticmethod]
    fn iid_exponential(d: usize) -> PyResult<Self> {
        Self::checked(records_core::DistributionSpec::iid_exponential(d))
    }

    /// Survival `(1 - |x|_1)^(d + a - 1)` on the simplex.
    #[staticmethod]
    fn marginal_dirichlet(d: usize, a: f64) -> PyResult<Self> {
        Self::checked(records_core::DistributionSpec::marginal_dirichlet(d, a))
    }

    /// Survival `(1 + |x|_1)^(-a)`.
    #[staticmethod]
    fn pa_scale_mixture(d: usize, a: f64) -> PyResult<Self> {
        Self::checked(records_core::DistributionSpec::pa_scale_mixture(d, a))
    }

    #[staticmethod]
    fn dirichlet(b: Vec<f64>) -> PyResult<Self> {
        Self::checked(records_core::DistributionSpec::dirichlet(b))
    }

    #[staticmethod]
    fn comonotone(d: usize) -> PyResult<Self> {
        Self::checked(records_core::DistributionSpec::comonotone(d))
    }

    /// Draw from `second` with probability `q`, otherwise from `first`.
    #[staticmethod]
    fn mixture(q: f64, first: &PySpec, second: &PySpec) -> PyResult<Self> {
        Self::checked(records_core::DistributionSpec::mixture(q, first.inner.clone(), second.inner.clone()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Self::checked(inner)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("specs always serialize")
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family()
    }

    /// `count` draws from stream `stream` of `seed`.
    #[pyo3(signature = (count, seed, stream = 0))]
    fn sample(&self, count: usize, seed: u64, stream: u64) -> PyResult<Vec<Vec<f64>>> {
        let sampler = Sampler::new(&self.inner).map_err(to_py_err)?;
        let mut rng = RngState::new(seed, stream);
        Ok((0..count).map(|_| sampler.draw(&mut rng).into_inner()).collect())
    }

    /// `P(X >= x)` for the families with a closed form.
    fn survival(&self, x: Vec<f64>) -> PyResult<f64> {
        exact::survival(&self.inner, &x).map_err(to_py_err)
    }

    /// Limit of `p_n` as n grows, for specs with an antichain component.
    fn p_infinity(&self) -> PyResult<f64> {
        exact::p_infinity(&self.inner).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("DistributionSpec({})", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// Incremental set of current maxima under weak dominance.
#[pyclass(name = "Frontier", module = "pareto_records")]
struct PyFrontier {
    inner: frontier::FrontierState,
}

#[pymethods]
impl PyFrontier {
    /// `generic=True` forces the general-dimension store even for d = 2.
    #[new]
    #[pyo3(signature = (dim, generic = false))]
    fn new(dim: usize, generic: bool) -> PyResult<Self> {
        let inner = if generic {
            frontier::FrontierState::generic(dim)
        } else {
            frontier::FrontierState::new(dim)
        };
        Ok(Self {
            inner: inner.map_err(to_py_err)?,
        })
    }

    /// Returns `(is_record, broken)`.
    fn insert(&mut self, x: Vec<f64>) -> PyResult<(bool, usize)> {
        let out = self.inner.insert(&x).map_err(to_py_err)?;
        Ok((out.is_record, out.broken))
    }

    fn maxima(&self) -> Vec<Vec<f64>> {
        self.inner.maxima()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_seen(&self) -> u64 {
        self.inner.n_seen()
    }

    #[getter]
    fn records_total(&self) -> u64 {
        self.inner.records_total()
    }

    #[getter]
    fn maxima_count(&self) -> usize {
        self.inner.maxima_count()
    }

    fn __len__(&self) -> usize {
        self.inner.maxima_count()
    }
}

/// Record indicators for a whole stream: list of `(is_record, broken, r_n)`.
#[pyfunction]
fn run_stream(points: Vec<Vec<f64>>) -> PyResult<Vec<(bool, usize, usize)>> {
    let run = frontier::run_stream(&points).map_err(to_py_err)?;
    Ok(run.steps.iter().map(|s| (s.is_record, s.broken, s.r_n)).collect())
}

#[pyfunction]
fn p_star(n: usize, d: usize) -> PyResult<f64> {
    exact::p_star(n, d).map_err(to_py_err)
}

#[pyfunction]
fn p_star_exact(py: Python<'_>, n: usize, d: usize) -> PyResult<Bound<'_, PyAny>> {
    to_fraction(py, &exact::p_star_exact(n, d).map_err(to_py_err)?)
}

/// Roman harmonic number of order `k`, exactly.
#[pyfunction]
fn roman_harmonic(py: Python<'_>, n: usize, k: u32) -> PyResult<Bound<'_, PyAny>> {
    to_fraction(py, &exact::roman_harmonic(n, k).map_err(to_py_err)?)
}

/// `p_n` for the `dir` or `pa` family.
#[pyfunction]
#[pyo3(signature = (family, n, d, a, method = "auto", nodes = 64))]
fn p_family(family: &str, n: usize, d: usize, a: f64, method: &str, nodes: usize) -> PyResult<f64> {
    let family = parse_family(family)?;
    match method {
        "auto" => exact::p_family_auto(family, n, d, a),
        _ => exact::p_family(family, n, d, a, parse_method(method, n, nodes)?),
    }
    .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (n, d, a, method = "auto"))]
fn p_dir(n: usize, d: usize, a: f64, method: &str) -> PyResult<f64> {
    p_family("dir", n, d, a, method, 64)
}

#[pyfunction]
#[pyo3(signature = (n, d, a, method = "auto"))]
fn p_pa(n: usize, d: usize, a: f64, method: &str) -> PyResult<f64> {
    p_family("pa", n, d, a, method, 64)
}

/// Density of the transformed variable `W` used by the ordering checks.
#[pyfunction]
fn density_w(family: &str, a: f64, d: usize, w: f64) -> PyResult<f64> {
    exact::density_w(parse_family(family)?, a, d, w).map_err(to_py_err)
}

fn config(spec: &PySpec, n: usize, reps: usize, seed: u64, workers: Option<usize>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(spec.inner.clone(), n, reps, seed);
    if let Some(w) = workers {
        c = c.with_workers(w);
    }
    c
}

/// Monte Carlo estimate of `p_n` with its standard error.
#[pyfunction]
#[pyo3(signature = (spec, n, reps, seed, workers = None, estimator = "indicator"))]
fn estimate_pn<'py>(
    py: Python<'py>,
    spec: &PySpec,
    n: usize,
    reps: usize,
    seed: u64,
    workers: Option<usize>,
    estimator: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let c = config(spec, n, reps, seed, workers);
    let est = parse_estimator(estimator)?;
    let out = py.detach(|| simulate::estimate_pn_with(&c, est)).map_err(to_py_err)?;
    to_dict(py, &out)
}

/// Estimates of `E R_n`, `E r_n` and `p_n` from one set of replicates.
#[pyfunction]
#[pyo3(signature = (spec, n, reps, seed, workers = None))]
fn estimate_maxima<'py>(
    py: Python<'py>,
    spec: &PySpec,
    n: usize,
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = config(spec, n, reps, seed, workers);
    let out = py.detach(|| simulate::estimate_maxima(&c)).map_err(to_py_err)?;
    to_dict(py, &out)
}

/// Chi-square comparison of the maxima count in dimension d with the
/// record count of the concomitant sequence in dimension d - 1.
#[pyfunction]
#[pyo3(signature = (spec, n, reps, seed, workers = None))]
fn concomitant_check<'py>(
    py: Python<'py>,
    spec: &PySpec,
    n: usize,
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = config(spec, n, reps, seed, workers);
    let out = py.detach(|| simulate::concomitant_check(&c)).map_err(to_py_err)?;
    to_dict(py, &out)
}

/// Compares two specs in the record-probability order.
#[pyfunction]
fn check_rp_order<'py>(
    py: Python<'py>,
    first: &PySpec,
    second: &PySpec,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let out = py
        .detach(|| ordering::check_rp_order(&first.inner, &second.inner, samples, seed))
        .map_err(to_py_err)?;
    to_dict(py, &out)
}

/// Tests negative upper orthant dependence on a probe grid.
#[pyfunction]
#[pyo3(signature = (spec, samples, seed, probes = None))]
fn check_nuod<'py>(
    py: Python<'py>,
    spec: &PySpec,
    samples: usize,
    seed: u64,
    probes: Option<Vec<Vec<f64>>>,
) -> PyResult<Bound<'py, PyAny>> {
    let probes = probes.unwrap_or_else(|| ordering::default_probe_grid(spec.inner.dimension()));
    let out = py
        .detach(|| ordering::check_nuod(&spec.inner, &probes, samples, seed))
        .map_err(to_py_err)?;
    to_dict(py, &out)
}

/// Compares `p_2` with its value under independence.
#[pyfunction]
#[pyo3(signature = (spec, reps, seed, workers = None))]
fn check_p2_bounds<'py>(
    py: Python<'py>,
    spec: &PySpec,
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let out = py
        .detach(|| ordering::check_p2_bounds(&spec.inner, reps, seed, workers))
        .map_err(to_py_err)?;
    to_dict(py, &out)
}

/// Exact `p_n` near both ends of the shape range.
#[pyfunction]
fn check_limits<'py>(py: Python<'py>, family: &str, n: usize, d: usize) -> PyResult<Bound<'py, PyAny>> {
    let out = ordering::check_limits(parse_family(family)?, n, d).map_err(to_py_err)?;
    to_dict(py, &out)
}

#[pymodule]
fn pareto_records(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyFrontier>()?;
    m.add_function(wrap_pyfunction!(run_stream, m)?)?;
    m.add_function(wrap_pyfunction!(p_star, m)?)?;
    m.add_function(wrap_pyfunction!(p_star_exact, m)?)?;
    m.add_function(wrap_pyfunction!(roman_harmonic, m)?)?;
    m.add_function(wrap_pyfunction!(p_family, m)?)?;
    m.add_function(wrap_pyfunction!(p_dir, m)?)?;
    m.add_function(wrap_pyfunction!(p_pa, m)?)?;
    m.add_function(wrap_pyfunction!(density_w, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_pn, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_maxima, m)?)?;
    m.add_function(wrap_pyfunction!(concomitant_check, m)?)?;
    m.add_function(wrap_pyfunction!(check_rp_order, m)?)?;
    m.add_function(wrap_pyfunction!(check_nuod, m)?)?;
    m.add_function(wrap_pyfunction!(check_p2_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(check_limits, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
