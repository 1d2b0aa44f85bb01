//! Python module `gwspeed`.

use std::collections::BTreeMap;

use gwspeed::{self as core, Error, Graph, HittingSource, PoolMethod};
use pyo3::exceptions::{PyNotImplementedError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::DegenerateDenominator { .. } => PyValueError::new_err(e.to_string()),
        Error::UnsupportedRegime(_) => PyNotImplementedError::new_err(e.to_string()),
        Error::InvalidState(_) | Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn method(name: &str) -> PyResult<PoolMethod> {
    name.parse().map_err(to_py)
}

/// Offspring law with finite support.
#[pyclass(name = "OffspringDistribution", module = "gwspeed", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyOffspring {
    inner: core::OffspringDistribution,
}

#[pymethods]
impl PyOffspring {
    /// `OffspringDistribution({2: 0.5, 3: 0.5})`
    #[new]
    fn new(pmf: BTreeMap<i64, f64>) -> PyResult<Self> {
        let entries: Vec<(i64, f64)> = pmf.into_iter().collect();
        Ok(Self { inner: core::OffspringDistribution::new(&entries).map_err(to_py)? })
    }

    /// Parses `"2:0.5,3:0.5"`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: core::OffspringDistribution::parse_pmf(text).map_err(to_py)? })
    }

    #[staticmethod]
    fn regular(d: u32) -> Self {
        Self { inner: core::OffspringDistribution::regular(d) }
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    #[getter]
    fn min_degree(&self) -> u32 {
        self.inner.min_degree()
    }

    #[getter]
    fn max_degree(&self) -> u32 {
        self.inner.max_degree()
    }

    fn pmf(&self) -> BTreeMap<u32, f64> {
        self.inner.entries().iter().copied().collect()
    }

    fn pgf(&self, s: f64) -> PyResult<f64> {
        self.inner.pgf(s).map_err(to_py)
    }

    #[pyo3(signature = (tol = 1e-12))]
    fn extinction_probability(&self, tol: f64) -> PyResult<f64> {
        self.inner.extinction_probability(tol).map_err(to_py)
    }

    fn monotonicity_threshold(&self) -> PyResult<f64> {
        self.inner.monotonicity_threshold().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("OffspringDistribution('{}')", self.inner.to_pmf_string())
    }
}

/// One quenched tree, materialised to a fixed depth.
#[pyclass(name = "QuenchedTree", module = "gwspeed")]
pub struct PyTree {
    inner: core::QuenchedTree,
}

#[pymethods]
impl PyTree {
    #[staticmethod]
    fn sample(dist: &PyOffspring, depth: u32, seed: u64) -> Self {
        Self { inner: core::QuenchedTree::sample_truncated(&dist.inner, depth, seed) }
    }

    fn __len__(&self) -> usize {
        self.inner.tree_vertices().count()
    }

    fn depth(&self, v: u32) -> i32 {
        self.inner.depth(v)
    }

    fn parent(&self, v: u32) -> Option<u32> {
        self.inner.parent(v)
    }

    fn children(&self, v: u32) -> Vec<u32> {
        self.inner.children(v).map(|r| r.collect()).unwrap_or_default()
    }

    /// `(β_n(e), β'_n(e))` from the level recursion.
    fn beta(&self, n: u32, lam: f64) -> PyResult<(f64, f64)> {
        let t = core::compute_beta_with_derivative(&self.inner, n, lam).map_err(to_py)?;
        Ok((t.root_beta(), t.root_dbeta().map_err(to_py)?))
    }

    /// `β'_n(e)` as an explicit sum over vertices and ancestor chains.
    fn dbeta_path_sum(&self, n: u32, lam: f64) -> PyResult<f64> {
        let t = core::compute_beta_with_derivative(&self.inner, n, lam).map_err(to_py)?;
        core::beta_derivative_path_sum(&self.inner, &t).map_err(to_py)
    }

    /// Effective conductance from the artificial root to level `n`.
    fn effective_conductance(&self, n: u32, lam: f64) -> PyResult<f64> {
        let mut t = self.inner.clone();
        if t.star_root().is_none() {
            t.attach_star_root().map_err(to_py)?;
        }
        let net = core::build_conductances(&t, lam, n).map_err(to_py)?;
        core::effective_conductance_to_level(&net, n).map_err(to_py)
    }

    #[pyo3(signature = (lam, n, trials, seed = core::rng::DEFAULT_SEED))]
    fn hitting_mc(&mut self, lam: f64, n: u32, trials: usize, seed: u64) -> PyResult<(f64, f64)> {
        let h = core::hitting_beta_mc(HittingSource::Quenched(&mut self.inner), lam, n, trials, seed)
            .map_err(to_py)?;
        Ok((h.estimate, h.stderr))
    }

    fn to_json(&self) -> String {
        self.inner.dump_json()
    }
}

/// Speed by direct simulation; returns `(mean, stderr)`.
#[pyfunction]
#[pyo3(signature = (dist, lam, steps = 100_000, replicas = 32, seed = core::rng::DEFAULT_SEED, graph = "T"))]
fn simulate_speed(
    py: Python<'_>,
    dist: &PyOffspring,
    lam: f64,
    steps: u64,
    replicas: usize,
    seed: u64,
    graph: &str,
) -> PyResult<(f64, f64)> {
    let graph: Graph = graph.parse().map_err(to_py)?;
    let d = dist.inner.clone();
    let est = py
        .detach(move || core::simulate_speed(&d, lam, steps, replicas, seed, graph))
        .map_err(to_py)?;
    Ok((est.mean, est.stderr))
}

/// Pool of `(β_n, β'_n)` samples.
#[pyfunction]
#[pyo3(signature = (dist, lam, n, count, seed = core::rng::DEFAULT_SEED, method = "population"))]
fn sample_pool(
    py: Python<'_>,
    dist: &PyOffspring,
    lam: f64,
    n: u32,
    count: usize,
    seed: u64,
    method: &str,
) -> PyResult<Vec<(f64, f64)>> {
    let m = self::method(method)?;
    let d = dist.inner.clone();
    let pool = py
        .detach(move || core::sample_pool(&d, lam, n, count, seed, m))
        .map_err(to_py)?;
    Ok(pool.samples)
}

/// Speed formula estimate; returns `(speed, stderr)`.
#[pyfunction]
#[pyo3(signature = (dist, lam, n = 12, samples = 100_000, tuples = 100_000, seed = core::rng::DEFAULT_SEED, method = "population"))]
fn speed_formula(
    py: Python<'_>,
    dist: &PyOffspring,
    lam: f64,
    n: u32,
    samples: usize,
    tuples: usize,
    seed: u64,
    method: &str,
) -> PyResult<(f64, f64)> {
    let m = self::method(method)?;
    let d = dist.inner.clone();
    let est = py
        .detach(move || {
            let pool = core::sample_pool(&d, lam, n, samples, seed, m)?;
            core::speed_formula_mc(&d, lam, &pool, tuples, seed)
        })
        .map_err(to_py)?;
    Ok((est.speed, est.stderr))
}

#[pyfunction]
fn speed_exact_lambda1(dist: &PyOffspring) -> PyResult<f64> {
    core::speed_exact_lambda1(&dist.inner).map_err(to_py)
}

/// Speed curve on `grid`; returns a dict with `levels`, `rows` and `strictly_decreasing`.
#[pyfunction]
#[pyo3(signature = (dist, grid, n = 12, samples = 100_000, tuples = 100_000, seed = core::rng::DEFAULT_SEED, method = "population"))]
fn speed_curve<'py>(
    py: Python<'py>,
    dist: &PyOffspring,
    grid: Vec<f64>,
    n: u32,
    samples: usize,
    tuples: usize,
    seed: u64,
    method: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = core::CurveOptions { method: self::method(method)?, ..Default::default() };
    let d = dist.inner.clone();
    let curve = py
        .detach(move || core::speed_curve(&d, &grid, n, samples, tuples, seed, &opts))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("levels", curve.levels.clone())?;
    let mut rows = Vec::new();
    for points in &curve.points {
        for p in points {
            let row = PyDict::new(py);
            row.set_item("level", p.level)?;
            row.set_item("lambda", p.lambda)?;
            row.set_item("speed", p.speed_formula)?;
            row.set_item("stderr", p.speed_formula_stderr)?;
            row.set_item("margin", p.ineq8_margin)?;
            row.set_item("margin_stderr", p.ineq8_stderr)?;
            rows.push(row);
        }
    }
    out.set_item("rows", rows)?;
    out.set_item("threshold", curve.monotonicity.threshold)?;
    out.set_item("strictly_decreasing", curve.monotonicity.strictly_decreasing)?;
    Ok(out)
}

#[pyfunction]
fn regular_escape_probability(d: u32, lam: f64) -> PyResult<f64> {
    core::regular_escape_probability(d, lam).map_err(to_py)
}

#[pyfunction]
fn regular_return_gf(d: u32, lam: f64, z: f64) -> PyResult<f64> {
    core::regular_return_gf(d, lam, z).map_err(to_py)
}

#[pyfunction]
fn monotonicity_threshold(min_degree: u32) -> PyResult<f64> {
    core::monotonicity_threshold_for(min_degree).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "gwspeed")]
fn gwspeed_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOffspring>()?;
    m.add_class::<PyTree>()?;
    m.add_function(wrap_pyfunction!(simulate_speed, m)?)?;
    m.add_function(wrap_pyfunction!(sample_pool, m)?)?;
    m.add_function(wrap_pyfunction!(speed_formula, m)?)?;
    m.add_function(wrap_pyfunction!(speed_exact_lambda1, m)?)?;
    m.add_function(wrap_pyfunction!(speed_curve, m)?)?;
    m.add_function(wrap_pyfunction!(regular_escape_probability, m)?)?;
    m.add_function(wrap_pyfunction!(regular_return_gf, m)?)?;
    m.add_function(wrap_pyfunction!(monotonicity_threshold, m)?)?;
    Ok(())
}
