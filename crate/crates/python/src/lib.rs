//! Python bindings for `spongelab`. Rationals cross the boundary as `"p/q"`
//! strings; structured results arrive as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::Value;

/// Interpreter-free layer: every binding is a thin wrapper over one of these.
pub mod api {
    use serde_json::{json, Value};
    use spongelab::constants::{filling_parameters, isoperimetric_constants, tau_threshold, verify_filling, FillingInputs};
    use spongelab::heisenberg::{dilation, h_mul, koranyi_dist, koranyi_norm, HeisPoint};
    use spongelab::rational::{parse_q, to_pq};
    use spongelab::report::Check;
    use spongelab::uniformity::bounded_turning;
    use spongelab::{suites, PointQ, Result, SpongeSpec};

    fn to_value(v: impl serde::Serialize) -> Value {
        serde_json::to_value(v).unwrap_or(Value::Null)
    }

    fn records(checks: Vec<Check>) -> Value {
        to_value(checks)
    }

    pub fn spec(d: usize, n: Vec<u64>, depth: Option<usize>) -> Result<SpongeSpec> {
        let k = depth.unwrap_or(n.len());
        SpongeSpec::new(d, n, k)
    }

    pub fn spec_from_json(text: &str) -> Result<SpongeSpec> {
        serde_json::from_str(text).map_err(|e| spongelab::Error::InvalidSpec(e.to_string()))
    }

    pub fn scale(spec: &SpongeSpec, k: usize) -> Result<String> {
        Ok(to_pq(&spec.scale(k)?))
    }

    pub fn live_tile_count(spec: &SpongeSpec, k: usize) -> Result<String> {
        Ok(spec.live_tile_count(k)?.to_string())
    }

    pub fn contains(spec: &SpongeSpec, point: &[String], depth: Option<usize>) -> Result<bool> {
        let coords = point.iter().map(|c| parse_q(c)).collect::<Result<Vec<_>>>()?;
        spec.contains(&PointQ::new(coords), depth.unwrap_or(spec.depth()))
    }

    pub fn min_separation(spec: &SpongeSpec, depth: usize) -> Result<Value> {
        Ok(to_value(spec.min_separation(depth)?))
    }

    fn point(p: (f64, f64, f64)) -> HeisPoint {
        HeisPoint::new(p.0, p.1, p.2)
    }

    fn tuple(p: HeisPoint) -> (f64, f64, f64) {
        (p.x, p.y, p.t)
    }

    pub fn heis_mul(a: (f64, f64, f64), b: (f64, f64, f64)) -> (f64, f64, f64) {
        tuple(h_mul(&point(a), &point(b)))
    }

    pub fn heis_norm(a: (f64, f64, f64)) -> f64 {
        koranyi_norm(&point(a))
    }

    pub fn heis_dist(a: (f64, f64, f64), b: (f64, f64, f64)) -> f64 {
        koranyi_dist(&point(a), &point(b))
    }

    pub fn heis_dilation(s: f64, a: (f64, f64, f64)) -> Result<(f64, f64, f64)> {
        Ok(tuple(dilation(s, &point(a))?))
    }

    pub fn tau(p: &str, q: &str, delta: &str, big_delta: &str) -> Result<Value> {
        Ok(to_value(tau_threshold(&parse_q(p)?, &parse_q(q)?, &parse_q(delta)?, &parse_q(big_delta)?)?))
    }

    pub fn isoperimetric(d: &str, c_b: &str, lambda_b: &str) -> Result<Value> {
        let (cs, lambda) = isoperimetric_constants(&parse_q(d)?, &parse_q(c_b)?, &parse_q(lambda_b)?)?;
        Ok(json!({"C_S": to_value(cs), "Lambda": to_pq(&lambda)}))
    }

    /// `overrides` is a JSON object of `"p/q"` strings keyed like [`FillingInputs`].
    pub fn filling(overrides: &str) -> Result<Value> {
        let bad = |e: serde_json::Error| spongelab::Error::Argument(e.to_string());
        let mut base = to_value(FillingInputs::default());
        let over: Value = serde_json::from_str(overrides).map_err(bad)?;
        if let (Some(b), Some(o)) = (base.as_object_mut(), over.as_object()) {
            for (k, v) in o {
                b.insert(k.clone(), v.clone());
            }
        }
        let inp: FillingInputs = serde_json::from_value(base).map_err(bad)?;
        let bundle = filling_parameters(&inp)?;
        let trips = verify_filling(&inp, &bundle)?;
        Ok(json!({"inputs": to_value(&inp), "bundle": to_value(&bundle), "round_trip": to_value(trips)}))
    }

    pub fn turning(vertices: &[[f64; 2]]) -> Result<Value> {
        Ok(to_value(bounded_turning(vertices)?))
    }

    pub fn separation_suite(dims: &[usize], seqs: &[Vec<u64>], depths: &[usize]) -> Result<Value> {
        Ok(records(suites::separation_suite(dims, seqs, depths)?))
    }

    pub fn projection_suite(dims: &[usize], random: Option<usize>, seed: u64) -> Result<Value> {
        Ok(records(vec![suites::projection_suite(dims, random, seed)?]))
    }

    pub fn heis_identities(count: usize, seed: u64) -> Result<Value> {
        Ok(records(vec![suites::heis_identities(count, seed)?]))
    }

    pub fn heis_net(n: Vec<u64>, levels: usize, seed: u64, samples: usize, inject_fault: bool) -> Result<Value> {
        Ok(records(suites::heis_net_suite(n, levels, seed, samples, inject_fault)?))
    }

    pub fn turning_suite() -> Result<Value> {
        Ok(records(suites::turning_suite()?))
    }

    pub fn constants_suite() -> Result<Value> {
        Ok(records(suites::constants_suite(&suites::filling_input_grid())?))
    }
}

fn err(e: spongelab::Error) -> PyErr {
    match e {
        spongelab::Error::Resource(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn py_json<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A truncated generalized Sierpinski sponge.
#[pyclass(name = "SpongeSpec", frozen)]
struct PySpongeSpec(spongelab::SpongeSpec);

#[pymethods]
impl PySpongeSpec {
    #[new]
    #[pyo3(signature = (d, n, depth=None))]
    fn new(d: usize, n: Vec<u64>, depth: Option<usize>) -> PyResult<Self> {
        api::spec(d, n, depth).map(PySpongeSpec).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        api::spec_from_json(text).map(PySpongeSpec).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).unwrap_or_default()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn n(&self) -> Vec<u64> {
        self.0.seq().to_vec()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }

    /// Side length `s_k` as `"p/q"`.
    fn scale(&self, k: usize) -> PyResult<String> {
        api::scale(&self.0, k).map_err(err)
    }

    /// Number of live level-`k` tiles, as a decimal string.
    fn live_tile_count(&self, k: usize) -> PyResult<String> {
        api::live_tile_count(&self.0, k).map_err(err)
    }

    #[pyo3(signature = (point, depth=None))]
    fn contains(&self, point: Vec<String>, depth: Option<usize>) -> PyResult<bool> {
        api::contains(&self.0, &point, depth).map_err(err)
    }

    fn min_separation<'py>(&self, py: Python<'py>, depth: usize) -> PyResult<Bound<'py, PyAny>> {
        py_json(py, &api::min_separation(&self.0, depth).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("SpongeSpec(d={}, n={:?}, depth={})", self.0.dim(), self.0.seq(), self.0.depth())
    }
}

type P3 = (f64, f64, f64);

#[pyfunction]
fn heis_mul(a: P3, b: P3) -> P3 {
    api::heis_mul(a, b)
}

#[pyfunction]
fn koranyi_norm(a: P3) -> f64 {
    api::heis_norm(a)
}

#[pyfunction]
fn koranyi_dist(a: P3, b: P3) -> f64 {
    api::heis_dist(a, b)
}

#[pyfunction]
fn dilation(s: f64, a: P3) -> PyResult<P3> {
    api::heis_dilation(s, a).map_err(err)
}

#[pyfunction]
fn tau_threshold<'py>(py: Python<'py>, p: &str, q: &str, delta: &str, big_delta: &str) -> PyResult<Bound<'py, PyAny>> {
    py_json(py, &api::tau(p, q, delta, big_delta).map_err(err)?)
}

#[pyfunction]
fn isoperimetric_constants<'py>(py: Python<'py>, d: &str, c_b: &str, lambda_b: &str) -> PyResult<Bound<'py, PyAny>> {
    py_json(py, &api::isoperimetric(d, c_b, lambda_b).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (overrides="{}"))]
fn filling_parameters<'py>(py: Python<'py>, overrides: &str) -> PyResult<Bound<'py, PyAny>> {
    py_json(py, &api::filling(overrides).map_err(err)?)
}

#[pyfunction]
fn bounded_turning<'py>(py: Python<'py>, vertices: Vec<[f64; 2]>) -> PyResult<Bound<'py, PyAny>> {
    py_json(py, &api::turning(&vertices).map_err(err)?)
}

#[pyfunction]
fn separation_suite<'py>(py: Python<'py>, dims: Vec<usize>, seqs: Vec<Vec<u64>>, depths: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
    let v = py.detach(|| api::separation_suite(&dims, &seqs, &depths)).map_err(err)?;
    py_json(py, &v)
}

#[pyfunction]
#[pyo3(signature = (dims, random=None, seed=spongelab::rng::DEFAULT_SEED))]
fn projection_suite<'py>(py: Python<'py>, dims: Vec<usize>, random: Option<usize>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let v = py.detach(|| api::projection_suite(&dims, random, seed)).map_err(err)?;
    py_json(py, &v)
}

#[pyfunction]
#[pyo3(signature = (count=100_000, seed=spongelab::rng::DEFAULT_SEED))]
fn heis_identities<'py>(py: Python<'py>, count: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let v = py.detach(|| api::heis_identities(count, seed)).map_err(err)?;
    py_json(py, &v)
}

#[pyfunction]
#[pyo3(signature = (n=vec![3, 3], levels=2, seed=spongelab::rng::DEFAULT_SEED, samples=600, inject_fault=false))]
fn heis_net<'py>(py: Python<'py>, n: Vec<u64>, levels: usize, seed: u64, samples: usize, inject_fault: bool) -> PyResult<Bound<'py, PyAny>> {
    let v = py.detach(|| api::heis_net(n, levels, seed, samples, inject_fault)).map_err(err)?;
    py_json(py, &v)
}

#[pyfunction]
fn turning_suite(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    py_json(py, &api::turning_suite().map_err(err)?)
}

#[pyfunction]
fn constants_suite(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    py_json(py, &api::constants_suite().map_err(err)?)
}

#[pymodule]
fn spongelab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpongeSpec>()?;
    m.add_function(wrap_pyfunction!(heis_mul, m)?)?;
    m.add_function(wrap_pyfunction!(koranyi_norm, m)?)?;
    m.add_function(wrap_pyfunction!(koranyi_dist, m)?)?;
    m.add_function(wrap_pyfunction!(dilation, m)?)?;
    m.add_function(wrap_pyfunction!(tau_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(isoperimetric_constants, m)?)?;
    m.add_function(wrap_pyfunction!(filling_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(bounded_turning, m)?)?;
    m.add_function(wrap_pyfunction!(separation_suite, m)?)?;
    m.add_function(wrap_pyfunction!(projection_suite, m)?)?;
    m.add_function(wrap_pyfunction!(heis_identities, m)?)?;
    m.add_function(wrap_pyfunction!(heis_net, m)?)?;
    m.add_function(wrap_pyfunction!(turning_suite, m)?)?;
    m.add_function(wrap_pyfunction!(constants_suite, m)?)?;
    Ok(())
}
