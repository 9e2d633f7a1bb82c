//! Python bindings for `qnet`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qnet::dynamics::{linspace, Drive, Options, SimulationSpec};
use qnet::hilbert::{Coefficient, Operator};
use qnet::linear::LinearModel;
use qnet::reduction::{projector_from_spec, EliminationProblem};
use qnet::slh::{self, SlhTriple};
use qnet::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Parse { .. } | Error::Elaboration(_) | Error::Validation(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn rows(m: &nalgebra::DMatrix<C64>) -> Vec<Vec<C64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[pyclass(name = "Operator", module = "qnet_py", from_py_object)]
#[derive(Clone)]
struct PyOperator(Operator);

#[pymethods]
impl PyOperator {
    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.space().labels().iter().map(|s| s.to_string()).collect()
    }

    /// Dense matrix at time `t` as nested lists.
    #[pyo3(signature = (t = 0.0))]
    fn to_dense(&self, t: f64) -> Vec<Vec<C64>> {
        rows(&self.0.at(t).to_dense())
    }

    fn adjoint(&self) -> Self {
        PyOperator(self.0.adjoint())
    }

    fn hermitian_residual(&self) -> f64 {
        self.0.hermitian_residual()
    }

    fn max_diff(&self, other: &PyOperator) -> PyResult<f64> {
        self.0.max_diff(&other.0).map_err(err)
    }

    fn __add__(&self, other: &PyOperator) -> PyResult<Self> {
        self.0.checked_add(&other.0).map(PyOperator).map_err(err)
    }

    fn __sub__(&self, other: &PyOperator) -> PyResult<Self> {
        self.0.checked_sub(&other.0).map(PyOperator).map_err(err)
    }

    fn __mul__(&self, other: &PyOperator) -> PyResult<Self> {
        self.0.checked_mul(&other.0).map(PyOperator).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Operator(dim={}, labels={:?})", self.0.dim(), self.labels())
    }
}

#[pyclass(name = "Triple", module = "qnet_py", from_py_object)]
#[derive(Clone)]
struct PyTriple(SlhTriple);

#[pymethods]
impl PyTriple {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        SlhTriple::from_json_str(text).map(PyTriple).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    #[getter]
    fn n_ports(&self) -> usize {
        self.0.n_ports()
    }

    #[getter]
    fn ports(&self) -> Vec<String> {
        self.0.ports().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.space().labels().iter().map(|s| s.to_string()).collect()
    }

    #[getter]
    fn h(&self) -> PyOperator {
        PyOperator(self.0.h().clone())
    }

    #[getter]
    fn l(&self) -> Vec<PyOperator> {
        self.0.l().iter().cloned().map(PyOperator).collect()
    }

    fn s(&self, i: usize, j: usize) -> PyResult<PyOperator> {
        if i >= self.0.n_ports() || j >= self.0.n_ports() {
            return Err(PyValueError::new_err(format!("port index out of range for {} ports", self.0.n_ports())));
        }
        Ok(PyOperator(self.0.s_entry(i, j).clone()))
    }

    /// `(unitarity, hermiticity)` residuals.
    fn invariants(&self) -> (f64, f64) {
        let r = self.0.invariants();
        (r.unitarity, r.hermiticity)
    }

    fn max_diff(&self, other: &PyTriple) -> PyResult<f64> {
        self.0.max_diff(&other.0).map_err(err)
    }

    fn content_hash(&self) -> String {
        self.0.content_hash()
    }

    /// `other ◁ self`: feed this triple's outputs into `other`.
    fn __rshift__(&self, other: &PyTriple) -> PyResult<Self> {
        slh::series(&other.0, &self.0).map(PyTriple).map_err(err)
    }

    fn __add__(&self, other: &PyTriple) -> PyResult<Self> {
        slh::concat(&self.0, &other.0).map(PyTriple).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Triple(ports={:?}, labels={:?})", self.0.ports(), self.labels())
    }
}

#[pyclass(name = "LinearModel", module = "qnet_py", from_py_object)]
#[derive(Clone)]
struct PyLinear(LinearModel);

#[pymethods]
impl PyLinear {
    #[getter]
    fn form(&self) -> String {
        format!("{:?}", self.0.form)
    }

    #[getter]
    fn modes(&self) -> Vec<String> {
        self.0.modes.clone()
    }

    #[getter]
    fn a(&self) -> Vec<Vec<C64>> {
        rows(&self.0.a)
    }

    #[getter]
    fn b(&self) -> Vec<Vec<C64>> {
        rows(&self.0.b)
    }

    #[getter]
    fn c(&self) -> Vec<Vec<C64>> {
        rows(&self.0.c)
    }

    #[getter]
    fn d(&self) -> Vec<Vec<C64>> {
        rows(&self.0.d)
    }

    fn transfer_function(&self, s: C64) -> PyResult<Vec<Vec<C64>>> {
        self.0.transfer_function(s).map(|m| rows(&m)).map_err(err)
    }

    fn poles(&self) -> Vec<C64> {
        self.0.poles()
    }

    fn realizability(&self) -> [f64; 3] {
        self.0.realizability().residuals
    }

    fn quadrature(&self) -> Self {
        PyLinear(self.0.quadrature())
    }
}

/// Compile network source text, with optional parameter overrides.
#[pyfunction]
#[pyo3(signature = (source, overrides = None))]
fn compile(source: &str, overrides: Option<BTreeMap<String, f64>>) -> PyResult<PyTriple> {
    let net = qnet::netlang::parse(source).map_err(err)?;
    let e = qnet::netlang::elaborate_with(&net, &overrides.unwrap_or_default()).map_err(err)?;
    Ok(PyTriple(e.triple))
}

#[pyfunction]
fn series(g2: &PyTriple, g1: &PyTriple) -> PyResult<PyTriple> {
    slh::series(&g2.0, &g1.0).map(PyTriple).map_err(err)
}

#[pyfunction]
fn concat(g1: &PyTriple, g2: &PyTriple) -> PyResult<PyTriple> {
    slh::concat(&g1.0, &g2.0).map(PyTriple).map_err(err)
}

/// Close output `x` onto input `y` (0-based).
#[pyfunction]
fn feedback(g: &PyTriple, x: usize, y: usize) -> PyResult<PyTriple> {
    slh::feedback(&g.0, x, y).map(PyTriple).map_err(err)
}

#[pyfunction]
fn one_sided_cavity(name: &str, gamma: f64, delta: f64, trunc: usize) -> PyResult<PyTriple> {
    qnet::catalog::one_sided_cavity(name, gamma, delta, trunc).map(PyTriple).map_err(err)
}

/// Time series of `observables` under a constant coherent drive `alpha` on `port`.
#[pyfunction]
#[pyo3(signature = (g, t_end, samples, observables, alpha = None, port = 0, fixed_step = None))]
fn simulate(
    g: &PyTriple,
    t_end: f64,
    samples: usize,
    observables: Vec<String>,
    alpha: Option<C64>,
    port: usize,
    fixed_step: Option<f64>,
) -> PyResult<BTreeMap<String, Vec<C64>>> {
    let mut spec = SimulationSpec::new(linspace(t_end, samples), observables.clone());
    if let Some(a) = alpha {
        spec = spec.with_drive(Drive::Coherent(Coefficient::new(&a.to_string(), move |_| a)), port);
    }
    if let Some(dt) = fixed_step {
        spec.options = Options::rk4(dt);
    }
    let traj = qnet::dynamics::simulate(&g.0, &spec).map_err(err)?;
    let mut out = BTreeMap::new();
    out.insert("t".to_string(), traj.times.iter().map(|&t| C64::new(t, 0.0)).collect());
    for name in &traj.columns {
        out.insert(name.clone(), traj.complex_series(name).expect("column exists"));
    }
    Ok(out)
}

#[pyfunction]
fn extract_linear(g: &PyTriple) -> PyResult<PyLinear> {
    qnet::linear::extract_linear(&g.0).map(PyLinear).map_err(err)
}

/// Adiabatic elimination onto the subspace selected by `p0`, e.g. `"c=0,q=0"`.
#[pyfunction]
fn eliminate(g: &PyTriple, p0: &str) -> PyResult<PyTriple> {
    let p = projector_from_spec(g.0.space(), p0).map_err(err)?;
    EliminationProblem::decompose(&g.0, &p).and_then(|prob| prob.eliminate()).map(PyTriple).map_err(err)
}

/// Run the command-line front end; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let mut argv = vec!["qnet".to_string()];
    argv.extend(args);
    let out = qnet::cli::run(&argv);
    (out.code, out.stdout, out.stderr)
}

#[pymodule]
fn qnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOperator>()?;
    m.add_class::<PyTriple>()?;
    m.add_class::<PyLinear>()?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(series, m)?)?;
    m.add_function(wrap_pyfunction!(concat, m)?)?;
    m.add_function(wrap_pyfunction!(feedback, m)?)?;
    m.add_function(wrap_pyfunction!(one_sided_cavity, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(extract_linear, m)?)?;
    m.add_function(wrap_pyfunction!(eliminate, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
