//! Python bindings: scenario runs, trajectory columns and the capacity
//! diagram of an arbitrary spectrum.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qbattery_core::capacity::{capacity_at_entropy, gibbs, solve_beta_for_entropy, Branch};
use qbattery_core::harness::csvio::Table;
use qbattery_core::harness::table1::table1_verify;
use qbattery_core::harness::trajectory::Run;
use qbattery_core::harness::validate::run_validation;
use qbattery_core::harness::{certify_rows, run_trajectory, ScenarioConfig};
use qbattery_core::numerics::{BasisTag, HermitianOperator};
use qbattery_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A validated scenario configuration.
#[pyclass(module = "qbattery", skip_from_py_object)]
#[derive(Clone)]
pub struct Scenario {
    cfg: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    /// Parse a JSON configuration; unknown keys are rejected.
    #[new]
    fn new(config_json: &str) -> PyResult<Self> {
        Ok(Self { cfg: ScenarioConfig::from_json(config_json).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self { cfg: ScenarioConfig::load(&path).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.cfg.model.n
    }

    #[getter]
    fn label(&self) -> String {
        self.cfg.model.family.label()
    }

    fn with_n(&self, n: usize) -> Self {
        Self { cfg: self.cfg.with_n(n) }
    }

    fn run(&self, py: Python<'_>) -> PyResult<Trajectory> {
        let cfg = self.cfg.clone();
        let run = py.detach(move || run_trajectory(&cfg)).map_err(to_py)?;
        Ok(Trajectory { run })
    }

    fn __repr__(&self) -> String {
        format!("Scenario({}, N={})", self.cfg.model.family.label(), self.cfg.model.n)
    }
}

/// Sampled observables of one run.
#[pyclass(module = "qbattery")]
pub struct Trajectory {
    run: Run,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn t_f(&self) -> f64 {
        self.run.tf.t_f
    }

    #[getter]
    fn e_max(&self) -> f64 {
        self.run.tf.e_max
    }

    fn __len__(&self) -> usize {
        self.run.trajectory.samples.len()
    }

    /// Summary statistics as a dict.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.run.summary)
    }

    /// Column name to list of values; undefined entries are `None`.
    #[pyo3(signature = (populations = false))]
    fn columns<'py>(&self, py: Python<'py>, populations: bool) -> PyResult<Bound<'py, PyDict>> {
        let table = self.run.trajectory.to_table(populations);
        let out = PyDict::new(py);
        for (i, name) in table.header.iter().enumerate() {
            let col: Vec<Option<f64>> = table.rows.iter().map(|r| r[i]).collect();
            out.set_item(name, col)?;
        }
        Ok(out)
    }

    fn to_csv(&self, path: std::path::PathBuf, populations: bool) -> PyResult<()> {
        self.run.trajectory.to_table(populations).write(&path).map_err(to_py)
    }

    /// Number of bound violations on the sampled rows.
    fn violations(&self) -> PyResult<usize> {
        let report = certify_rows(&self.run.trajectory.to_table(false)).map_err(to_py)?;
        Ok(report.violations.len())
    }
}

fn spectrum(energies: Vec<f64>) -> PyResult<HermitianOperator> {
    if energies.is_empty() {
        return Err(PyValueError::new_err("spectrum must not be empty"));
    }
    let basis = BasisTag::CollectiveSpin { n: energies.len() - 1 };
    HermitianOperator::from_diagonal(&energies, basis).and_then(|h| h.eigendecomposed()).map_err(to_py)
}

/// `E_max(S) - E_min(S)` for a spectrum at entropy `s` bits.
#[pyfunction]
fn capacity(energies: Vec<f64>, s: f64) -> PyResult<f64> {
    capacity_at_entropy(&spectrum(energies)?, s).map_err(to_py)
}

/// `(E, S_bits, beta)` of the thermal state with entropy `s` on a branch.
#[pyfunction]
#[pyo3(signature = (energies, s, negative_beta = false))]
fn thermal_point(energies: Vec<f64>, s: f64, negative_beta: bool) -> PyResult<(f64, f64, f64)> {
    let branch = if negative_beta { Branch::NegativeBeta } else { Branch::PositiveBeta };
    let p = solve_beta_for_entropy(&spectrum(energies)?, s, branch).map_err(to_py)?;
    Ok((p.e, p.s, p.beta))
}

#[pyfunction]
fn gibbs_populations(energies: Vec<f64>, beta: f64) -> Vec<f64> {
    gibbs(&energies, beta)
}

/// Closed-form paradigmatic results against simulation: `(passed, cells)`.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn table1<'py>(py: Python<'py>, seed: u64) -> PyResult<(bool, Bound<'py, PyAny>)> {
    let report = py.detach(|| table1_verify(1.0, seed)).map_err(to_py)?;
    Ok((report.passed(), json_to_py(py, &report.cells)?))
}

/// All oracle cross-checks: `(passed, checks)`.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn validate<'py>(py: Python<'py>, seed: u64) -> PyResult<(bool, Bound<'py, PyAny>)> {
    let report = py.detach(|| run_validation(seed)).map_err(to_py)?;
    Ok((report.passed(), json_to_py(py, &report.checks)?))
}

/// Certify a trajectory CSV; returns the report as a dict.
#[pyfunction]
fn certify<'py>(py: Python<'py>, path: std::path::PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let table = Table::read(&path).map_err(to_py)?;
    json_to_py(py, &certify_rows(&table).map_err(to_py)?)
}

#[pymodule]
fn qbattery(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(capacity, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_point, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs_populations, m)?)?;
    m.add_function(wrap_pyfunction!(table1, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    Ok(())
}
