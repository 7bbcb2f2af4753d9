//! Python bindings. Reports and parameters come back as plain dicts.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use qsynth_core::cli::config::{run_config as run_config_inner, ExperimentConfig};
use qsynth_core::executors::{self, Evaluator, ExecutionReport, Output, RunOptions};
use qsynth_core::numerics::{self, CMatrix, DensityMatrix, PureState};
use qsynth_core::synthesis::{self, ModeKind, OracleSpec, PlanMode, Strategy, SynthesisPlan};
use qsynth_core::{geometry, verify, Error};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_dict<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse_name<T: DeserializeOwned>(what: &str, name: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.into()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} {name:?}")))
}

fn state(amps: Vec<Complex64>) -> PyResult<PureState> {
    PureState::from_amps(amps).map_err(py_err)
}

fn report_dict(py: Python<'_>, r: &ExecutionReport) -> PyResult<Py<PyAny>> {
    let d = to_dict(py, r)?;
    let output: Py<PyAny> = match &r.output {
        Output::Pure(p) => p.amps().to_vec().into_pyobject(py)?.into_any().unbind(),
        Output::Reduced(rho) => matrix_rows(rho.matrix())
            .into_pyobject(py)?
            .into_any()
            .unbind(),
        Output::Branches(_) => py.None(),
    };
    d.bind(py).set_item("output", output)?;
    Ok(d)
}

fn matrix_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect())
        .collect()
}

/// Haar-random `n`-qubit state from `seed`.
#[pyfunction]
fn haar_state(n: usize, seed: u64) -> Vec<Complex64> {
    numerics::haar_random_state(n, seed).into_amps()
}

#[pyfunction]
#[pyo3(signature = (n, epsilon, strategy = "clifford"))]
fn derive_params(py: Python<'_>, n: usize, epsilon: f64, strategy: &str) -> PyResult<Py<PyAny>> {
    let p = synthesis::params_for(n, epsilon, parse_name("strategy", strategy)?).map_err(py_err)?;
    to_dict(py, &p)
}

#[pyfunction]
fn trace_distance_pure(a: Vec<Complex64>, b: Vec<Complex64>) -> PyResult<f64> {
    numerics::trace_distance_pure(&state(a)?, &state(b)?).map_err(py_err)
}

/// Pure state whose outer product is the rank-1 matrix `rho`, given with
/// entrywise precision `delta`.
#[pyfunction]
fn purify_rank1(rho: Vec<Vec<Complex64>>, delta: f64) -> PyResult<Vec<Complex64>> {
    let d = rho.len();
    if d == 0 || !d.is_power_of_two() {
        return Err(PyValueError::new_err(format!(
            "matrix dimension {d} is not a power of two"
        )));
    }
    let m = CMatrix::from_rows(rho).map_err(py_err)?;
    let rho = DensityMatrix::new(d.trailing_zeros() as usize, m).map_err(py_err)?;
    Ok(numerics::purify_rank1(&rho, delta)
        .map_err(py_err)?
        .into_amps())
}

/// A synthesis plan together with its oracle.
#[pyclass(module = "qsynth", frozen)]
struct Plan {
    plan: SynthesisPlan,
    oracle: OracleSpec,
}

#[pymethods]
impl Plan {
    #[new]
    #[pyo3(signature = (amps, epsilon, seed = 0, strategy = "clifford", perturbed = false, t = None))]
    fn new(
        amps: Vec<Complex64>,
        epsilon: f64,
        seed: u64,
        strategy: &str,
        perturbed: bool,
        t: Option<usize>,
    ) -> PyResult<Self> {
        let opts = RunOptions {
            strategy: parse_name::<Strategy>("strategy", strategy)?,
            mode: if perturbed {
                ModeKind::Perturbed
            } else {
                ModeKind::Exact
            },
            t_override: t,
            ..RunOptions::with_seed(seed)
        };
        let (plan, oracle) =
            executors::prepare_inner(&state(amps)?, epsilon, &opts).map_err(py_err)?;
        Ok(Self { plan, oracle })
    }

    #[getter]
    fn n(&self) -> usize {
        self.plan.n()
    }

    #[getter]
    fn t(&self) -> usize {
        self.plan.params.t
    }

    #[getter(T)]
    fn big_t(&self) -> usize {
        self.plan.params.big_t
    }

    #[getter]
    fn residual_norms(&self) -> Vec<f64> {
        self.plan.residual_norms.clone()
    }

    #[getter]
    fn residual_t(&self) -> f64 {
        self.plan.residual_t()
    }

    #[getter]
    fn perturbed(&self) -> bool {
        matches!(self.plan.mode, PlanMode::Perturbed { .. })
    }

    /// Oracle bit for a `total_input_bits`-wide input.
    fn query(&self, x: u64) -> PyResult<bool> {
        self.oracle.query(x).map_err(py_err)
    }

    #[getter]
    fn total_input_bits(&self) -> usize {
        self.oracle.total_input_bits()
    }

    fn oracle_bytes(&self) -> Vec<u8> {
        self.oracle.to_bytes()
    }

    fn write_oracle(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.oracle.write_file(&path).map_err(py_err)
    }

    /// Runs the postselected circuit on this plan's oracle.
    fn postselect(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let r = executors::run_postselect(&self.plan, &self.oracle).map_err(py_err)?;
        report_dict(py, &r)
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(n={}, t={}, T={}, residual_T={:.3e})",
            self.plan.n(),
            self.plan.params.t,
            self.plan.params.big_t,
            self.plan.residual_t()
        )
    }
}

/// Runs one algorithm on the target `amps`; returns the report as a dict with
/// the final state (or reduced density matrix) under `"output"`.
#[pyfunction]
#[pyo3(signature = (algorithm, amps, epsilon, seed = 0, strategy = "clifford", perturbed = false, ideal = false, s = None, t = None, evaluator = "structured"))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    algorithm: &str,
    amps: Vec<Complex64>,
    epsilon: f64,
    seed: u64,
    strategy: &str,
    perturbed: bool,
    ideal: bool,
    s: Option<usize>,
    t: Option<usize>,
    evaluator: &str,
) -> PyResult<Py<PyAny>> {
    let psi = state(amps)?;
    let opts = RunOptions {
        strategy: parse_name("strategy", strategy)?,
        mode: if perturbed {
            ModeKind::Perturbed
        } else {
            ModeKind::Exact
        },
        seed,
        t_override: t,
        s_override: s,
        ideal,
    };
    let r = match parse_name("algorithm", algorithm)? {
        executors::Algorithm::Postselect => {
            let (plan, oracle) = executors::prepare_inner(&psi, epsilon, &opts).map_err(py_err)?;
            executors::run_postselect(&plan, &oracle)
        }
        executors::Algorithm::OneQuery => executors::run_one_query(&psi, epsilon, &opts),
        executors::Algorithm::TenQuery => executors::run_ten_query(&psi, epsilon, &opts),
        executors::Algorithm::FourQuery => executors::run_four_query(
            &psi,
            epsilon,
            parse_name::<Evaluator>("evaluator", evaluator)?,
            &opts,
        ),
    }
    .map_err(py_err)?;
    report_dict(py, &r)
}

/// Runs an experiment config given as JSON text, as `qsynth synth` does.
#[pyfunction]
fn run_config(py: Python<'_>, config_json: &str) -> PyResult<Py<PyAny>> {
    let c = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let o = run_config_inner(&c).map_err(py_err)?;
    let d = report_dict(py, &o.report)?;
    d.bind(py).set_item("wall_ms", o.wall_ms)?;
    d.bind(py).set_item("warnings", o.warnings)?;
    Ok(d)
}

#[pyfunction]
fn sphere_measure(d: usize) -> f64 {
    geometry::sphere_measure(d)
}

#[pyfunction]
fn cap_fraction(n: usize, epsilon: f64) -> PyResult<f64> {
    Ok(geometry::cap_fraction(
        &geometry::GeometryQuery::new(n, epsilon).map_err(py_err)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (n, epsilon, trials, seed = 0))]
fn monte_carlo_cap(n: usize, epsilon: f64, trials: usize, seed: u64) -> PyResult<f64> {
    let q = geometry::GeometryQuery::new(n, epsilon).map_err(py_err)?;
    geometry::monte_carlo_cap(&q, trials, seed).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (n, epsilon, s, gates = 3, arity = 3, qubit_constant = geometry::DEFAULT_QUBIT_CONSTANT))]
fn coverage_deficit(
    n: usize,
    epsilon: f64,
    s: usize,
    gates: usize,
    arity: usize,
    qubit_constant: f64,
) -> PyResult<f64> {
    geometry::coverage_deficit_with(n, epsilon, s, gates, arity, qubit_constant).map_err(py_err)
}

/// Randomized invariant suites; returns `(name, passed, failures)` triples.
#[pyfunction(name = "verify")]
#[pyo3(signature = (instances = 200, seed = 0, only = None))]
fn run_verify(
    py: Python<'_>,
    instances: usize,
    seed: u64,
    only: Option<String>,
) -> Vec<(String, bool, Vec<String>)> {
    let report = py.detach(|| verify::run_selected(instances, seed, only.as_deref()));
    report
        .suites
        .into_iter()
        .map(|s| (s.name.clone(), s.passed(), s.failures))
        .collect()
}

#[pymodule]
fn qsynth(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(haar_state, m)?)?;
    m.add_function(wrap_pyfunction!(derive_params, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance_pure, m)?)?;
    m.add_function(wrap_pyfunction!(purify_rank1, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_measure, m)?)?;
    m.add_function(wrap_pyfunction!(cap_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_cap, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_deficit, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
