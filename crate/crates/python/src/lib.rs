//! Python bindings: instances, the solver, the 1-tree bound and candidate tables.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use rlkopt::bench::{self, Format, SuiteConfig};
use rlkopt::solver::{initial_table, preprocess, solve_with};
use rlkopt::tsplib::LoadError;
use rlkopt::{subgradient_ascent, AscentConfig, KnownOptima, Metric, RLConfig, SolverConfig, Strategy};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_metric(s: &str) -> PyResult<Metric> {
    match s.to_ascii_uppercase().as_str() {
        "EUC_2D" => Ok(Metric::Euc2d),
        "CEIL_2D" => Ok(Metric::Ceil2d),
        "ATT" => Ok(Metric::Att),
        "GEO" => Ok(Metric::Geo),
        other => Err(value_err(format!("unsupported metric {other}"))),
    }
}

/// A symmetric TSP instance.
#[pyclass(module = "pyrlkopt")]
struct Instance {
    inner: rlkopt::Instance,
}

#[pymethods]
impl Instance {
    /// Reads a TSPLIB file; the bundled optima table fills in `known_optimum`.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let mut inner = rlkopt::load_instance(path).map_err(|e| match e {
            LoadError::Io { .. } => PyOSError::new_err(e.to_string()),
            LoadError::Parse { .. } => value_err(format!("{e}: {}", std::error::Error::source(&e).unwrap())),
        })?;
        KnownOptima::bundled().annotate(&mut inner);
        Ok(Instance { inner })
    }

    /// Parses TSPLIB text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let mut inner = rlkopt::parse_instance(text).map_err(value_err)?;
        KnownOptima::bundled().annotate(&mut inner);
        Ok(Instance { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (name, coords, metric = "EUC_2D"))]
    fn from_coords(name: &str, coords: Vec<(f64, f64)>, metric: &str) -> PyResult<Self> {
        let inner = rlkopt::Instance::from_coords(name, parse_metric(metric)?, coords).map_err(value_err)?;
        Ok(Instance { inner })
    }

    /// Builds an instance from a full symmetric distance matrix.
    #[staticmethod]
    fn from_matrix(name: &str, matrix: Vec<Vec<i64>>) -> PyResult<Self> {
        let n = matrix.len();
        if matrix.iter().any(|r| r.len() != n) {
            return Err(value_err("matrix must be square"));
        }
        let inner = rlkopt::Instance::from_matrix(name, n, matrix.concat()).map_err(value_err)?;
        Ok(Instance { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn known_optimum(&self) -> Option<i64> {
        self.inner.known_optimum
    }

    #[setter]
    fn set_known_optimum(&mut self, value: Option<i64>) {
        self.inner.known_optimum = value;
    }

    fn distance(&self, i: usize, j: usize) -> PyResult<i64> {
        self.inner.checked_distance(i, j).map_err(value_err)
    }

    /// Length of a closed tour given as a permutation of 0-based cities.
    fn tour_length(&self, order: Vec<usize>) -> PyResult<i64> {
        rlkopt::Tour::new(order.clone()).map_err(value_err)?;
        if order.len() != self.inner.dimension() {
            return Err(value_err("tour must visit every city"));
        }
        Ok(self.inner.tour_length(&order))
    }

    fn to_tsplib(&self) -> String {
        self.inner.to_tsplib()
    }

    fn __repr__(&self) -> String {
        format!("Instance(name={:?}, dimension={})", self.inner.name, self.inner.dimension())
    }
}

/// Outcome of one solve.
#[pyclass(module = "pyrlkopt", get_all)]
struct RunResult {
    best_length: i64,
    best_tour: Vec<usize>,
    trials_used: usize,
    wall_time: f64,
    reached_optimum: bool,
    timed_out: bool,
    /// Best length after each trial.
    best_by_trial: Vec<i64>,
    /// ε in effect during each trial.
    epsilon_by_trial: Vec<f64>,
    /// Full result, trials and counters included, as JSON.
    json: String,
}

#[pymethods]
impl RunResult {
    fn __repr__(&self) -> String {
        format!("RunResult(best_length={}, trials_used={})", self.best_length, self.trials_used)
    }
}

fn parse_strategy(s: &str) -> PyResult<Strategy> {
    s.parse().map_err(value_err)
}

#[allow(clippy::too_many_arguments)]
fn config(
    strategy: &str,
    seed: u64,
    max_trials: Option<usize>,
    time_limit: Option<f64>,
    epsilon: f64,
    beta: f64,
    lambda_: f64,
    gamma: f64,
    max_num: Option<usize>,
    stop_at_optimum: bool,
) -> PyResult<SolverConfig> {
    let rl = RLConfig { epsilon, beta, lambda: lambda_, gamma, strategy: parse_strategy(strategy)?, max_num };
    rl.validate().map_err(value_err)?;
    Ok(SolverConfig { max_trials, rl, seed, time_limit, stop_at_optimum, ..SolverConfig::default() })
}

/// Runs one seeded search.
#[pyfunction]
#[pyo3(signature = (instance, strategy = "vsr", seed = 1, max_trials = None, time_limit = None,
    epsilon = 0.4, beta = 0.99, lambda_ = 0.1, gamma = 0.9, max_num = None, stop_at_optimum = true))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    instance: &Instance,
    strategy: &str,
    seed: u64,
    max_trials: Option<usize>,
    time_limit: Option<f64>,
    epsilon: f64,
    beta: f64,
    lambda_: f64,
    gamma: f64,
    max_num: Option<usize>,
    stop_at_optimum: bool,
) -> PyResult<RunResult> {
    let cfg =
        config(strategy, seed, max_trials, time_limit, epsilon, beta, lambda_, gamma, max_num, stop_at_optimum)?;
    let inst = &instance.inner;
    let r = py.detach(|| {
        let pre = preprocess(inst, &cfg);
        solve_with(inst, &pre, &cfg)
    });
    Ok(RunResult {
        best_length: r.best_length,
        best_tour: r.best_tour.clone(),
        trials_used: r.trials_used,
        wall_time: r.wall_time,
        reached_optimum: r.reached_optimum,
        timed_out: r.timed_out,
        best_by_trial: r.trials.iter().map(|t| t.best_length).collect(),
        epsilon_by_trial: r.trials.iter().map(|t| t.epsilon).collect(),
        json: serde_json::to_string(&r).map_err(value_err)?,
    })
}

/// The penalized 1-tree lower bound w(π) after subgradient ascent.
#[pyfunction]
fn lower_bound(py: Python<'_>, instance: &Instance) -> f64 {
    let inst = &instance.inner;
    py.detach(|| subgradient_ascent(inst, &AscentConfig::default()).w())
}

/// Initial candidate lists as `[(city, q), ...]` per city, best first.
#[pyfunction]
#[pyo3(signature = (instance, strategy = "vsr", k = 5))]
fn candidates(py: Python<'_>, instance: &Instance, strategy: &str, k: usize) -> PyResult<Vec<Vec<(usize, f64)>>> {
    let cfg = SolverConfig {
        candidates: k,
        rl: RLConfig { strategy: parse_strategy(strategy)?, ..RLConfig::default() },
        ..SolverConfig::default()
    };
    let inst = &instance.inner;
    Ok(py.detach(|| {
        let pre = preprocess(inst, &cfg);
        let mut qt = initial_table(inst, &pre, &cfg);
        (0..inst.dimension()).map(|i| qt.candidates(i).iter().map(|c| (c.city, c.q)).collect()).collect()
    }))
}

/// α-values per city as `[(city, alpha), ...]` over the nearest `neighborhood` cities.
#[pyfunction]
#[pyo3(signature = (instance, neighborhood = 20))]
fn alpha_values(py: Python<'_>, instance: &Instance, neighborhood: usize) -> Vec<Vec<(usize, f64)>> {
    let cfg = SolverConfig { neighborhood, ..SolverConfig::default() };
    let inst = &instance.inner;
    py.detach(|| {
        let pre = preprocess(inst, &cfg);
        (0..inst.dimension()).map(|i| pre.alpha.row(i).iter().map(|e| (e.city, e.alpha())).collect()).collect()
    })
}

/// Mean relative excess of `lengths` over `optimum`, or None without an optimum.
#[pyfunction]
#[pyo3(signature = (lengths, optimum))]
fn gap(lengths: Vec<i64>, optimum: Option<i64>) -> Option<f64> {
    bench::gap(&lengths, optimum)
}

/// Multi-run experiment; returns the report as CSV, JSON or an aligned table.
#[pyfunction]
#[pyo3(signature = (instances, strategies = vec!["vsr".to_string()], runs = 10, seed = 1, max_trials = None, format = "csv"))]
fn run_suite(
    py: Python<'_>,
    instances: Vec<PyRef<'_, Instance>>,
    strategies: Vec<String>,
    runs: usize,
    seed: u64,
    max_trials: Option<usize>,
    format: &str,
) -> PyResult<String> {
    let insts: Vec<rlkopt::Instance> = instances.iter().map(|i| i.inner.clone()).collect();
    let cfg = SuiteConfig {
        solver: SolverConfig { max_trials, ..SolverConfig::default() },
        strategies: strategies.iter().map(|s| parse_strategy(s)).collect::<PyResult<_>>()?,
        runs,
        base_seed: seed,
        threads: None,
    };
    let format: Format = format.parse().map_err(value_err)?;
    let result = py.detach(|| bench::run_suite(&insts, &cfg));
    bench::emit_report(&result.reports, format).map_err(value_err)
}

#[pymodule]
fn pyrlkopt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(candidates, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_values, m)?)?;
    m.add_function(wrap_pyfunction!(gap, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add("STRATEGIES", Strategy::ALL.iter().map(|s| s.name()).collect::<Vec<_>>())?;
    Ok(())
}
