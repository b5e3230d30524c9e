//! Python module `tpbsim`: parameters, populations, ensembles, sweeps and
//! the command-line entry point.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tpbsim_core::metrics::TimeStats;
use tpbsim_core::{
    self as core, BehaviorType, Config, DetectionParams, EnsembleSummary, InitRange, Scenario,
    TransitionOutcome,
};

fn to_py(err: core::Error) -> PyErr {
    match err {
        core::Error::Io { .. } => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn behavior(name: &str) -> PyResult<BehaviorType> {
    name.parse().map_err(to_py)
}

fn range(bounds: (f64, f64)) -> PyResult<InitRange> {
    InitRange::new(bounds.0, bounds.1).map_err(to_py)
}

/// Behavioral parameters. `lam` is the attitude feedback rate.
#[pyclass(module = "tpbsim", frozen, from_py_object)]
#[derive(Clone)]
pub struct ModelParams(core::ModelParams);

#[pymethods]
impl ModelParams {
    #[new]
    #[pyo3(signature = (behavior, phi, beta, lam = 1.0))]
    fn new(behavior: &str, phi: f64, beta: f64, lam: f64) -> PyResult<Self> {
        let b = self::behavior(behavior)?;
        core::ModelParams::new(b, phi, beta, lam).map(Self).map_err(to_py)
    }

    #[getter]
    fn behavior(&self) -> &'static str {
        self.0.behavior.as_str()
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.0.phi
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda
    }

    fn __repr__(&self) -> String {
        format!(
            "ModelParams(behavior={:?}, phi={}, beta={}, lam={})",
            self.0.behavior.as_str(),
            self.0.phi,
            self.0.beta,
            self.0.lambda
        )
    }
}

/// Population layout. Ranges default to the behavior type's standard ones.
#[pyclass(module = "tpbsim", frozen, from_py_object)]
#[derive(Clone)]
pub struct PopulationConfig(core::PopulationConfig);

#[pymethods]
impl PopulationConfig {
    #[new]
    #[pyo3(signature = (behavior, n = 300, alpha = 0.9, seed = 0, majority_range = None, minority_range = None))]
    fn new(
        behavior: &str,
        n: usize,
        alpha: f64,
        seed: u64,
        majority_range: Option<(f64, f64)>,
        minority_range: Option<(f64, f64)>,
    ) -> PyResult<Self> {
        let mut config = core::PopulationConfig::new(self::behavior(behavior)?).with_seed(seed);
        config.n = n;
        config.alpha = alpha;
        if let Some(r) = majority_range {
            config.majority_range = range(r)?;
        }
        if let Some(r) = minority_range {
            config.minority_range = range(r)?;
        }
        config.validate().map_err(to_py)?;
        Ok(Self(config))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    fn majority_size(&self) -> usize {
        self.0.majority_size()
    }
}

/// A live population that can be stepped one update at a time.
#[pyclass(module = "tpbsim")]
pub struct Population {
    inner: core::Population,
    params: core::ModelParams,
}

#[pymethods]
impl Population {
    #[new]
    fn new(config: &PopulationConfig, params: &ModelParams) -> PyResult<Self> {
        let inner = core::Population::init(&config.0, &params.0).map_err(to_py)?;
        Ok(Self { inner, params: params.0 })
    }

    /// Advances one synchronous step and returns the new adoption rate.
    fn step(&mut self) -> PyResult<f64> {
        self.inner.step(&self.params).map_err(to_py)?;
        Ok(self.inner.y_avg())
    }

    fn y_avg(&self) -> f64 {
        self.inner.y_avg()
    }

    #[getter]
    fn time(&self) -> u64 {
        self.inner.time()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Agent states as `(x0, x, z, p, y, h)` tuples.
    fn agents(&self) -> Vec<(f64, f64, f64, f64, u8, u64)> {
        self.inner
            .agents()
            .iter()
            .map(|a| (a.x0, a.x, a.z, a.p, a.y, a.h))
            .collect()
    }
}

#[pyfunction]
fn attitude_update(x0: f64, lam: f64, h: u64, behavior: &str) -> PyResult<f64> {
    core::attitude_update(x0, lam, h, self::behavior(behavior)?).map_err(to_py)
}

#[pyfunction]
fn intention_update(attitude: f64, norm: f64, phi: f64) -> PyResult<f64> {
    core::intention_update(attitude, norm, phi).map_err(to_py)
}

#[pyfunction]
fn choice_probability(z: f64, beta: f64) -> PyResult<f64> {
    core::choice_probability(z, beta).map_err(to_py)
}

/// Adoption-rate series `y_avg(0..=horizon)` of one run.
#[pyfunction]
#[pyo3(signature = (config, params, horizon = 300))]
fn run(config: &PopulationConfig, params: &ModelParams, horizon: usize) -> PyResult<Vec<f64>> {
    core::run(&config.0, &params.0, horizon)
        .map(|t| t.y_avg_series)
        .map_err(to_py)
}

fn detection(
    adopt_threshold: f64,
    reject_threshold: f64,
    window: usize,
    noise_floor: f64,
) -> DetectionParams {
    DetectionParams {
        adopt_threshold,
        reject_threshold,
        window,
        noise_floor,
    }
}

fn outcome_dict<'py>(py: Python<'py>, o: &TransitionOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("regime", o.regime.as_str())?;
    d.set_item("transition_time", o.transition_time)?;
    d.set_item("terminal_rate", o.terminal_rate)?;
    d.set_item("fluctuation_band", o.fluctuation_band)?;
    Ok(d)
}

fn times_dict<'py>(py: Python<'py>, t: Option<TimeStats>) -> PyResult<Option<Bound<'py, PyDict>>> {
    t.map(|t| {
        let d = PyDict::new(py);
        d.set_item("median", t.median)?;
        d.set_item("q25", t.q25)?;
        d.set_item("q75", t.q75)?;
        d.set_item("count", t.count)?;
        Ok(d)
    })
    .transpose()
}

fn summary_dict<'py>(py: Python<'py>, s: &EnsembleSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let counts = PyDict::new(py);
    for regime in core::Regime::ALL {
        counts.set_item(regime.as_str(), s.regime_counts.get(regime))?;
    }
    let q = &s.per_step_quantiles;
    d.set_item("replicates", s.replicates)?;
    d.set_item("regime_counts", counts)?;
    d.set_item("median_transition_time", times_dict(py, s.median_transition_time)?)?;
    d.set_item("q10", q.iter().map(|q| q.q10).collect::<Vec<_>>())?;
    d.set_item("median", q.iter().map(|q| q.median).collect::<Vec<_>>())?;
    d.set_item("q90", q.iter().map(|q| q.q90).collect::<Vec<_>>())?;
    d.set_item("terminal_median", s.terminal_median())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (series, adopt_threshold = 0.98, reject_threshold = 0.02, window = 50, noise_floor = 0.015))]
fn detect_transition<'py>(
    py: Python<'py>,
    series: Vec<f64>,
    adopt_threshold: f64,
    reject_threshold: f64,
    window: usize,
    noise_floor: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let det = detection(adopt_threshold, reject_threshold, window, noise_floor);
    let outcome = core::detect_transition(&series, &det).map_err(to_py)?;
    outcome_dict(py, &outcome)
}

/// Runs `replicates` independent populations and summarizes them. The
/// returned dict also carries the classified `regime`.
#[pyfunction]
#[pyo3(signature = (params, replicates = 50, horizon = 300, seed = 0, n = 300, alpha = 0.9))]
fn run_ensemble<'py>(
    py: Python<'py>,
    params: &ModelParams,
    replicates: usize,
    horizon: usize,
    seed: u64,
    n: usize,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut scenario = Scenario::new(params.0);
    scenario.replicates = replicates;
    scenario.horizon = horizon;
    scenario.base_seed = seed;
    scenario.population.n = n;
    scenario.population.alpha = alpha;
    let ensemble = py.detach(|| core::run_ensemble(&scenario)).map_err(to_py)?;
    let d = summary_dict(py, &ensemble.summary)?;
    d.set_item("regime", core::classify_regime(&ensemble.summary, 0.5).as_str())?;
    Ok(d)
}

/// Runs a TOML configuration as a sweep and returns one dict per cell.
#[pyfunction]
fn sweep<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let grid = match core::parse_config(config_toml).map_err(to_py)? {
        Config::Grid(grid) => grid,
        Config::Scenario(s) => core::GridSpec::new(s),
    };
    let cells = py.detach(|| core::sweep_grid(&grid)).map_err(to_py)?;
    cells
        .iter()
        .map(|cell| {
            let d = summary_dict(py, &cell.summary)?;
            let p = &cell.scenario.params;
            d.set_item("phi", p.phi)?;
            d.set_item("beta", p.beta)?;
            d.set_item("lam", p.lambda)?;
            d.set_item("alpha", cell.scenario.population.alpha)?;
            d.set_item("regime", cell.regime.as_str())?;
            Ok(d)
        })
        .collect()
}

/// Bundled configuration text by name, e.g. `"fig3_grid"`.
#[pyfunction]
fn bundled_config(name: &str) -> PyResult<&'static str> {
    core::config::bundled(name).ok_or_else(|| PyValueError::new_err(format!("no bundled config {name:?}")))
}

/// Runs the command-line tool with `args` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("tpbsim".to_string()).chain(args).collect();
    py.detach(|| core::cli::cli_main(argv))
}

#[pymodule]
fn tpbsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ModelParams>()?;
    m.add_class::<PopulationConfig>()?;
    m.add_class::<Population>()?;
    m.add_function(wrap_pyfunction!(attitude_update, m)?)?;
    m.add_function(wrap_pyfunction!(intention_update, m)?)?;
    m.add_function(wrap_pyfunction!(choice_probability, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(detect_transition, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_config, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_conversion() {
        assert_eq!(behavior("harmful").unwrap(), BehaviorType::Harmful);
        assert!(behavior("neutral").is_err());
        assert!(range((0.6, 0.3)).is_err());
        let det = detection(0.9, 0.1, 10, 0.0);
        assert_eq!(det.window, 10);
    }
}
