//! Python bindings for `coexist`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::coexist as core;
use core::oracle::{self, Player};
use core::scenarios::{Pairing, ScenarioSpec, ALPHA_GRID};
use core::sim;
use core::stage_game;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn player(name: &str) -> PyResult<Player> {
    match name.to_ascii_lowercase().as_str() {
        "aon" => Ok(Player::Aon),
        "ton" => Ok(Player::Ton),
        other => Err(PyValueError::new_err(format!("unknown player {other:?}, expected 'aon' or 'ton'"))),
    }
}

/// Slot durations and data rate.
#[pyclass(name = "SlotLengths", module = "coexist", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PySlotLengths {
    inner: core::SlotLengths,
}

#[pymethods]
impl PySlotLengths {
    #[new]
    #[pyo3(signature = (sigma_idle, sigma_succ, sigma_col, rate = 1.0))]
    fn new(sigma_idle: f64, sigma_succ: f64, sigma_col: f64, rate: f64) -> PyResult<Self> {
        let inner = core::SlotLengths::new(sigma_idle, sigma_succ, sigma_col, rate).map_err(err)?;
        Ok(Self { inner })
    }

    /// Idle slot `beta`, success and collision slots `1 + beta`.
    #[staticmethod]
    #[pyo3(signature = (beta, rate = 1.0))]
    fn from_beta(beta: f64, rate: f64) -> PyResult<Self> {
        let inner = core::SlotLengths::from_beta(beta, rate).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn sigma_idle(&self) -> f64 {
        self.inner.sigma_idle
    }

    #[getter]
    fn sigma_succ(&self) -> f64 {
        self.inner.sigma_succ
    }

    #[getter]
    fn sigma_col(&self) -> f64 {
        self.inner.sigma_col
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate
    }

    fn __repr__(&self) -> String {
        let l = &self.inner;
        format!(
            "SlotLengths(sigma_idle={}, sigma_succ={}, sigma_col={}, rate={})",
            l.sigma_idle, l.sigma_succ, l.sigma_col, l.rate
        )
    }
}

/// One stage of the AON/TON game at a given AON age.
#[pyclass(name = "StageGame", module = "coexist", frozen)]
struct PyStageGame {
    params: stage_game::StageGameParams,
}

impl PyStageGame {
    fn profile(tau_aon: f64, tau_ton: f64) -> PyResult<core::StrategyProfile> {
        core::StrategyProfile::new(tau_aon, tau_ton).map_err(err)
    }
}

#[pymethods]
impl PyStageGame {
    #[new]
    fn new(n_aon: usize, n_ton: usize, lengths: PySlotLengths, age: f64) -> PyResult<Self> {
        let params = stage_game::StageGameParams::new(n_aon, n_ton, lengths.inner, age).map_err(err)?;
        Ok(Self { params })
    }

    #[getter]
    fn age_threshold(&self) -> f64 {
        self.params.age_threshold()
    }

    /// `(u_ton, u_aon)` for the given access probabilities.
    fn payoffs(&self, tau_aon: f64, tau_ton: f64) -> PyResult<(f64, f64)> {
        let u = core::stage_payoffs(&self.params, &Self::profile(tau_aon, tau_ton)?).map_err(err)?;
        Ok((u.u_ton, u.u_aon))
    }

    /// Same as `payoffs`, by enumerating every pure profile.
    fn payoffs_bruteforce(&self, tau_aon: f64, tau_ton: f64) -> PyResult<(f64, f64)> {
        let u = oracle::expected_payoffs_bruteforce(&self.params, &Self::profile(tau_aon, tau_ton)?)
            .map_err(err)?;
        Ok((u.u_ton, u.u_aon))
    }

    /// Closed-form equilibrium; requires equal success and collision slots.
    fn msne<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let eq = core::msne(&self.params).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("tau_aon", eq.tau_aon_star)?;
        d.set_item("tau_ton", eq.tau_ton_star)?;
        d.set_item("age_threshold", eq.age_threshold)?;
        d.set_item("clamped", eq.clamped)?;
        Ok(d)
    }

    /// AON equilibrium access probability against `tau_ton` for arbitrary slot lengths.
    fn general_msne_aon(&self, tau_ton: f64) -> PyResult<f64> {
        stage_game::general_msne_aon(&self.params, tau_ton).map_err(err)
    }

    #[pyo3(signature = (opponent_tau, player_name, grid_step = 1e-4))]
    fn best_response(&self, opponent_tau: f64, player_name: &str, grid_step: f64) -> PyResult<f64> {
        oracle::best_response_grid(&self.params, opponent_tau, player(player_name)?, grid_step)
            .map_err(err)
    }

    /// KKT diagnostics of both players' problems at a profile.
    fn kkt<'py>(&self, py: Python<'py>, tau_aon: f64, tau_ton: f64) -> PyResult<Bound<'py, PyDict>> {
        let k = oracle::kkt_residuals(&self.params, tau_aon, tau_ton).map_err(err)?;
        let d = PyDict::new(py);
        for (name, p) in [("aon", k.aon), ("ton", k.ton)] {
            let e = PyDict::new(py);
            e.set_item("gradient", p.gradient)?;
            e.set_item("stationarity", p.stationarity)?;
            e.set_item("boundary_ok", p.boundary_ok)?;
            d.set_item(name, e)?;
        }
        Ok(d)
    }

    fn aon_age_derivative(&self, tau_aon: f64, tau_ton: f64) -> f64 {
        oracle::aon_age_derivative(&self.params, tau_aon, tau_ton)
    }
}

/// Monte Carlo scenario: two networks coexisting over repeated stages.
#[pyclass(name = "Scenario", module = "coexist", frozen)]
struct PyScenario {
    spec: ScenarioSpec,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (pairing, n_first = 5, n_second = 5, beta = 0.01, runs = 2000, stages = 1000, seed = 7, rate = 1.0, alphas = None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        pairing: &str,
        n_first: usize,
        n_second: usize,
        beta: f64,
        runs: usize,
        stages: usize,
        seed: u64,
        rate: f64,
        alphas: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let spec = ScenarioSpec {
            pairing: pairing.parse::<Pairing>().map_err(err)?,
            n_first,
            n_second,
            beta,
            rate,
            alphas: alphas.unwrap_or_else(|| ALPHA_GRID.to_vec()),
            runs,
            stages,
            master_seed: seed,
        };
        spec.build().map_err(err)?;
        Ok(Self { spec })
    }

    /// Aggregate over all runs: discounted payoffs per network and slot frequencies.
    #[pyo3(signature = (threads = None))]
    fn run<'py>(&self, py: Python<'py>, threads: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
        let config = self.spec.build().map_err(err)?;
        let agg = py
            .detach(|| sim::monte_carlo_with_threads(&config, threads))
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("runs", agg.runs)?;
        d.set_item("stages", agg.stages)?;
        d.set_item("alphas", agg.alphas.clone())?;
        d.set_item("freq_idle", agg.freq_idle)?;
        d.set_item("freq_collision", agg.freq_collision)?;
        let mut nets = Vec::new();
        for n in &agg.networks {
            let e = PyDict::new(py);
            e.set_item("kind", n.kind.as_str())?;
            e.set_item("n_nodes", n.n_nodes)?;
            e.set_item("discounted_mean", n.discounted.iter().map(|x| x.mean).collect::<Vec<_>>())?;
            e.set_item("discounted_se", n.discounted.iter().map(|x| x.std_error).collect::<Vec<_>>())?;
            e.set_item("freq_success_per_node", n.freq_success_per_node)?;
            e.set_item("freq_tau_zero", n.freq_tau_zero)?;
            nets.push(e);
        }
        d.set_item("networks", nets)?;
        Ok(d)
    }

    /// Stage records of one run.
    #[pyo3(signature = (run_index = 0))]
    fn trace<'py>(&self, py: Python<'py>, run_index: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let config = self.spec.build().map_err(err)?;
        let records = sim::simulate_run(&config, run_index).map_err(err)?;
        records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("stage", r.stage_index)?;
                d.set_item("tau", r.tau_by_network.clone())?;
                d.set_item("slot_type", r.slot_type.as_str())?;
                d.set_item("payoffs", r.payoffs.clone())?;
                d.set_item("avg_age", r.avg_age_end.clone())?;
                Ok(d)
            })
            .collect()
    }
}

/// Slot outcome probabilities for a vector of per-node access probabilities.
#[pyfunction]
fn slot_probabilities<'py>(py: Python<'py>, taus: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let v = core::AccessVector::new(taus).map_err(err)?;
    let p = core::slot_model::slot_probabilities(&v);
    let d = PyDict::new(py);
    d.set_item("p_idle", p.p_idle)?;
    d.set_item("p_succ_node", p.p_succ_node.clone())?;
    d.set_item("p_succ_total", p.p_succ_total)?;
    d.set_item("p_col", p.p_col)?;
    Ok(d)
}

/// `(1 - alpha) * sum_n alpha^(n-1) u_n`.
#[pyfunction]
fn discounted_payoff(stage_payoffs: Vec<f64>, alpha: f64) -> PyResult<f64> {
    sim::discounted_payoff(&stage_payoffs, alpha).map_err(err)
}

#[pymodule]
#[pyo3(name = "coexist")]
fn coexist_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySlotLengths>()?;
    m.add_class::<PyStageGame>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(slot_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(discounted_payoff, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
