//! Python extension module exposing the railqubo instance model, QUBO
//! compilation and solvers.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use railqubo::io::{export, load_instance};
use railqubo::model::{BlockId, RailwayInstance, Schedule};
use railqubo::qubo::QuboInstance;
use railqubo::solvers::{
    self, EnumerationMode, Heuristic, OrderObjective, SaParams,
};
use std::collections::BTreeMap;
use std::sync::Arc;

fn to_py_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

#[pyclass(name = "Instance")]
#[derive(Clone)]
struct PyInstance {
    inner: Arc<RailwayInstance>,
}

#[pymethods]
impl PyInstance {
    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn train_ids(&self) -> Vec<String> {
        self.inner.trains.iter().map(|t| t.id.clone()).collect()
    }

    #[getter]
    fn block_ids(&self) -> Vec<u32> {
        self.inner.blocks.iter().map(|b| b.id.0).collect()
    }

    #[getter]
    fn p_sum(&self) -> f64 {
        self.inner.p_sum
    }

    #[getter]
    fn p_pair(&self) -> f64 {
        self.inner.p_pair
    }

    /// Primary delay lower bound per (train, station) pair.
    fn unavoidable_delays(&self, py: Python<'_>) -> PyResult<PyObject> {
        let d_u = self.inner.unavoidable_delays();
        let dict = PyDict::new_bound(py);
        for (&(j, s), &d) in d_u.iter() {
            dict.set_item((self.inner.trains[j].id.clone(), s.0), d)?;
        }
        Ok(dict.into())
    }

    /// Compile the instance into its effective QUBO.
    #[pyo3(signature = (p_sum=None, p_pair=None))]
    fn build_qubo(&self, p_sum: Option<f64>, p_pair: Option<f64>) -> PyResult<PyQubo> {
        let qubo = railqubo::qubo::build_qubo(
            &self.inner,
            p_sum.unwrap_or(self.inner.p_sum),
            p_pair.unwrap_or(self.inner.p_pair),
        )
        .map_err(to_py_err)?;
        Ok(PyQubo {
            instance: self.inner.clone(),
            qubo: Arc::new(qubo),
        })
    }

    /// Exact optimum by precedence-order enumeration.
    fn solve_order(&self, py: Python<'_>) -> PyResult<PyObject> {
        let sol = solvers::exact_order_solver(&self.inner, OrderObjective::WeightedSum)
            .map_err(to_py_err)?;
        schedule_result(py, &self.inner, &sol.schedule, Some(sol.objective))
    }

    /// Classical dispatching heuristics: "fcfs", "flfs" or "amcc".
    fn solve_heuristic(&self, py: Python<'_>, name: &str) -> PyResult<PyObject> {
        let heuristic = match name {
            "fcfs" => Heuristic::Fcfs,
            "flfs" => Heuristic::Flfs,
            "amcc" => Heuristic::Amcc,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown heuristic `{other}`"
                )))
            }
        };
        let sol = solvers::dispatch(&self.inner, heuristic).map_err(to_py_err)?;
        let out = schedule_result(py, &self.inner, &sol.schedule, Some(sol.objective))?;
        let dict = out.downcast_bound::<PyDict>(py)?;
        dict.set_item("max_secondary", sol.max_secondary)?;
        dict.set_item("secondary_sum", sol.secondary_sum)?;
        Ok(out)
    }
}

fn schedule_result(
    py: Python<'_>,
    instance: &RailwayInstance,
    schedule: &Schedule,
    objective: Option<f64>,
) -> PyResult<PyObject> {
    let dict = PyDict::new_bound(py);
    let delays = PyDict::new_bound(py);
    for (&(j, s), &d) in &schedule.delays {
        delays.set_item((instance.trains[j].id.clone(), s.0), d)?;
    }
    dict.set_item("delays", delays)?;
    if let Some(v) = objective {
        dict.set_item("objective", v)?;
    }
    let signature = schedule.order_signature(instance).map_err(to_py_err)?;
    dict.set_item("order_signature", signature.render(instance))?;
    Ok(dict.into())
}

#[pyclass(name = "Qubo")]
struct PyQubo {
    instance: Arc<RailwayInstance>,
    qubo: Arc<QuboInstance>,
}

#[pymethods]
impl PyQubo {
    #[getter]
    fn n(&self) -> usize {
        self.qubo.n
    }

    #[getter]
    fn offset_l(&self) -> f64 {
        self.qubo.offset_l
    }

    /// Dense symmetric matrix as a list of rows.
    fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.qubo.n)
            .map(|i| (0..self.qubo.n).map(|j| self.qubo.entry(i, j)).collect())
            .collect()
    }

    fn energy(&self, bits: Vec<bool>) -> PyResult<f64> {
        self.qubo.check_dims(&bits).map_err(to_py_err)?;
        Ok(self.qubo.energy(&bits))
    }

    /// (objective, pair penalty, one-hot penalty, hard penalty).
    fn decompose(&self, bits: Vec<bool>) -> PyResult<(f64, f64, f64, f64)> {
        let parts = self.qubo.decompose(&bits).map_err(to_py_err)?;
        Ok((parts.objective, parts.p_pair, parts.p_sum, parts.hard_penalty))
    }

    fn is_feasible(&self, bits: Vec<bool>) -> bool {
        self.qubo.is_feasible(&bits)
    }

    /// Decode a configuration into {(train, station): delay}.
    fn decode(&self, py: Python<'_>, bits: Vec<bool>) -> PyResult<PyObject> {
        let schedule = self.qubo.decode(&bits).map_err(to_py_err)?;
        schedule_result(py, &self.instance, &schedule, None)
    }

    /// Encode {(train, station): delay} into a configuration.
    fn encode(&self, delays: BTreeMap<(String, u32), i64>) -> PyResult<Vec<bool>> {
        let mut map = BTreeMap::new();
        for ((train, station), d) in delays {
            let j = self.instance.train_index(&train).map_err(to_py_err)?;
            map.insert((j, BlockId(station)), d);
        }
        self.qubo.encode(&Schedule::new(map)).map_err(to_py_err)
    }

    /// Ising form: (h, [(i, j, J)], offset) with
    /// `ising_energy(2x - 1) + offset == qubo_energy(x)`.
    fn to_ising(&self) -> (Vec<f64>, Vec<(usize, usize, f64)>, f64) {
        let ising = self.qubo.to_ising();
        (ising.field, ising.couplings, ising.offset)
    }

    fn export_qubo(&self) -> String {
        export::write_qubo(&self.qubo)
    }

    fn export_ising(&self) -> String {
        export::write_ising(&self.qubo.to_ising())
    }

    /// Exact low-energy spectrum: list of (energy, degeneracy, feasible).
    #[pyo3(signature = (mode="restricted", levels=8))]
    fn spectrum(&self, mode: &str, levels: usize) -> PyResult<Vec<(f64, u64, bool)>> {
        let mode = match mode {
            "full" => EnumerationMode::Full,
            "restricted" => EnumerationMode::OneHotRestricted,
            "single-violations" => EnumerationMode::OneHotPlusSingleViolations,
            other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
        };
        let spectrum = solvers::enumerate_spectrum(&self.qubo, mode, levels).map_err(to_py_err)?;
        Ok(spectrum
            .levels
            .iter()
            .map(|l| (l.energy, l.degeneracy, l.feasible()))
            .collect())
    }

    /// Simulated annealing; returns (best_bits, best_energy).
    #[pyo3(signature = (sweeps=1000, restarts=32, seed=0x5EED))]
    fn simulated_annealing(
        &self,
        sweeps: usize,
        restarts: usize,
        seed: u64,
    ) -> (Vec<bool>, f64) {
        let params = SaParams {
            sweeps,
            restarts,
            seed,
            ..Default::default()
        };
        let out = solvers::simulated_annealing(&self.qubo, &params);
        (out.best_bits, out.best_energy)
    }
}

/// Load an instance from a file path or built-in fixture name.
#[pyfunction]
fn load(path: &str) -> PyResult<PyInstance> {
    let instance = load_instance(path).map_err(to_py_err)?;
    Ok(PyInstance {
        inner: Arc::new(instance),
    })
}

/// Names of the built-in fixtures.
#[pyfunction]
fn fixtures() -> Vec<&'static str> {
    railqubo::io::fixtures::NAMES.to_vec()
}

#[pymodule]
fn _railqubo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(load, m)?)?;
    m.add_function(wrap_pyfunction!(fixtures, m)?)?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyQubo>()?;
    Ok(())
}
