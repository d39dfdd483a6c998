//! Python bindings for the meritstore library.
//!
//! Wraps the core types in thin frozen classes and re-exposes the solver
//! and experiment entry points as module-level functions. Validation and
//! parse failures raise `ValueError`, infeasible instances raise
//! `RuntimeError`, and I/O failures raise `OSError`.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: meritstore::Error) -> PyErr {
    if err.is_infeasibility() {
        return PyRuntimeError::new_err(err.to_string());
    }
    match err {
        meritstore::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Generator {
    inner: meritstore::Generator,
}

#[pymethods]
impl Generator {
    #[new]
    fn new(id: String, capacity: f64, marginal_fuel_cost: f64, marginal_carbon_emission: f64) -> Self {
        Generator {
            inner: meritstore::Generator::new(id, capacity, marginal_fuel_cost, marginal_carbon_emission),
        }
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn capacity(&self) -> f64 {
        self.inner.capacity
    }

    #[getter]
    fn marginal_fuel_cost(&self) -> f64 {
        self.inner.marginal_fuel_cost
    }

    #[getter]
    fn marginal_carbon_emission(&self) -> f64 {
        self.inner.marginal_carbon_emission
    }

    fn __repr__(&self) -> String {
        format!(
            "Generator(id={:?}, capacity={}, marginal_fuel_cost={}, marginal_carbon_emission={})",
            self.inner.id,
            self.inner.capacity,
            self.inner.marginal_fuel_cost,
            self.inner.marginal_carbon_emission
        )
    }
}

#[pyclass(frozen)]
struct Fleet {
    inner: meritstore::Fleet,
}

#[pymethods]
impl Fleet {
    #[new]
    fn new(generators: Vec<Generator>, alpha: f64) -> PyResult<Self> {
        let gens = generators.into_iter().map(|g| g.inner).collect();
        Ok(Fleet { inner: meritstore::Fleet::new(gens, alpha).map_err(to_py)? })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn generators(&self) -> Vec<Generator> {
        self.inner.generators().iter().map(|g| Generator { inner: g.clone() }).collect()
    }

    fn with_alpha(&self, alpha: f64) -> PyResult<Fleet> {
        Ok(Fleet { inner: self.inner.with_alpha(alpha).map_err(to_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(frozen)]
struct CostCurve {
    inner: meritstore::CostCurve,
}

#[pymethods]
impl CostCurve {
    #[getter]
    fn total_capacity(&self) -> f64 {
        self.inner.total_capacity
    }

    #[getter]
    fn max_marginal_social(&self) -> f64 {
        self.inner.max_marginal_social
    }

    /// Segments as `(x_lo, x_hi, marginal_fuel, marginal_carbon,
    /// marginal_social)` tuples in dispatch order.
    fn segments(&self) -> Vec<(f64, f64, f64, f64, f64)> {
        self.inner.segments.iter().map(|s| (s.x_lo, s.x_hi, s.mf, s.mc, s.ms)).collect()
    }

    fn fuel_cost(&self, x: f64) -> PyResult<f64> {
        self.inner.fuel_cost(x).map_err(to_py)
    }

    fn carbon_cost(&self, x: f64) -> PyResult<f64> {
        self.inner.carbon_cost(x).map_err(to_py)
    }

    fn social_cost(&self, x: f64) -> PyResult<f64> {
        self.inner.social_cost(x).map_err(to_py)
    }

    fn marginal_social_cost(&self, x: f64) -> PyResult<f64> {
        self.inner.marginal_social_cost(x).map_err(to_py)
    }
}

#[pyclass(frozen)]
struct DemandProfile {
    inner: meritstore::DemandProfile,
}

#[pymethods]
impl DemandProfile {
    /// `step_errors`, when given, holds one `[(error, probability), ...]`
    /// list per step describing the demand forecast error distribution.
    #[new]
    #[pyo3(signature = (demands, step_errors=None))]
    fn new(demands: Vec<f64>, step_errors: Option<Vec<Vec<(f64, f64)>>>) -> PyResult<Self> {
        let inner = match step_errors {
            Some(lists) => {
                let dists = lists
                    .into_iter()
                    .map(meritstore::ErrorDistribution::new)
                    .collect::<meritstore::Result<Vec<_>>>()
                    .map_err(to_py)?;
                meritstore::DemandProfile::with_step_errors(demands, dists).map_err(to_py)?
            }
            None => meritstore::DemandProfile::new(demands).map_err(to_py)?,
        };
        Ok(DemandProfile { inner })
    }

    fn demands(&self) -> Vec<f64> {
        self.inner.demands().to_vec()
    }

    fn slice(&self, start: usize, len: usize) -> PyResult<DemandProfile> {
        Ok(DemandProfile { inner: self.inner.slice(start, len).map_err(to_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(frozen)]
struct StorageSpec {
    inner: meritstore::StorageSpec,
}

#[pymethods]
impl StorageSpec {
    #[new]
    fn new(capacity: f64, delta: f64, s_initial: f64, s_final: f64) -> PyResult<Self> {
        Ok(StorageSpec {
            inner: meritstore::StorageSpec::new(capacity, delta, s_initial, s_final).map_err(to_py)?,
        })
    }

    /// Boundary states at the grid point nearest capacity / 2 (ties toward
    /// zero).
    #[staticmethod]
    fn with_midpoint_boundaries(capacity: f64, delta: f64) -> PyResult<StorageSpec> {
        Ok(StorageSpec {
            inner: meritstore::StorageSpec::with_midpoint_boundaries(capacity, delta)
                .map_err(to_py)?,
        })
    }

    #[getter]
    fn capacity(&self) -> f64 {
        self.inner.capacity()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn s_initial(&self) -> f64 {
        self.inner.s_initial()
    }

    #[getter]
    fn s_final(&self) -> f64 {
        self.inner.s_final()
    }

    fn grid_states(&self) -> Vec<f64> {
        self.inner.grid_states()
    }
}

#[pyclass(frozen)]
struct Schedule {
    inner: meritstore::Schedule,
}

#[pymethods]
impl Schedule {
    #[getter]
    fn states(&self) -> Vec<f64> {
        self.inner.states.clone()
    }

    #[getter]
    fn purchases(&self) -> Vec<f64> {
        self.inner.purchases.clone()
    }

    /// Per-step `(fuel, carbon, social)` cost expectations.
    #[getter]
    fn step_costs(&self) -> Vec<(f64, f64, f64)> {
        self.inner.step_costs.iter().map(|c| (c.fuel, c.carbon, c.social)).collect()
    }

    fn total_fuel(&self) -> f64 {
        self.inner.total_fuel()
    }

    fn total_carbon(&self) -> f64 {
        self.inner.total_carbon()
    }

    fn total_social(&self) -> f64 {
        self.inner.total_social()
    }
}

#[pyclass(frozen)]
struct SolveResult {
    #[pyo3(get)]
    optimal_cost: f64,
    #[pyo3(get)]
    transitions_evaluated: u64,
    schedule: Py<Schedule>,
}

#[pymethods]
impl SolveResult {
    #[getter]
    fn schedule(&self, py: Python<'_>) -> Py<Schedule> {
        self.schedule.clone_ref(py)
    }
}

#[pyclass(frozen)]
struct DayReduction {
    #[pyo3(get)]
    day: usize,
    #[pyo3(get)]
    peak_demand: f64,
    #[pyo3(get)]
    social_reduction: f64,
    #[pyo3(get)]
    carbon_reduction: f64,
    #[pyo3(get)]
    fuel_reduction: f64,
}

#[pyclass(frozen)]
struct ReductionReport {
    #[pyo3(get)]
    storage_capacity: f64,
    #[pyo3(get)]
    delta: f64,
    #[pyo3(get)]
    peak_demand: f64,
    #[pyo3(get)]
    total_social_reduction: f64,
    #[pyo3(get)]
    total_carbon_reduction: f64,
    #[pyo3(get)]
    total_fuel_reduction: f64,
    days: Vec<Py<DayReduction>>,
}

#[pymethods]
impl ReductionReport {
    #[getter]
    fn days(&self, py: Python<'_>) -> Vec<Py<DayReduction>> {
        self.days.iter().map(|d| d.clone_ref(py)).collect()
    }
}

fn wrap_report(py: Python<'_>, report: meritstore::ReductionReport) -> PyResult<Py<ReductionReport>> {
    let days = report
        .days
        .into_iter()
        .map(|d| {
            Py::new(
                py,
                DayReduction {
                    day: d.day,
                    peak_demand: d.peak_demand,
                    social_reduction: d.social_reduction,
                    carbon_reduction: d.carbon_reduction,
                    fuel_reduction: d.fuel_reduction,
                },
            )
        })
        .collect::<PyResult<Vec<_>>>()?;
    Py::new(
        py,
        ReductionReport {
            storage_capacity: report.storage_capacity,
            delta: report.delta,
            peak_demand: report.peak_demand,
            total_social_reduction: report.total_social_reduction,
            total_carbon_reduction: report.total_carbon_reduction,
            total_fuel_reduction: report.total_fuel_reduction,
            days,
        },
    )
}

#[pyfunction]
fn build_cost_curve(fleet: &Fleet) -> CostCurve {
    CostCurve { inner: meritstore::build_cost_curve(&fleet.inner) }
}

/// Merit order as the list of generator indices in dispatch order.
#[pyfunction]
fn merit_order(fleet: &Fleet) -> Vec<usize> {
    meritstore::build_merit_order(&fleet.inner).permutation
}

/// Per-generator output meeting demand `x`, in the fleet's original
/// generator order.
#[pyfunction]
fn dispatch(fleet: &Fleet, x: f64) -> PyResult<Vec<f64>> {
    let curve = meritstore::build_cost_curve(&fleet.inner);
    let order = meritstore::build_merit_order(&fleet.inner);
    meritstore::dispatch(&curve, &order, x).map_err(to_py)
}

#[pyfunction]
fn solve_dp(
    py: Python<'_>,
    curve: &CostCurve,
    profile: &DemandProfile,
    spec: &StorageSpec,
) -> PyResult<SolveResult> {
    let result = meritstore::solve_dp(&curve.inner, &profile.inner, &spec.inner).map_err(to_py)?;
    Ok(SolveResult {
        optimal_cost: result.optimal_cost,
        transitions_evaluated: result.transitions_evaluated,
        schedule: Py::new(py, Schedule { inner: result.schedule })?,
    })
}

#[pyfunction]
fn evaluate_schedule(
    py: Python<'_>,
    curve: &CostCurve,
    profile: &DemandProfile,
    spec: &StorageSpec,
    states: Vec<f64>,
) -> PyResult<Py<Schedule>> {
    let schedule = meritstore::evaluate_schedule(&curve.inner, &profile.inner, &spec.inner, &states)
        .map_err(to_py)?;
    Py::new(py, Schedule { inner: schedule })
}

#[pyfunction]
fn error_bound(curve: &CostCurve, horizon: usize, delta: f64) -> f64 {
    meritstore::error_bound(&curve.inner, horizon, delta)
}

#[pyfunction]
fn feasible_predecessors(s: f64, demand: f64, curve: &CostCurve, spec: &StorageSpec) -> Vec<f64> {
    meritstore::feasible_predecessors(s, demand, &curve.inner, &spec.inner)
}

#[pyfunction]
fn brute_force_fuel_cost(fleet: &Fleet, x: f64) -> PyResult<f64> {
    meritstore::brute_force_fuel_cost(&fleet.inner, x).map_err(to_py)
}

/// Optimal cost and state sequence found by enumerating every grid path.
#[pyfunction]
fn exhaustive_search(
    curve: &CostCurve,
    profile: &DemandProfile,
    spec: &StorageSpec,
) -> PyResult<(f64, Vec<f64>)> {
    let solution =
        meritstore::exhaustive_search(&curve.inner, &profile.inner, &spec.inner).map_err(to_py)?;
    Ok((solution.optimal_cost, solution.states))
}

#[pyfunction]
fn synth_fleet(
    seed: u64,
    n: usize,
    capacity_range: (f64, f64),
    mf_range: (f64, f64),
    mce_range: (f64, f64),
    anticorrelate: bool,
    alpha: f64,
) -> PyResult<Fleet> {
    Ok(Fleet {
        inner: meritstore::synth_fleet(seed, n, capacity_range, mf_range, mce_range, anticorrelate, alpha)
            .map_err(to_py)?,
    })
}

#[pyfunction]
fn synth_demand(seed: u64, days: usize, base: f64, amplitude: f64, noise: f64) -> PyResult<DemandProfile> {
    Ok(DemandProfile {
        inner: meritstore::synth_demand(seed, days, base, amplitude, noise).map_err(to_py)?,
    })
}

/// Sweep points as `(delta, cost, reference_cost, gamma)` tuples.
#[pyfunction]
fn accuracy_sweep(
    curve: &CostCurve,
    profile: &DemandProfile,
    spec: &StorageSpec,
    deltas: Vec<f64>,
    reference_delta: f64,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let points =
        meritstore::accuracy_sweep(&curve.inner, &profile.inner, &spec.inner, &deltas, reference_delta)
            .map_err(to_py)?;
    Ok(points.into_iter().map(|p| (p.delta, p.cost, p.reference_cost, p.gamma)).collect())
}

#[pyfunction]
fn reduction_report(
    py: Python<'_>,
    fleet: &Fleet,
    profile: &DemandProfile,
    storage_fraction: f64,
    delta: f64,
) -> PyResult<Py<ReductionReport>> {
    let report = meritstore::reduction_report(&fleet.inner, &profile.inner, storage_fraction, delta)
        .map_err(to_py)?;
    wrap_report(py, report)
}

/// Carbon-aware and fuel-only-arbitrage reduction reports against the
/// shared hold-at-midpoint baseline, as a `(carbon_aware, arbitrage)` pair.
#[pyfunction]
fn arbitrage_comparison(
    py: Python<'_>,
    fleet: &Fleet,
    profile: &DemandProfile,
    storage_fraction: f64,
    delta: f64,
    alpha_eval: f64,
) -> PyResult<(Py<ReductionReport>, Py<ReductionReport>)> {
    let comparison = meritstore::arbitrage_comparison(
        &fleet.inner,
        &profile.inner,
        storage_fraction,
        delta,
        alpha_eval,
    )
    .map_err(to_py)?;
    Ok((wrap_report(py, comparison.carbon_aware)?, wrap_report(py, comparison.arbitrage)?))
}

#[pymodule]
fn meritstore_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Generator>()?;
    m.add_class::<Fleet>()?;
    m.add_class::<CostCurve>()?;
    m.add_class::<DemandProfile>()?;
    m.add_class::<StorageSpec>()?;
    m.add_class::<Schedule>()?;
    m.add_class::<SolveResult>()?;
    m.add_class::<DayReduction>()?;
    m.add_class::<ReductionReport>()?;
    m.add_function(wrap_pyfunction!(build_cost_curve, m)?)?;
    m.add_function(wrap_pyfunction!(merit_order, m)?)?;
    m.add_function(wrap_pyfunction!(dispatch, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dp, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(feasible_predecessors, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_fuel_cost, m)?)?;
    m.add_function(wrap_pyfunction!(exhaustive_search, m)?)?;
    m.add_function(wrap_pyfunction!(synth_fleet, m)?)?;
    m.add_function(wrap_pyfunction!(synth_demand, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(reduction_report, m)?)?;
    m.add_function(wrap_pyfunction!(arbitrage_comparison, m)?)?;
    Ok(())
}
