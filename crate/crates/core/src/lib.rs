//! Merit-order dispatch cost curves and storage scheduling.
//!
//! The crate models a generator fleet whose fuel and carbon costs induce a
//! piecewise-linear (and generally non-convex) social-cost curve, and
//! schedules a storage unit against that curve with a discretized dynamic
//! program whose discretization error is provably bounded. Brute-force
//! oracles, accuracy/runtime sweeps, and CSV ingestion round out the
//! toolkit.
//!
//! Modules:
//! - [`dispatch`]: fleets, merit order, cost curves and their queries.
//! - [`storage`]: demand profiles, storage specs, the DP solver, schedule
//!   evaluation, and the discretization error bound.
//! - [`oracle`]: factorial and exhaustive reference searches.
//! - [`metrics`]: accuracy sweeps, runtime sweeps, daily reduction reports
//!   and the carbon-aware vs. arbitrage comparison.
//! - [`data`]: CSV fleet/demand ingestion, scaling, serialization.
//! - [`synth`]: seeded synthetic fleets and demand profiles.

pub mod data;
pub mod dispatch;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod storage;
pub mod synth;

pub use data::{load_demand, load_fleet, save_demand, save_fleet, scale_demand};
pub use dispatch::{
    build_cost_curve, build_merit_order, dispatch, CostCurve, Fleet, Generator, MeritOrder,
    Segment,
};
pub use error::{Error, Result};
pub use metrics::{
    accuracy_sweep, arbitrage_comparison, reduction_report, runtime_sweep, AccuracyPoint,
    ArbitrageComparison, DayReduction, ReductionReport, RuntimePoint,
};
pub use oracle::{brute_force_fuel_cost, exhaustive_search, OracleSolution};
pub use storage::{
    error_bound, evaluate_schedule, expected_stage_cost, feasible_predecessors, solve_dp,
    stage_cost, DPResult, DemandProfile, ErrorDistribution, Schedule, StepCost, StorageSpec,
};
pub use synth::{synth_demand, synth_fleet};
