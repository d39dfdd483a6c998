//! Experiment drivers: discretization accuracy and runtime sweeps, and
//! year-long day-by-day reduction reports.
//!
//! These functions wrap the solver in the measurement loops the CLI
//! exposes. They hold no state of their own; every output is determined
//! by the inputs (wall-clock timings aside).

use std::time::Instant;

use serde::Serialize;

use crate::dispatch::{build_cost_curve, CostCurve, Fleet};
use crate::error::{Error, Result};
use crate::storage::{
    evaluate_schedule, solve_dp, DemandProfile, Schedule, StorageSpec,
};

/// One row of an accuracy sweep: the optimal cost at `delta` compared
/// against the cost at the finer reference step.
#[derive(Debug, Clone, Serialize)]
pub struct AccuracyPoint {
    pub delta: f64,
    pub cost: f64,
    pub reference_cost: f64,
    /// `(cost - reference_cost) / (max_marginal_social * horizon)`.
    /// The discretization error bound keeps this at or below `delta`.
    pub gamma: f64,
}

/// Solves the same instance at each step size in `deltas` and at
/// `reference_delta`, reporting the normalized cost gap `gamma` for each.
///
/// `reference_delta` must evenly divide every swept `delta` so the coarse
/// grids nest inside the reference grid and the gap measures discretization
/// alone. The base spec's boundary levels must sit on every grid involved.
pub fn accuracy_sweep(
    curve: &CostCurve,
    profile: &DemandProfile,
    base: &StorageSpec,
    deltas: &[f64],
    reference_delta: f64,
) -> Result<Vec<AccuracyPoint>> {
    if !(reference_delta.is_finite() && reference_delta > 0.0) {
        return Err(Error::validation(format!(
            "reference delta {reference_delta} must be positive"
        )));
    }
    for &delta in deltas {
        let ratio = delta / reference_delta;
        let k = ratio.round();
        if k < 1.0 || (delta - k * reference_delta).abs() > 1e-9 * delta {
            return Err(Error::validation(format!(
                "reference delta {reference_delta} does not evenly divide sweep delta {delta}"
            )));
        }
    }

    let reference_spec =
        StorageSpec::new(base.capacity(), reference_delta, base.s_initial(), base.s_final())?;
    let reference_cost = solve_dp(curve, profile, &reference_spec)?.optimal_cost;
    let denom = curve.max_marginal_social * profile.len() as f64;

    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let spec = StorageSpec::new(base.capacity(), delta, base.s_initial(), base.s_final())?;
        let cost = solve_dp(curve, profile, &spec)?.optimal_cost;
        let gap = cost - reference_cost;
        let gamma = if denom > 0.0 { gap / denom } else { 0.0 };
        points.push(AccuracyPoint { delta, cost, reference_cost, gamma });
    }
    Ok(points)
}

/// One row of a runtime sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RuntimePoint {
    pub delta: f64,
    /// Median wall time of three solves, in seconds.
    pub wall_time_secs: f64,
    pub transitions_evaluated: u64,
}

/// Times the solver at each step size. Each instance is solved three times
/// and the median wall time reported, which shields the numbers from a
/// single scheduling hiccup without pretending to be a real benchmark
/// harness.
pub fn runtime_sweep(
    curve: &CostCurve,
    profile: &DemandProfile,
    base: &StorageSpec,
    deltas: &[f64],
) -> Result<Vec<RuntimePoint>> {
    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let spec = StorageSpec::new(base.capacity(), delta, base.s_initial(), base.s_final())?;
        let mut times = Vec::with_capacity(3);
        let mut transitions = 0;
        for _ in 0..3 {
            let started = Instant::now();
            let result = solve_dp(curve, profile, &spec)?;
            times.push(started.elapsed().as_secs_f64());
            transitions = result.transitions_evaluated;
        }
        times.sort_by(f64::total_cmp);
        points.push(RuntimePoint {
            delta,
            wall_time_secs: times[1],
            transitions_evaluated: transitions,
        });
    }
    Ok(points)
}

/// Outcome of storage scheduling for one day against the no-storage
/// baseline of buying each hour's demand as it comes.
#[derive(Debug, Clone, Serialize)]
pub struct DayReduction {
    pub day: usize,
    pub peak_demand: f64,
    pub social_reduction: f64,
    pub carbon_reduction: f64,
    pub fuel_reduction: f64,
}

/// Day-by-day reductions for a whole demand series, plus the sizing
/// context the days were solved under.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub storage_capacity: f64,
    pub delta: f64,
    pub peak_demand: f64,
    pub total_social_reduction: f64,
    pub total_carbon_reduction: f64,
    pub total_fuel_reduction: f64,
    pub days: Vec<DayReduction>,
}

impl ReductionReport {
    fn from_days(
        storage_capacity: f64,
        delta: f64,
        peak_demand: f64,
        days: Vec<DayReduction>,
    ) -> ReductionReport {
        let mut report = ReductionReport {
            storage_capacity,
            delta,
            peak_demand,
            total_social_reduction: 0.0,
            total_carbon_reduction: 0.0,
            total_fuel_reduction: 0.0,
            days,
        };
        for day in &report.days {
            report.total_social_reduction += day.social_reduction;
            report.total_carbon_reduction += day.carbon_reduction;
            report.total_fuel_reduction += day.fuel_reduction;
        }
        report
    }
}

/// Sizes storage at `storage_fraction` of the series peak, solves each
/// 24-hour day independently with half-full start and end levels, and
/// reports the cost reductions against the no-storage baseline.
///
/// The demand series must cover whole days. A day the solver cannot serve
/// even with storage comes back as [`Error::InfeasibleDay`].
pub fn reduction_report(
    fleet: &Fleet,
    profile: &DemandProfile,
    storage_fraction: f64,
    delta: f64,
) -> Result<ReductionReport> {
    let (curve, spec, peak) = sized_storage(fleet, profile, storage_fraction, delta)?;
    let mut days = Vec::with_capacity(profile.len() / 24);
    for day in 0..profile.len() / 24 {
        let day_profile = profile.slice(day * 24, 24)?;
        let solved = solve_day(&curve, &day_profile, &spec, day)?;
        let baseline = baseline_schedule(&curve, &day_profile, &spec, day)?;
        days.push(day_reduction(day, &day_profile, &baseline, &solved.schedule));
    }
    Ok(ReductionReport::from_days(spec.capacity(), delta, peak, days))
}

/// Carbon-aware scheduling versus price arbitrage on the same storage.
///
/// Both reports share the baseline and are costed under the carbon price
/// `alpha_eval`; the arbitrage schedule is the one a fuel-cost-only
/// optimizer would pick (carbon priced at zero), re-priced afterwards.
#[derive(Debug, Clone, Serialize)]
pub struct ArbitrageComparison {
    pub carbon_aware: ReductionReport,
    pub arbitrage: ReductionReport,
}

pub fn arbitrage_comparison(
    fleet: &Fleet,
    profile: &DemandProfile,
    storage_fraction: f64,
    delta: f64,
    alpha_eval: f64,
) -> Result<ArbitrageComparison> {
    let eval_fleet = fleet.with_alpha(alpha_eval)?;
    let arb_curve = build_cost_curve(&fleet.with_alpha(0.0)?);
    let (eval_curve, spec, peak) = sized_storage(&eval_fleet, profile, storage_fraction, delta)?;

    let day_count = profile.len() / 24;
    let mut aware_days = Vec::with_capacity(day_count);
    let mut arb_days = Vec::with_capacity(day_count);
    for day in 0..day_count {
        let day_profile = profile.slice(day * 24, 24)?;
        let baseline = baseline_schedule(&eval_curve, &day_profile, &spec, day)?;

        let aware = solve_day(&eval_curve, &day_profile, &spec, day)?;
        aware_days.push(day_reduction(day, &day_profile, &baseline, &aware.schedule));

        // Re-price the arbitrage schedule at the evaluation carbon price.
        // Both curves share the same total capacity, so the replay cannot
        // fail on feasibility grounds.
        let arb = solve_day(&arb_curve, &day_profile, &spec, day)?;
        let repriced = evaluate_schedule(&eval_curve, &day_profile, &spec, &arb.schedule.states)?;
        arb_days.push(day_reduction(day, &day_profile, &baseline, &repriced));
    }

    let capacity = spec.capacity();
    Ok(ArbitrageComparison {
        carbon_aware: ReductionReport::from_days(capacity, delta, peak, aware_days),
        arbitrage: ReductionReport::from_days(capacity, delta, peak, arb_days),
    })
}

fn sized_storage(
    fleet: &Fleet,
    profile: &DemandProfile,
    storage_fraction: f64,
    delta: f64,
) -> Result<(CostCurve, StorageSpec, f64)> {
    if !(storage_fraction.is_finite() && storage_fraction >= 0.0) {
        return Err(Error::validation(format!(
            "storage fraction {storage_fraction} must be finite and non-negative"
        )));
    }
    if profile.len() % 24 != 0 {
        return Err(Error::validation(format!(
            "demand series of {} hours does not cover whole days",
            profile.len()
        )));
    }
    let peak = profile.demands().iter().fold(0.0_f64, |m, &d| m.max(d));
    let capacity = storage_fraction * peak;
    let spec = StorageSpec::with_midpoint_boundaries(capacity, delta)?;
    Ok((build_cost_curve(fleet), spec, peak))
}

fn solve_day(
    curve: &CostCurve,
    day_profile: &DemandProfile,
    spec: &StorageSpec,
    day: usize,
) -> Result<crate::storage::DPResult> {
    solve_dp(curve, day_profile, spec).map_err(|e| match e {
        Error::Infeasible { stage } => Error::InfeasibleDay { day, stage },
        other => other,
    })
}

fn baseline_schedule(
    curve: &CostCurve,
    day_profile: &DemandProfile,
    spec: &StorageSpec,
    day: usize,
) -> Result<Schedule> {
    let held = vec![spec.s_initial(); day_profile.len() + 1];
    evaluate_schedule(curve, day_profile, spec, &held).map_err(|e| match e {
        Error::Validation(msg) => {
            Error::validation(format!("day {day} baseline without storage: {msg}"))
        }
        other => other,
    })
}

fn day_reduction(
    day: usize,
    day_profile: &DemandProfile,
    baseline: &Schedule,
    optimized: &Schedule,
) -> DayReduction {
    let peak = day_profile.demands().iter().fold(0.0_f64, |m, &d| m.max(d));
    DayReduction {
        day,
        peak_demand: peak,
        social_reduction: baseline.total_social() - optimized.total_social(),
        carbon_reduction: baseline.total_carbon() - optimized.total_carbon(),
        fuel_reduction: baseline.total_fuel() - optimized.total_fuel(),
    }
}
