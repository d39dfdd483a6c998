//! Finite-horizon storage scheduling against a social-cost curve.
//!
//! The storage state is discretized to a `delta`-spaced grid on `[0, B]`
//! and the schedule is found by bottom-up dynamic programming over stages
//! `1..=T`. Stage costs are the social cost of the implied purchase
//! `x_t = s_t - s_{t-1} + D_t`; when a step carries a discrete demand-error
//! distribution the stage cost is the exact probability-weighted sum over
//! scenarios, never the cost of the mean demand (the curve is not convex,
//! so those differ).
//!
//! Discretization is lossy but boundedly so: the gap between the
//! grid-optimal cost and the continuous optimum is at most
//! `max_marginal_social * T * delta` (see [`error_bound`]).

use serde::Serialize;

use crate::dispatch::CostCurve;
use crate::error::{Error, Result};

/// The purchase implied by moving storage from `s_prev` to `s` while
/// serving `demand`. Everything in the crate (solver, schedule evaluation,
/// verification oracles) must price exactly this expression so that equal
/// paths produce bit-equal costs.
#[inline]
pub fn implied_purchase(s: f64, s_prev: f64, demand: f64) -> f64 {
    (s - s_prev) + demand
}

/// A discrete demand-error distribution: `(offset, probability)` pairs.
/// Probabilities are non-negative and sum to one within 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorDistribution {
    entries: Vec<(f64, f64)>,
}

impl ErrorDistribution {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::validation("error distribution must have at least one entry"));
        }
        let mut total = 0.0;
        for &(offset, prob) in &entries {
            if !offset.is_finite() {
                return Err(Error::validation(format!(
                    "error distribution offset {offset} is not finite"
                )));
            }
            if !prob.is_finite() || prob < 0.0 {
                return Err(Error::validation(format!(
                    "error distribution probability {prob} is not a finite non-negative number"
                )));
            }
            total += prob;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "error distribution probabilities sum to {total}, expected 1"
            )));
        }
        Ok(ErrorDistribution { entries })
    }

    /// A distribution concentrated on a single offset.
    pub fn point_mass(offset: f64) -> Self {
        ErrorDistribution {
            entries: vec![(offset, 1.0)],
        }
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }
}

/// Hourly demand over the horizon, optionally with a per-step discrete
/// error distribution describing forecast uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandProfile {
    demands: Vec<f64>,
    step_errors: Option<Vec<ErrorDistribution>>,
}

impl DemandProfile {
    pub fn new(demands: Vec<f64>) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::validation("demand profile must cover at least one step"));
        }
        for (t, &d) in demands.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::validation(format!(
                    "demand at step {t} must be finite and non-negative, got {d}"
                )));
            }
        }
        Ok(DemandProfile {
            demands,
            step_errors: None,
        })
    }

    /// Attaches one error distribution per step.
    pub fn with_step_errors(
        demands: Vec<f64>,
        step_errors: Vec<ErrorDistribution>,
    ) -> Result<Self> {
        if step_errors.len() != demands.len() {
            return Err(Error::validation(format!(
                "got {} error distributions for {} demand steps",
                step_errors.len(),
                demands.len()
            )));
        }
        let mut profile = DemandProfile::new(demands)?;
        profile.step_errors = Some(step_errors);
        Ok(profile)
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub fn step_errors(&self) -> Option<&[ErrorDistribution]> {
        self.step_errors.as_deref()
    }

    pub fn error_at(&self, step: usize) -> Option<&ErrorDistribution> {
        self.step_errors.as_ref().map(|v| &v[step])
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        false // validated profiles always cover at least one step
    }

    /// The `len` steps starting at `start`, keeping any per-step error
    /// distributions. Used to split an annual profile into days.
    pub fn slice(&self, start: usize, len: usize) -> Result<DemandProfile> {
        if len == 0 || start + len > self.demands.len() {
            return Err(Error::validation(format!(
                "slice [{start}, {}) out of range for {}-step profile",
                start + len,
                self.demands.len()
            )));
        }
        Ok(DemandProfile {
            demands: self.demands[start..start + len].to_vec(),
            step_errors: self
                .step_errors
                .as_ref()
                .map(|v| v[start..start + len].to_vec()),
        })
    }
}

/// Storage parameters: usable capacity `B`, grid spacing `delta`, and the
/// boundary states the schedule must start and end at. Both boundaries
/// must be grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StorageSpec {
    capacity: f64,
    delta: f64,
    s_initial: f64,
    s_final: f64,
}

impl StorageSpec {
    pub fn new(capacity: f64, delta: f64, s_initial: f64, s_final: f64) -> Result<Self> {
        if !capacity.is_finite() || capacity < 0.0 {
            return Err(Error::validation(format!(
                "storage capacity must be finite and non-negative, got {capacity}"
            )));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::validation(format!(
                "grid spacing delta must be finite and positive, got {delta}"
            )));
        }
        let spec = StorageSpec {
            capacity,
            delta,
            s_initial,
            s_final,
        };
        let grid = spec.grid_states();
        for (name, value) in [("s_initial", s_initial), ("s_final", s_final)] {
            if grid.binary_search_by(|g| g.total_cmp(&value)).is_err() {
                return Err(Error::validation(format!(
                    "{name} = {value} is not a grid state for capacity {capacity}, delta {delta}"
                )));
            }
        }
        Ok(spec)
    }

    /// Boundaries at half capacity, rounded to the nearest grid state with
    /// ties toward zero. Starting and ending half-full denies the schedule
    /// any free energy, so cost differences reflect operation alone.
    pub fn with_midpoint_boundaries(capacity: f64, delta: f64) -> Result<Self> {
        if !capacity.is_finite() || capacity < 0.0 {
            return Err(Error::validation(format!(
                "storage capacity must be finite and non-negative, got {capacity}"
            )));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::validation(format!(
                "grid spacing delta must be finite and positive, got {delta}"
            )));
        }
        let probe = StorageSpec {
            capacity,
            delta,
            s_initial: 0.0,
            s_final: 0.0,
        };
        let target = capacity / 2.0;
        let mut best = 0.0;
        let mut best_dist = f64::INFINITY;
        for &g in &probe.grid_states() {
            let dist = (g - target).abs();
            if dist < best_dist {
                best_dist = dist;
                best = g;
            }
        }
        StorageSpec::new(capacity, delta, best, best)
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn s_initial(&self) -> f64 {
        self.s_initial
    }

    pub fn s_final(&self) -> f64 {
        self.s_final
    }

    /// The state grid `{0, delta, 2*delta, ...}` up to capacity, with the
    /// capacity itself appended when it is not a multiple of `delta`.
    /// Values are computed as `i * delta` (not accumulated) so the same
    /// index always yields the same bits.
    pub fn grid_states(&self) -> Vec<f64> {
        if self.capacity == 0.0 {
            return vec![0.0];
        }
        // Largest k with k*delta <= capacity, corrected for the float
        // division landing on either side of the true quotient.
        let mut k = (self.capacity / self.delta).floor();
        while k > 0.0 && k * self.delta > self.capacity {
            k -= 1.0;
        }
        while (k + 1.0) * self.delta <= self.capacity {
            k += 1.0;
        }
        let k = k as usize;
        let mut states: Vec<f64> = (0..=k).map(|i| i as f64 * self.delta).collect();
        if *states.last().expect("grid is non-empty") < self.capacity {
            states.push(self.capacity);
        }
        states
    }
}

/// Cost of one schedule step, split into its fuel and carbon parts.
/// When the step has a demand-error distribution these are expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepCost {
    pub fuel: f64,
    pub carbon: f64,
    pub social: f64,
}

/// A feasible storage trajectory: `states` has `T + 1` entries (including
/// both boundaries), `purchases` and `step_costs` have `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub states: Vec<f64>,
    pub purchases: Vec<f64>,
    pub step_costs: Vec<StepCost>,
}

impl Schedule {
    /// Social cost summed in step order; matches the solver's accumulation
    /// order so optimal schedules reproduce the solver's cost exactly.
    pub fn total_social(&self) -> f64 {
        self.step_costs.iter().fold(0.0, |acc, c| acc + c.social)
    }

    pub fn total_fuel(&self) -> f64 {
        self.step_costs.iter().fold(0.0, |acc, c| acc + c.fuel)
    }

    pub fn total_carbon(&self) -> f64 {
        self.step_costs.iter().fold(0.0, |acc, c| acc + c.carbon)
    }
}

/// Output of [`solve_dp`].
#[derive(Debug, Clone, Serialize)]
pub struct DPResult {
    pub schedule: Schedule,
    /// Minimum total expected social cost over all grid schedules.
    pub optimal_cost: f64,
    /// `value_table[tau - 1][k]`: cheapest way to reach grid state `k` at
    /// the end of stage `tau`. Unreachable states hold infinity. Skipped
    /// during serialization; it exists for inspection and tests.
    #[serde(skip)]
    pub value_table: Option<Vec<Vec<f64>>>,
    /// Exact number of (state, predecessor) pairs the solver scored,
    /// including pairs scored at infinite cost. The table is rectangular,
    /// so this is `G + (T - 1) * G^2` for `G` grid states.
    pub transitions_evaluated: u64,
}

/// Grid states `s_prev` from which `s` is reachable while serving `demand`
/// with a purchase in `[0, total_capacity]`. May be empty, which signals
/// that `s` is unreachable at this demand level.
pub fn feasible_predecessors(
    s: f64,
    demand: f64,
    curve: &CostCurve,
    spec: &StorageSpec,
) -> Vec<f64> {
    spec.grid_states()
        .into_iter()
        .filter(|&s_prev| {
            let x = implied_purchase(s, s_prev, demand);
            (0.0..=curve.total_capacity).contains(&x)
        })
        .collect()
}

/// Social cost of the transition `s_prev -> s` under known demand.
/// An out-of-range purchase is reported as an infeasible transition,
/// which solvers treat as an infinite-cost arc.
pub fn stage_cost(curve: &CostCurve, s: f64, s_prev: f64, demand: f64) -> Result<f64> {
    let x = implied_purchase(s, s_prev, demand);
    curve.social_cost(x).map_err(|_| Error::InfeasibleTransition {
        purchase: x,
        max: curve.total_capacity,
    })
}

/// Exact expected social cost of the transition under a discrete
/// demand-error distribution: the probability-weighted sum of the cost of
/// every scenario purchase `x + offset`. Any scenario with positive
/// probability falling outside `[0, total_capacity]` makes the whole
/// transition infeasible. Zero-probability entries are ignored.
pub fn expected_stage_cost(
    curve: &CostCurve,
    s: f64,
    s_prev: f64,
    demand: f64,
    dist: &ErrorDistribution,
) -> Result<f64> {
    let x = implied_purchase(s, s_prev, demand);
    let mut acc = 0.0;
    for &(offset, prob) in dist.entries() {
        if prob == 0.0 {
            continue;
        }
        let scenario = x + offset;
        let cost = curve
            .social_cost(scenario)
            .map_err(|_| Error::InfeasibleTransition {
                purchase: scenario,
                max: curve.total_capacity,
            })?;
        acc += prob * cost;
    }
    Ok(acc)
}

/// Stage cost as the solver sees it: deterministic or expected depending
/// on the profile, with the base purchase itself also required to be in
/// range so that every returned schedule validates.
fn solver_stage_cost(
    curve: &CostCurve,
    profile: &DemandProfile,
    step: usize,
    s: f64,
    s_prev: f64,
) -> f64 {
    let demand = profile.demands()[step];
    match profile.error_at(step) {
        None => stage_cost(curve, s, s_prev, demand).unwrap_or(f64::INFINITY),
        Some(dist) => {
            let x = implied_purchase(s, s_prev, demand);
            if !(0.0..=curve.total_capacity).contains(&x) {
                return f64::INFINITY;
            }
            expected_stage_cost(curve, s, s_prev, demand, dist).unwrap_or(f64::INFINITY)
        }
    }
}

/// Expected per-step cost decomposition for a realized transition, using
/// the same arithmetic as the solver's social stage cost.
fn step_cost_breakdown(
    curve: &CostCurve,
    profile: &DemandProfile,
    step: usize,
    s: f64,
    s_prev: f64,
) -> Result<StepCost> {
    let demand = profile.demands()[step];
    let x = implied_purchase(s, s_prev, demand);
    match profile.error_at(step) {
        None => Ok(StepCost {
            fuel: curve.fuel_cost(x)?,
            carbon: curve.carbon_cost(x)?,
            social: curve.social_cost(x)?,
        }),
        Some(dist) => {
            let (mut fuel, mut carbon, mut social) = (0.0, 0.0, 0.0);
            for &(offset, prob) in dist.entries() {
                if prob == 0.0 {
                    continue;
                }
                let scenario = x + offset;
                fuel += prob * curve.fuel_cost(scenario)?;
                carbon += prob * curve.carbon_cost(scenario)?;
                social += prob * curve.social_cost(scenario)?;
            }
            Ok(StepCost {
                fuel,
                carbon,
                social,
            })
        }
    }
}

/// Upper bound on the cost lost to discretization: the optimal grid
/// schedule is within `max_marginal_social * horizon * delta` of the
/// continuous optimum.
pub fn error_bound(curve: &CostCurve, horizon: usize, delta: f64) -> f64 {
    curve.max_marginal_social * horizon as f64 * delta
}

/// Minimum-cost storage schedule by bottom-up dynamic programming over the
/// state grid.
///
/// Stage 1 is seeded directly from the initial state; every later stage
/// scores every (state, predecessor) pair, keeping infeasible pairs as
/// infinite-cost entries so the value table stays rectangular. Ties in the
/// per-state minimum go to the smallest predecessor state. Returns an
/// [`Error::Infeasible`] naming the first stage at which no grid state is
/// reachable (or the final stage if only the required end state is not).
pub fn solve_dp(curve: &CostCurve, profile: &DemandProfile, spec: &StorageSpec) -> Result<DPResult> {
    let grid = spec.grid_states();
    let g = grid.len();
    let t_len = profile.len();
    let start = grid
        .binary_search_by(|s| s.total_cmp(&spec.s_initial()))
        .expect("validated boundary is a grid state");
    let goal = grid
        .binary_search_by(|s| s.total_cmp(&spec.s_final()))
        .expect("validated boundary is a grid state");

    let mut value = vec![vec![f64::INFINITY; g]; t_len];
    let mut pred = vec![vec![0u32; g]; t_len];
    let mut transitions: u64 = 0;
    let mut first_dead_stage: Option<usize> = None;

    for k in 0..g {
        value[0][k] = solver_stage_cost(curve, profile, 0, grid[k], grid[start]);
        pred[0][k] = start as u32;
        transitions += 1;
    }
    if value[0].iter().all(|v| !v.is_finite()) {
        first_dead_stage = Some(1);
    }

    for tau in 1..t_len {
        let (done, rest) = value.split_at_mut(tau);
        let prev_row = &done[tau - 1];
        let row = &mut rest[0];
        for k in 0..g {
            let mut best = f64::INFINITY;
            let mut best_j = 0u32;
            for j in 0..g {
                transitions += 1;
                let total = prev_row[j] + solver_stage_cost(curve, profile, tau, grid[k], grid[j]);
                // Strict improvement keeps the smallest predecessor on ties.
                if total < best {
                    best = total;
                    best_j = j as u32;
                }
            }
            row[k] = best;
            pred[tau][k] = best_j;
        }
        if first_dead_stage.is_none() && row.iter().all(|v| !v.is_finite()) {
            first_dead_stage = Some(tau + 1);
        }
    }

    let optimal_cost = value[t_len - 1][goal];
    if !optimal_cost.is_finite() {
        return Err(Error::Infeasible {
            stage: first_dead_stage.unwrap_or(t_len),
        });
    }

    // Walk the predecessor table back from the required end state.
    let mut path = vec![0usize; t_len + 1];
    path[t_len] = goal;
    for t in (1..=t_len).rev() {
        path[t - 1] = pred[t - 1][path[t]] as usize;
    }
    debug_assert_eq!(path[0], start);

    let states: Vec<f64> = path.iter().map(|&i| grid[i]).collect();
    let mut purchases = Vec::with_capacity(t_len);
    let mut step_costs = Vec::with_capacity(t_len);
    for t in 0..t_len {
        purchases.push(implied_purchase(states[t + 1], states[t], profile.demands()[t]));
        step_costs.push(step_cost_breakdown(curve, profile, t, states[t + 1], states[t])?);
    }

    Ok(DPResult {
        schedule: Schedule {
            states,
            purchases,
            step_costs,
        },
        optimal_cost,
        value_table: Some(value),
        transitions_evaluated: transitions,
    })
}

/// Prices an explicit state path under the curve and profile, validating
/// state ranges and purchase feasibility. The social total of the returned
/// schedule folds in step order, so a solver-optimal path reproduces the
/// solver's cost bit for bit.
pub fn evaluate_schedule(
    curve: &CostCurve,
    profile: &DemandProfile,
    spec: &StorageSpec,
    states: &[f64],
) -> Result<Schedule> {
    let t_len = profile.len();
    if states.len() != t_len + 1 {
        return Err(Error::validation(format!(
            "schedule has {} states, expected {} for a {}-step profile",
            states.len(),
            t_len + 1,
            t_len
        )));
    }
    for (t, &s) in states.iter().enumerate() {
        if !s.is_finite() || s < 0.0 || s > spec.capacity() {
            return Err(Error::validation(format!(
                "state {s} at position {t} outside storage range [0, {}]",
                spec.capacity()
            )));
        }
    }
    let mut purchases = Vec::with_capacity(t_len);
    let mut step_costs = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let x = implied_purchase(states[t + 1], states[t], profile.demands()[t]);
        if !(0.0..=curve.total_capacity).contains(&x) {
            return Err(Error::validation(format!(
                "step {t}: purchase {x} outside feasible range [0, {}]",
                curve.total_capacity
            )));
        }
        let costs = step_cost_breakdown(curve, profile, t, states[t + 1], states[t]).map_err(
            |_| {
                Error::validation(format!(
                    "step {t}: a demand-error scenario shifts the purchase outside [0, {}]",
                    curve.total_capacity
                ))
            },
        )?;
        purchases.push(x);
        step_costs.push(costs);
    }
    Ok(Schedule {
        states: states.to_vec(),
        purchases,
        step_costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::{build_cost_curve, Fleet, Generator};

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        let scale = a.abs().max(b.abs()).max(1.0);
        (a - b).abs() <= tol * scale
    }

    fn reference_curve() -> CostCurve {
        let fleet = Fleet::new(
            vec![
                Generator::new("coal_a", 100.0, 30.0, 1.0),
                Generator::new("ccgt_b", 100.0, 60.0, 0.5),
                Generator::new("peaker_c", 100.0, 80.0, 0.2),
            ],
            3.0,
        )
        .unwrap();
        build_cost_curve(&fleet)
    }

    /// Two segments with marginals 70 then 62: social marginal decreases.
    fn nonconvex_curve() -> CostCurve {
        let fleet = Fleet::new(
            vec![
                Generator::new("dirty", 10.0, 30.0, 2.0),
                Generator::new("clean", 10.0, 60.0, 0.1),
            ],
            20.0,
        )
        .unwrap();
        build_cost_curve(&fleet)
    }

    #[test]
    fn grid_covers_capacity_and_includes_endpoint() {
        let spec = StorageSpec::new(4.0, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(spec.grid_states(), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        // Non-multiple capacity appends the capacity itself.
        let spec = StorageSpec::new(2.5, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(spec.grid_states(), vec![0.0, 1.0, 2.0, 2.5]);
        // Zero capacity still has the single resting state.
        let spec = StorageSpec::new(0.0, 0.5, 0.0, 0.0).unwrap();
        assert_eq!(spec.grid_states(), vec![0.0]);
    }

    #[test]
    fn grid_handles_inexact_spacing() {
        // 0.1 is not exactly representable; the grid must still end at the
        // capacity without overshooting it.
        let spec = StorageSpec::new(2.0, 0.1, 0.0, 0.0).unwrap();
        let grid = spec.grid_states();
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert!(grid.iter().all(|&s| s <= 2.0));
        assert_eq!(*grid.last().unwrap(), 2.0);
        assert!(grid.len() == 21 || grid.len() == 20 + 2);
    }

    #[test]
    fn midpoint_boundaries_round_ties_toward_zero() {
        let spec = StorageSpec::with_midpoint_boundaries(4.0, 1.0).unwrap();
        assert_eq!(spec.s_initial(), 2.0);
        assert_eq!(spec.s_final(), 2.0);
        // B/2 = 1.5 sits exactly between grid states 1 and 2.
        let spec = StorageSpec::with_midpoint_boundaries(3.0, 1.0).unwrap();
        assert_eq!(spec.s_initial(), 1.0);
        // B = 0 pins everything at zero.
        let spec = StorageSpec::with_midpoint_boundaries(0.0, 1.0).unwrap();
        assert_eq!(spec.s_initial(), 0.0);
    }

    #[test]
    fn spec_rejects_off_grid_boundaries() {
        assert!(StorageSpec::new(4.0, 1.0, 0.5, 0.0).is_err());
        assert!(StorageSpec::new(4.0, 1.0, 0.0, 4.5).is_err());
        assert!(StorageSpec::new(4.0, 0.0, 0.0, 0.0).is_err());
        assert!(StorageSpec::new(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(StorageSpec::new(4.0, 1.0, 4.0, 4.0).is_ok());
    }

    #[test]
    fn predecessor_examples() {
        let curve = reference_curve(); // X = 300
        let spec = StorageSpec::new(4.0, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(
            feasible_predecessors(3.0, 2.0, &curve, &spec),
            vec![0.0, 1.0, 2.0, 3.0, 4.0]
        );

        // Tight fleet: X = 2.
        let tight = Fleet::new(vec![Generator::new("g", 2.0, 10.0, 0.0)], 0.0).unwrap();
        let tight_curve = build_cost_curve(&tight);
        assert_eq!(
            feasible_predecessors(4.0, 2.0, &tight_curve, &spec),
            vec![4.0]
        );
        // Demand beyond anything the fleet plus storage can do: empty set.
        assert!(feasible_predecessors(0.0, 10.0, &tight_curve, &spec).is_empty());
    }

    #[test]
    fn stage_cost_matches_curve() {
        let curve = reference_curve();
        assert_eq!(stage_cost(&curve, 50.0, 0.0, 100.0).unwrap(), 6375.0);
        // Pure pass-through: storage idle.
        assert_eq!(
            stage_cost(&curve, 20.0, 20.0, 150.0).unwrap(),
            curve.social_cost(150.0).unwrap()
        );
        // Discharging everything the demand needs costs nothing.
        assert_eq!(stage_cost(&curve, 0.0, 30.0, 30.0).unwrap(), 0.0);
        assert!(matches!(
            stage_cost(&curve, 300.0, 0.0, 100.0),
            Err(Error::InfeasibleTransition { .. })
        ));
        assert!(matches!(
            stage_cost(&curve, 0.0, 50.0, 10.0),
            Err(Error::InfeasibleTransition { .. })
        ));
    }

    #[test]
    fn expected_stage_cost_is_exact_over_scenarios() {
        // Straddling the non-convex curve's breakpoint at 10: the exact
        // expectation differs from pricing the mean demand by
        // (70 - 62) * 10 / 2 = 40.
        let curve = nonconvex_curve();
        let dist = ErrorDistribution::new(vec![(-10.0, 0.5), (10.0, 0.5)]).unwrap();
        let expected = expected_stage_cost(&curve, 0.0, 0.0, 10.0, &dist).unwrap();
        let at_mean = curve.social_cost(10.0).unwrap();
        assert_eq!(at_mean, 700.0);
        assert_eq!(expected, 660.0);
        assert_eq!(at_mean - expected, 40.0);
    }

    #[test]
    fn expected_stage_cost_on_linear_segment_matches_mean() {
        let single = Fleet::new(vec![Generator::new("g", 100.0, 25.0, 0.0)], 0.0).unwrap();
        let curve = build_cost_curve(&single);
        let dist = ErrorDistribution::new(vec![(-5.0, 0.5), (5.0, 0.5)]).unwrap();
        let expected = expected_stage_cost(&curve, 0.0, 0.0, 40.0, &dist).unwrap();
        assert!(rel_close(expected, 25.0 * 40.0, 1e-12));
    }

    #[test]
    fn expected_stage_cost_rejects_infeasible_scenarios() {
        let curve = nonconvex_curve(); // X = 20
        let dist = ErrorDistribution::new(vec![(-10.0, 0.5), (10.0, 0.5)]).unwrap();
        // Base purchase 15 pushes the +10 scenario to 25 > X.
        assert!(matches!(
            expected_stage_cost(&curve, 0.0, 0.0, 15.0, &dist),
            Err(Error::InfeasibleTransition { .. })
        ));
        // A zero-probability scenario may be infeasible without harm.
        let padded =
            ErrorDistribution::new(vec![(-10.0, 0.5), (10.0, 0.5), (1000.0, 0.0)]).unwrap();
        assert_eq!(
            expected_stage_cost(&curve, 0.0, 0.0, 10.0, &padded).unwrap(),
            660.0
        );
    }

    #[test]
    fn error_distribution_validation() {
        assert!(ErrorDistribution::new(vec![]).is_err());
        assert!(ErrorDistribution::new(vec![(0.0, 0.5)]).is_err());
        assert!(ErrorDistribution::new(vec![(0.0, -0.1), (0.0, 1.1)]).is_err());
        assert!(ErrorDistribution::new(vec![(f64::NAN, 1.0)]).is_err());
        assert!(ErrorDistribution::new(vec![(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).is_ok());
    }

    #[test]
    fn error_bound_examples() {
        let curve = reference_curve();
        let bound = error_bound(&curve, 24, 1.0);
        assert!(rel_close(bound, 1934.4, 1e-12), "bound {bound}");
        assert_eq!(error_bound(&curve, 0, 1.0), 0.0);
        // Linear in delta.
        assert!(rel_close(
            error_bound(&curve, 24, 2.0),
            2.0 * bound,
            1e-12
        ));
    }

    #[test]
    fn solve_single_stage_is_forced() {
        let curve = reference_curve();
        let profile = DemandProfile::new(vec![120.0]).unwrap();
        let spec = StorageSpec::new(4.0, 1.0, 1.0, 3.0).unwrap();
        let result = solve_dp(&curve, &profile, &spec).unwrap();
        assert_eq!(result.schedule.states, vec![1.0, 3.0]);
        assert_eq!(result.schedule.purchases, vec![122.0]);
        assert_eq!(result.optimal_cost, curve.social_cost(122.0).unwrap());
        assert_eq!(result.transitions_evaluated, 5);
    }

    #[test]
    fn solve_zero_capacity_passes_demand_through() {
        let curve = reference_curve();
        let demands = vec![80.0, 140.0, 60.0];
        let profile = DemandProfile::new(demands.clone()).unwrap();
        let spec = StorageSpec::new(0.0, 1.0, 0.0, 0.0).unwrap();
        let result = solve_dp(&curve, &profile, &spec).unwrap();
        let direct = demands
            .iter()
            .fold(0.0, |acc, &d| acc + curve.social_cost(d).unwrap());
        assert_eq!(result.optimal_cost, direct);
        assert_eq!(result.schedule.purchases, demands);
    }

    #[test]
    fn solve_reports_first_dead_stage() {
        let tight = Fleet::new(vec![Generator::new("g", 5.0, 10.0, 0.0)], 0.0).unwrap();
        let curve = build_cost_curve(&tight); // X = 5
        let spec = StorageSpec::new(2.0, 1.0, 1.0, 1.0).unwrap();
        // Stage 2 demand exceeds X plus a full discharge: dead stage.
        let profile = DemandProfile::new(vec![3.0, 9.0, 3.0]).unwrap();
        match solve_dp(&curve, &profile, &spec) {
            Err(Error::Infeasible { stage }) => assert_eq!(stage, 2),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn solve_reports_final_stage_when_goal_unreachable() {
        let tight = Fleet::new(vec![Generator::new("g", 1.0, 10.0, 0.0)], 0.0).unwrap();
        let curve = build_cost_curve(&tight); // X = 1
        // Ending full requires charging 2 units in one step with demand 0:
        // purchase 2 > X, while other states stay reachable.
        let spec = StorageSpec::new(2.0, 1.0, 0.0, 2.0).unwrap();
        let profile = DemandProfile::new(vec![0.0]).unwrap();
        match solve_dp(&curve, &profile, &spec) {
            Err(Error::Infeasible { stage }) => assert_eq!(stage, 1),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn transition_count_is_rectangular() {
        let curve = reference_curve();
        let profile = DemandProfile::new(vec![100.0, 120.0, 90.0, 110.0]).unwrap();
        let spec = StorageSpec::new(4.0, 1.0, 2.0, 2.0).unwrap();
        let result = solve_dp(&curve, &profile, &spec).unwrap();
        let g = 5u64;
        assert_eq!(result.transitions_evaluated, g + 3 * g * g);
    }

    #[test]
    fn value_table_entry_matches_optimal_cost() {
        let curve = nonconvex_curve();
        let profile = DemandProfile::new(vec![1.0, 3.0, 1.0]).unwrap();
        let spec = StorageSpec::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let result = solve_dp(&curve, &profile, &spec).unwrap();
        let table = result.value_table.as_ref().unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table[0].len(), 3);
        // Goal state is grid index 1.
        assert_eq!(table[2][1], result.optimal_cost);
        assert_eq!(result.optimal_cost, result.schedule.total_social());
    }

    #[test]
    fn point_mass_errors_reproduce_deterministic_run() {
        let curve = nonconvex_curve();
        let demands = vec![1.0, 3.0, 1.0, 2.0];
        let spec = StorageSpec::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let plain = solve_dp(&curve, &DemandProfile::new(demands.clone()).unwrap(), &spec).unwrap();
        let dists = vec![ErrorDistribution::point_mass(0.0); demands.len()];
        let noisy = solve_dp(
            &curve,
            &DemandProfile::with_step_errors(demands, dists).unwrap(),
            &spec,
        )
        .unwrap();
        assert_eq!(plain.optimal_cost, noisy.optimal_cost);
        assert_eq!(plain.schedule.states, noisy.schedule.states);
        assert_eq!(plain.schedule.step_costs, noisy.schedule.step_costs);
    }

    #[test]
    fn storage_exploits_nonconvex_valley() {
        // Serving the peak from storage keeps every purchase inside the
        // cheap-per-unit region; the no-storage pass-through is strictly
        // worse on this curve.
        let curve = nonconvex_curve();
        let profile = DemandProfile::new(vec![1.0, 3.0, 1.0]).unwrap();
        let spec = StorageSpec::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let with_storage = solve_dp(&curve, &profile, &spec).unwrap();
        let no_storage = StorageSpec::new(0.0, 1.0, 0.0, 0.0).unwrap();
        let without = solve_dp(&curve, &profile, &no_storage).unwrap();
        assert!(with_storage.optimal_cost <= without.optimal_cost);
    }

    #[test]
    fn evaluate_schedule_roundtrips_solver_output() {
        let curve = reference_curve();
        let profile = DemandProfile::new(vec![100.0, 150.0, 80.0, 120.0]).unwrap();
        let spec = StorageSpec::new(40.0, 10.0, 20.0, 20.0).unwrap();
        let result = solve_dp(&curve, &profile, &spec).unwrap();
        let replay = evaluate_schedule(&curve, &profile, &spec, &result.schedule.states).unwrap();
        assert_eq!(replay, result.schedule);
        assert_eq!(replay.total_social(), result.optimal_cost);
    }

    #[test]
    fn evaluate_schedule_names_offending_step() {
        let curve = nonconvex_curve(); // X = 20
        let profile = DemandProfile::new(vec![5.0, 19.0]).unwrap();
        let spec = StorageSpec::new(4.0, 1.0, 2.0, 2.0).unwrap();
        // Step 1 purchase is 19 + 2 = 21 > X.
        let err = evaluate_schedule(&curve, &profile, &spec, &[2.0, 0.0, 2.0]).unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("step 1"), "message: {msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
        // Wrong length and out-of-range states are rejected too.
        assert!(evaluate_schedule(&curve, &profile, &spec, &[2.0, 2.0]).is_err());
        assert!(evaluate_schedule(&curve, &profile, &spec, &[2.0, 5.0, 2.0]).is_err());
    }

    #[test]
    fn tie_break_prefers_smallest_predecessor() {
        // Flat curve: every feasible path costs the same, so the reported
        // schedule is pinned entirely by the tie-break.
        let flat = Fleet::new(vec![Generator::new("g", 100.0, 10.0, 0.0)], 0.0).unwrap();
        let curve = build_cost_curve(&flat);
        let profile = DemandProfile::new(vec![5.0, 5.0, 5.0]).unwrap();
        let spec = StorageSpec::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let result = solve_dp(&curve, &profile, &spec).unwrap();
        // Backtracking picks the smallest optimal predecessor at every
        // stage, so interior states sit as low as feasibility allows.
        assert_eq!(result.schedule.states, vec![1.0, 0.0, 0.0, 1.0]);
    }
}
