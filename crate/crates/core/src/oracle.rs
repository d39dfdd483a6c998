//! Brute-force reference implementations used to verify the fast paths.
//!
//! These deliberately avoid the merit-order assembly and the dynamic
//! program: fuel cost is minimized by trying every generator ordering, and
//! schedules by pricing every grid state path. Both refuse inputs large
//! enough that exhaustive enumeration stops being trustworthy as a test
//! oracle.

use crate::dispatch::{CostCurve, Fleet};
use crate::error::{Error, Result};
use crate::storage::{DemandProfile, StorageSpec};

/// Largest fleet the factorial search will take on.
const MAX_BRUTE_FORCE_GENERATORS: usize = 8;

/// Largest number of state paths the exhaustive search will price.
const MAX_ENUMERATED_PATHS: f64 = 1_000_000.0;

/// Minimum fuel cost of serving `x`, found by greedily filling generators
/// under every one of the `n!` orderings and keeping the cheapest. Refuses
/// fleets with more than eight generators.
pub fn brute_force_fuel_cost(fleet: &Fleet, x: f64) -> Result<f64> {
    let gens = fleet.generators();
    if gens.len() > MAX_BRUTE_FORCE_GENERATORS {
        return Err(Error::BudgetExceeded {
            detail: format!(
                "{} generators exceed the factorial search limit of {}",
                gens.len(),
                MAX_BRUTE_FORCE_GENERATORS
            ),
        });
    }
    let total: f64 = gens.iter().map(|g| g.capacity).sum();
    // Allow the last-ulp slack that a differently associated capacity sum
    // can introduce when callers pass the curve's own total capacity.
    if !x.is_finite() || x < 0.0 || x > total * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { value: x, max: total });
    }

    let mut order: Vec<usize> = (0..gens.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut order, 0, &mut |order| {
        let mut remaining = x;
        let mut cost = 0.0;
        for &i in order {
            let take = if remaining < gens[i].capacity {
                remaining
            } else {
                gens[i].capacity
            };
            cost += gens[i].marginal_fuel_cost * take;
            remaining -= take;
            if remaining <= 0.0 {
                break;
            }
        }
        if cost < best {
            best = cost;
        }
    });
    Ok(best)
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// An optimal schedule found by enumeration: the cost and the full state
/// path (boundaries included).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub optimal_cost: f64,
    pub states: Vec<f64>,
}

/// Prices every grid state path compatible with the boundary states and
/// returns the cheapest, resolved to the same schedule the dynamic
/// program reports.
///
/// The cost comes from straight enumeration: the minimum over all paths of
/// their left-folded stage costs. The reported path is then rebuilt
/// backwards from the final boundary, at each stage taking the smallest
/// state that minimizes (cheapest feasible prefix ending there) + (cost of
/// the step into the state already chosen), with the prefix minima again
/// found by enumeration. Resolving ties per backward step matters:
/// comparing only whole-path totals would merge prefixes that differ by
/// one ulp into a false tie, because adding the remaining stages can
/// absorb the difference.
///
/// Refuses instances with more than a million candidate paths. Infeasible
/// instances yield the same `Infeasible { stage }` classification the
/// solver produces.
pub fn exhaustive_search(
    curve: &CostCurve,
    profile: &DemandProfile,
    spec: &StorageSpec,
) -> Result<OracleSolution> {
    let grid = spec.grid_states();
    let g = grid.len();
    let t_len = profile.len();
    let path_count = (g as f64).powi(t_len as i32 - 1);
    if path_count > MAX_ENUMERATED_PATHS {
        return Err(Error::BudgetExceeded {
            detail: format!(
                "{g} grid states over {t_len} stages give {path_count:.0} paths, budget {MAX_ENUMERATED_PATHS:.0}"
            ),
        });
    }
    let start = grid
        .binary_search_by(|s| s.total_cmp(&spec.s_initial()))
        .expect("validated boundary is a grid state");
    let goal = grid
        .binary_search_by(|s| s.total_cmp(&spec.s_final()))
        .expect("validated boundary is a grid state");

    let mut best_cost = f64::INFINITY;
    // Deepest stage any path priced feasibly; +1 is the first dead stage.
    let mut max_depth = 0usize;
    enumerate_folds(curve, profile, &grid, grid[start], t_len, grid[goal], |cost, depth| {
        if depth > max_depth {
            max_depth = depth;
        }
        if let Some(cost) = cost {
            if cost < best_cost {
                best_cost = cost;
            }
        }
    });
    if best_cost.is_infinite() {
        return Err(Error::Infeasible {
            stage: (max_depth + 1).min(t_len),
        });
    }

    let mut states = vec![0.0; t_len + 1];
    states[0] = grid[start];
    states[t_len] = grid[goal];
    for t in (1..t_len).rev() {
        let mut best_v = f64::INFINITY;
        let mut chosen = f64::NAN;
        for &sj in &grid {
            let prefix = min_prefix_cost(curve, profile, &grid, grid[start], t, sj);
            let step = match path_stage_cost(curve, profile, t, states[t + 1], sj) {
                Some(c) => c,
                None => continue,
            };
            let v = prefix + step;
            if v < best_v {
                best_v = v;
                chosen = sj;
            }
        }
        debug_assert!(
            best_v.is_finite(),
            "a finite total optimum guarantees a feasible predecessor"
        );
        states[t] = chosen;
    }

    Ok(OracleSolution {
        optimal_cost: best_cost,
        states,
    })
}

/// Cheapest left-folded cost over stages `1..=steps` among paths from
/// `start_state` to `end_state`, infinity when none is feasible.
fn min_prefix_cost(
    curve: &CostCurve,
    profile: &DemandProfile,
    grid: &[f64],
    start_state: f64,
    steps: usize,
    end_state: f64,
) -> f64 {
    let mut best = f64::INFINITY;
    enumerate_folds(curve, profile, grid, start_state, steps, end_state, |cost, _| {
        if let Some(cost) = cost {
            if cost < best {
                best = cost;
            }
        }
    });
    best
}

/// Visits every path of `steps` stages from `start_state` to `end_state`
/// whose intermediate states range over `grid`, reporting the left-folded
/// cost (`None` when infeasible) and the deepest stage priced feasibly.
fn enumerate_folds(
    curve: &CostCurve,
    profile: &DemandProfile,
    grid: &[f64],
    start_state: f64,
    steps: usize,
    end_state: f64,
    mut visit: impl FnMut(Option<f64>, usize),
) {
    let g = grid.len();
    let mut interior = vec![0usize; steps - 1];
    loop {
        let mut prev = start_state;
        let mut cost = 0.0;
        let mut depth = 0usize;
        let mut feasible = true;
        for stage in 0..steps {
            let next = if stage < steps - 1 { grid[interior[stage]] } else { end_state };
            match path_stage_cost(curve, profile, stage, next, prev) {
                Some(c) => {
                    cost += c;
                    depth = stage + 1;
                    prev = next;
                }
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        visit(feasible.then_some(cost), depth);

        // Advance the odometer; done once it wraps back to all zeros.
        let mut pos = interior.len();
        let mut wrapped = true;
        while pos > 0 {
            pos -= 1;
            interior[pos] += 1;
            if interior[pos] < g {
                wrapped = false;
                break;
            }
            interior[pos] = 0;
        }
        if wrapped {
            break;
        }
    }
}

/// Stage pricing mirroring the solver's semantics (same purchase
/// expression, same scenario accumulation order) without touching the
/// solver itself: deterministic social cost, or the exact expectation over
/// demand-error scenarios, with the base purchase required to be in range.
fn path_stage_cost(
    curve: &CostCurve,
    profile: &DemandProfile,
    step: usize,
    s: f64,
    s_prev: f64,
) -> Option<f64> {
    let demand = profile.demands()[step];
    let x = (s - s_prev) + demand;
    if !(0.0..=curve.total_capacity).contains(&x) {
        return None;
    }
    match profile.error_at(step) {
        None => curve.social_cost(x).ok(),
        Some(dist) => {
            let mut acc = 0.0;
            for &(offset, prob) in dist.entries() {
                if prob == 0.0 {
                    continue;
                }
                let scenario = x + offset;
                acc += prob * curve.social_cost(scenario).ok()?;
            }
            Some(acc)
        }
    }
}
