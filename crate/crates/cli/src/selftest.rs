//! Built-in verification pass.
//!
//! Checks the shipped sample fleet and demand series against golden
//! artifacts, round-trips the CSV loaders, and cross-checks the solver
//! against both oracles on seeded instances. Only `--seed` and `--out`
//! are consulted; everything else is pinned so the goldens stay stable.
//!
//! When a golden comparison fails, the freshly computed artifact is
//! written next to `selftest.json` as `selftest_expected_*.json` so a
//! maintainer who changed the library deliberately can copy it into
//! `fixtures/` and rebuild.

use std::fs;

use chrono::{TimeZone, Utc};
use meritstore::{
    brute_force_fuel_cost, build_cost_curve, error_bound, exhaustive_search, load_demand,
    load_fleet, save_demand, save_fleet, solve_dp, synth_demand, synth_fleet, Error, Fleet,
    Result, Segment, StorageSpec,
};
use serde::Serialize;

use crate::commands::{write_json, write_text};
use crate::CommonArgs;

const FLEET_FIXTURE: &str = include_str!("../fixtures/fleet.csv");
const DEMAND_FIXTURE: &str = include_str!("../fixtures/demand.csv");
const CURVE_GOLDEN: &str = include_str!("../fixtures/selftest_curve.json");
const SOLVE_GOLDEN: &str = include_str!("../fixtures/selftest_solve.json");

/// Carbon price the goldens were generated under.
const FIXTURE_ALPHA: f64 = 3.0;

#[derive(Serialize)]
struct CheckOutcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct SelftestArtifact {
    seed: u64,
    checks: Vec<CheckOutcome>,
    all_passed: bool,
}

#[derive(Serialize)]
struct GoldenCurve<'a> {
    total_capacity: f64,
    max_marginal_social: f64,
    segments: &'a [Segment],
}

#[derive(Serialize)]
struct GoldenSolve {
    optimal_cost: f64,
    transitions_evaluated: u64,
    states: Vec<f64>,
    purchases: Vec<f64>,
}

fn render<T: Serialize>(value: &T) -> Result<String> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::validation(format!("serializing golden: {e}")))?;
    body.push('\n');
    Ok(body)
}

pub(crate) fn run(args: &CommonArgs) -> Result<()> {
    let dir = tempfile::tempdir()?;
    let fleet_path = dir.path().join("fleet.csv");
    let demand_path = dir.path().join("demand.csv");
    fs::write(&fleet_path, FLEET_FIXTURE)?;
    fs::write(&demand_path, DEMAND_FIXTURE)?;
    let fleet = load_fleet(&fleet_path, FIXTURE_ALPHA)?;
    let profile = load_demand(&demand_path)?;

    // Regenerated goldens, written out for the maintainer on mismatch.
    let mut regenerated: Vec<(&'static str, String)> = Vec::new();
    let mut checks = Vec::new();
    let mut record = |name: &'static str, result: std::result::Result<String, String>| {
        let (passed, detail) = match result {
            Ok(detail) => (true, detail),
            Err(detail) => (false, detail),
        };
        if passed {
            println!("ok {name}: {detail}");
        } else {
            println!("FAILED {name}: {detail}");
        }
        checks.push(CheckOutcome { name, passed, detail });
    };

    record("curve_golden", check_curve_golden(&fleet, &mut regenerated));
    record("solve_golden", check_solve_golden(&fleet, &profile, &mut regenerated));
    record("round_trip", check_round_trip(&fleet, &profile, dir.path()));
    record("solver_vs_exhaustive", check_solver_vs_exhaustive(args.seed));
    record("discretization_bound", check_discretization_bound(args.seed));
    record("dispatch_vs_permutations", check_dispatch_vs_permutations(args.seed));

    let all_passed = checks.iter().all(|c| c.passed);
    let failed = checks.iter().filter(|c| !c.passed).count();
    let total = checks.len();
    let artifact = SelftestArtifact { seed: args.seed, checks, all_passed };
    let json = write_json(&args.out, "selftest.json", &artifact)?;
    for (name, body) in regenerated {
        write_text(&args.out, name, &body)?;
    }
    println!("wrote {}", json.display());
    if all_passed {
        println!("selftest: all {total} checks passed");
        Ok(())
    } else {
        Err(Error::validation(format!("{failed} of {total} selftest checks failed")))
    }
}

fn check_curve_golden(
    fleet: &Fleet,
    regenerated: &mut Vec<(&'static str, String)>,
) -> std::result::Result<String, String> {
    let curve = build_cost_curve(fleet);
    let golden = GoldenCurve {
        total_capacity: curve.total_capacity,
        max_marginal_social: curve.max_marginal_social,
        segments: &curve.segments,
    };
    let rendered = render(&golden).map_err(|e| e.to_string())?;
    if rendered == CURVE_GOLDEN {
        Ok(format!(
            "{} segments over {} MWh match the golden",
            curve.segments.len(),
            curve.total_capacity
        ))
    } else {
        regenerated.push(("selftest_expected_curve.json", rendered));
        Err("regenerated curve differs from fixtures/selftest_curve.json".to_string())
    }
}

fn check_solve_golden(
    fleet: &Fleet,
    profile: &meritstore::DemandProfile,
    regenerated: &mut Vec<(&'static str, String)>,
) -> std::result::Result<String, String> {
    let curve = build_cost_curve(fleet);
    let spec = StorageSpec::with_midpoint_boundaries(4.0, 1.0).map_err(|e| e.to_string())?;
    let result = solve_dp(&curve, profile, &spec).map_err(|e| e.to_string())?;
    let golden = GoldenSolve {
        optimal_cost: result.optimal_cost,
        transitions_evaluated: result.transitions_evaluated,
        states: result.schedule.states.clone(),
        purchases: result.schedule.purchases.clone(),
    };
    let rendered = render(&golden).map_err(|e| e.to_string())?;
    if rendered == SOLVE_GOLDEN {
        Ok(format!(
            "optimal cost {} over {} transitions matches the golden",
            result.optimal_cost, result.transitions_evaluated
        ))
    } else {
        regenerated.push(("selftest_expected_solve.json", rendered));
        Err("regenerated schedule differs from fixtures/selftest_solve.json".to_string())
    }
}

fn check_round_trip(
    fleet: &Fleet,
    profile: &meritstore::DemandProfile,
    dir: &std::path::Path,
) -> std::result::Result<String, String> {
    let fleet_path = dir.join("fleet_roundtrip.csv");
    save_fleet(fleet, &fleet_path).map_err(|e| e.to_string())?;
    let fleet_back = load_fleet(&fleet_path, FIXTURE_ALPHA).map_err(|e| e.to_string())?;
    if &fleet_back != fleet {
        return Err("fleet changed across a save/load round trip".to_string());
    }
    let demand_path = dir.join("demand_roundtrip.csv");
    let start = Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap();
    save_demand(profile, &demand_path, start).map_err(|e| e.to_string())?;
    let profile_back = load_demand(&demand_path).map_err(|e| e.to_string())?;
    if &profile_back != profile {
        return Err("demand changed across a save/load round trip".to_string());
    }
    Ok(format!(
        "{} generators and {} demand steps survive save/load unchanged",
        fleet.len(),
        profile.len()
    ))
}

fn check_solver_vs_exhaustive(seed: u64) -> std::result::Result<String, String> {
    const INSTANCES: u64 = 25;
    for i in 0..INSTANCES {
        let n = 2 + (i % 3) as usize;
        let alpha = (i % 7) as f64 * 4.0;
        let fleet = synth_fleet(
            seed.wrapping_add(i),
            n,
            (5.0, 15.0),
            (0.0, 100.0),
            (0.0, 3.0),
            i % 2 == 0,
            alpha,
        )
        .map_err(|e| e.to_string())?;
        let curve = build_cost_curve(&fleet);
        let cap = curve.total_capacity;
        let day = synth_demand(seed.wrapping_add(100 + i), 1, 0.45 * cap, 0.1 * cap, 0.02 * cap)
            .map_err(|e| e.to_string())?;
        let t = 2 + (i % 3) as usize;
        let profile = day.slice(0, t).map_err(|e| e.to_string())?;
        let delta = if i % 2 == 0 { 0.5 } else { 0.25 };
        let capacity = if i % 3 == 0 { 4.0 * delta } else { 2.0 * delta };
        let spec =
            StorageSpec::with_midpoint_boundaries(capacity, delta).map_err(|e| e.to_string())?;
        let dp = solve_dp(&curve, &profile, &spec).map_err(|e| e.to_string())?;
        let oracle = exhaustive_search(&curve, &profile, &spec).map_err(|e| e.to_string())?;
        if dp.optimal_cost.to_bits() != oracle.optimal_cost.to_bits() {
            return Err(format!(
                "instance {i}: solver cost {} but oracle found {}",
                dp.optimal_cost, oracle.optimal_cost
            ));
        }
        if dp.schedule.states != oracle.states {
            return Err(format!(
                "instance {i}: solver states {:?} but oracle chose {:?}",
                dp.schedule.states, oracle.states
            ));
        }
    }
    Ok(format!("{INSTANCES} seeded instances match the exhaustive oracle bitwise"))
}

fn check_discretization_bound(seed: u64) -> std::result::Result<String, String> {
    const INSTANCES: u64 = 5;
    for i in 0..INSTANCES {
        let fleet = synth_fleet(
            seed.wrapping_add(200 + i),
            4,
            (20.0, 60.0),
            (5.0, 95.0),
            (0.0, 2.0),
            i % 2 == 0,
            3.0 + i as f64,
        )
        .map_err(|e| e.to_string())?;
        let curve = build_cost_curve(&fleet);
        let cap = curve.total_capacity;
        let profile =
            synth_demand(seed.wrapping_add(300 + i), 1, 0.5 * cap, 0.2 * cap, 0.05 * cap)
                .map_err(|e| e.to_string())?;
        let coarse = StorageSpec::with_midpoint_boundaries(8.0, 1.0).map_err(|e| e.to_string())?;
        let fine =
            StorageSpec::with_midpoint_boundaries(8.0, 1.0 / 16.0).map_err(|e| e.to_string())?;
        let mu_coarse =
            solve_dp(&curve, &profile, &coarse).map_err(|e| e.to_string())?.optimal_cost;
        let mu_fine = solve_dp(&curve, &profile, &fine).map_err(|e| e.to_string())?.optimal_cost;
        let bound = error_bound(&curve, profile.len(), 1.0);
        if mu_fine > mu_coarse {
            return Err(format!(
                "instance {i}: refining the grid raised the cost from {mu_coarse} to {mu_fine}"
            ));
        }
        if mu_coarse - mu_fine > bound {
            return Err(format!(
                "instance {i}: gap {} exceeds the bound {bound}",
                mu_coarse - mu_fine
            ));
        }
    }
    Ok(format!("{INSTANCES} seeded 24-step instances stay within the discretization bound"))
}

fn check_dispatch_vs_permutations(seed: u64) -> std::result::Result<String, String> {
    const FLEETS: u64 = 20;
    const FRACTIONS: [f64; 5] = [0.0, 0.25, 0.5, 0.9, 1.0];
    for i in 0..FLEETS {
        let n = 1 + (i % 6) as usize;
        let fleet = synth_fleet(
            seed.wrapping_add(400 + i),
            n,
            (1.0, 20.0),
            (0.0, 50.0),
            (0.0, 2.0),
            i % 2 == 1,
            (i % 5) as f64,
        )
        .map_err(|e| e.to_string())?;
        let curve = build_cost_curve(&fleet);
        for frac in FRACTIONS {
            let x = frac * curve.total_capacity;
            let expected = brute_force_fuel_cost(&fleet, x).map_err(|e| e.to_string())?;
            let got = curve.fuel_cost(x).map_err(|e| e.to_string())?;
            let tol = 1e-9 * expected.abs().max(1.0);
            if (got - expected).abs() > tol {
                return Err(format!(
                    "fleet {i} at x={x}: merit order gives {got} but permutations give {expected}"
                ));
            }
        }
    }
    Ok(format!("{FLEETS} seeded fleets match the permutation oracle at five load levels"))
}
