#!/usr/bin/env python3
"""Smoke test for the meritstore_py extension module.

Builds nothing itself: run `cargo build -p meritstore-py` (or `--release`)
first, then `python3 python/smoke_test.py`. The script copies the compiled
cdylib into a temp directory under the importable name and exercises the
bindings end to end.
"""

import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def import_module():
    candidates = [
        ROOT / "target" / "release" / "libmeritstore_py.so",
        ROOT / "target" / "debug" / "libmeritstore_py.so",
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("build the extension first: cargo build -p meritstore-py")
    staging = tempfile.mkdtemp(prefix="meritstore_py_")
    shutil.copy(built[0], pathlib.Path(staging) / "meritstore_py.so")
    sys.path.insert(0, staging)
    import meritstore_py

    return meritstore_py


def main():
    ms = import_module()
    checks = 0

    def ok(name):
        nonlocal checks
        checks += 1
        print(f"ok {name}")

    # Three-segment fleet: 30/60/80 $/MWh fuel, decreasing emission rates.
    fleet = ms.Fleet(
        [
            ms.Generator("coal_a", 100.0, 30.0, 1.0),
            ms.Generator("ccgt_b", 100.0, 60.0, 0.5),
            ms.Generator("peaker_c", 100.0, 80.0, 0.2),
        ],
        3.0,
    )
    assert len(fleet) == 3 and fleet.alpha == 3.0
    assert ms.merit_order(fleet) == [0, 1, 2]
    ok("fleet and merit order")

    curve = ms.build_cost_curve(fleet)
    assert curve.total_capacity == 300.0
    assert curve.fuel_cost(150.0) == 6000.0
    assert curve.carbon_cost(150.0) == 375.0
    assert curve.social_cost(150.0) == 6375.0
    assert [s[4] for s in curve.segments()] == [33.0, 61.5, 80.6]
    assert curve.max_marginal_social == 80.6
    outputs = ms.dispatch(fleet, 150.0)
    assert outputs == [100.0, 50.0, 0.0]
    ok("piecewise costs and dispatch")

    # A strong enough carbon price makes the social marginal dip while the
    # fuel marginal still rises.
    skewed = fleet.with_alpha(100.0)
    skewed_curve = ms.build_cost_curve(skewed)
    marginals = [s[4] for s in skewed_curve.segments()]
    assert any(a > b for a, b in zip(marginals, marginals[1:]))
    assert skewed_curve.marginal_social_cost(50.0) > skewed_curve.marginal_social_cost(150.0)
    ok("non-convexity witness at alpha=100")

    profile = ms.DemandProfile([120.0, 210.0, 150.0, 90.0])
    spec = ms.StorageSpec.with_midpoint_boundaries(20.0, 5.0)
    assert spec.s_initial == 10.0 and len(spec.grid_states()) == 5
    result = ms.solve_dp(skewed_curve, profile, spec)
    oracle_cost, oracle_states = ms.exhaustive_search(skewed_curve, profile, spec)
    assert result.optimal_cost == oracle_cost
    assert result.schedule.states == oracle_states
    ok("solver matches the exhaustive oracle")

    replay = ms.evaluate_schedule(skewed_curve, profile, spec, result.schedule.states)
    assert replay.total_social() == result.optimal_cost
    assert replay.purchases == result.schedule.purchases
    fuel, carbon, social = replay.step_costs[0]
    assert math.isclose(fuel + carbon, social, rel_tol=1e-12)
    ok("schedule replay and decomposition")

    hold = ms.evaluate_schedule(skewed_curve, profile, spec, [10.0] * 5)
    assert result.optimal_cost <= hold.total_social()
    bound = ms.error_bound(skewed_curve, len(profile), spec.delta)
    fine = ms.StorageSpec.with_midpoint_boundaries(20.0, 1.25)
    refined = ms.solve_dp(skewed_curve, profile, fine)
    assert refined.optimal_cost <= result.optimal_cost
    assert result.optimal_cost - refined.optimal_cost <= bound
    preds = ms.feasible_predecessors(10.0, 120.0, skewed_curve, spec)
    assert preds == spec.grid_states()
    ok("error bound, refinement, predecessors")

    points = ms.accuracy_sweep(skewed_curve, profile, spec, [5.0, 2.5], 0.3125)
    assert all(gamma <= delta for delta, _, _, gamma in points)
    ok("accuracy sweep")

    brute = ms.brute_force_fuel_cost(fleet, 150.0)
    assert math.isclose(brute, 6000.0, rel_tol=1e-12)
    ok("permutation oracle")

    synth = ms.synth_fleet(11, 5, (20.0, 80.0), (10.0, 90.0), (0.1, 1.8), True, 3.0)
    again = ms.synth_fleet(11, 5, (20.0, 80.0), (10.0, 90.0), (0.1, 1.8), True, 3.0)
    assert [g.capacity for g in synth.generators()] == [g.capacity for g in again.generators()]
    day = ms.synth_demand(12, 1, 100.0, 30.0, 5.0)
    assert ms.synth_demand(12, 1, 100.0, 30.0, 5.0).demands() == day.demands()
    assert len(day) == 24
    ok("seeded synthesis is deterministic")

    daily = ms.DemandProfile([120.0 + 40.0 * math.sin(2.0 * math.pi * h / 24.0) for h in range(24)])
    report = ms.reduction_report(fleet.with_alpha(20.0), daily, 0.2, 2.0)
    assert report.total_social_reduction >= 0.0
    for d in report.days:
        assert math.isclose(
            d.social_reduction,
            d.carbon_reduction + d.fuel_reduction,
            rel_tol=1e-9,
            abs_tol=1e-9,
        )
    aware, arbitrage = ms.arbitrage_comparison(fleet.with_alpha(20.0), daily, 0.2, 2.0, 20.0)
    assert aware.total_social_reduction >= arbitrage.total_social_reduction
    ok("reduction report and arbitrage comparison")

    try:
        ms.solve_dp(curve, ms.DemandProfile([500.0]), spec)
    except RuntimeError:
        ok("infeasibility raises RuntimeError")
    else:
        sys.exit("expected RuntimeError for infeasible demand")

    try:
        ms.Fleet([], 3.0)
    except ValueError:
        ok("validation raises ValueError")
    else:
        sys.exit("expected ValueError for an empty fleet")

    try:
        curve.social_cost(1e9)
    except ValueError:
        ok("out-of-range purchase raises ValueError")
    else:
        sys.exit("expected ValueError for an out-of-range purchase")

    print(f"smoke test passed: {checks} checks")


if __name__ == "__main__":
    main()
