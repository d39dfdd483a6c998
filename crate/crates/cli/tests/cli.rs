//! End-to-end tests that drive the compiled binary and inspect its exit
//! codes and artifacts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use meritstore::{build_cost_curve, solve_dp, DemandProfile, Fleet, Generator, StorageSpec};
use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meritstore"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should run")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Two-generator fleet whose marginal social cost decreases at the first
/// breakpoint under `--alpha 20`.
const NONCONVEX_FLEET: &str = "id,capacity_mwh,fuel_cost_usd_per_mwh,carbon_t_per_mwh\n\
                               dirty,10,30,2.0\n\
                               clean,10,60,0.1\n";

const SMALL_DEMAND: &str = "timestamp_iso8601,demand_mwh\n\
                            2018-01-01T00:00:00Z,2\n\
                            2018-01-01T01:00:00Z,4\n\
                            2018-01-01T02:00:00Z,2\n";

fn write_fixtures(dir: &Path) {
    fs::write(dir.join("fleet.csv"), NONCONVEX_FLEET).unwrap();
    fs::write(dir.join("demand.csv"), SMALL_DEMAND).unwrap();
}

#[test]
fn curve_writes_segments_with_expected_marginals() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let out = run(dir.path(), &["curve", "--fleet", "fleet.csv", "--alpha", "20", "--out", "art"]);
    assert_ok(&out);

    let artifact = read_json(&dir.path().join("art/curve.json"));
    assert_eq!(artifact["total_capacity"], 20.0);
    assert_eq!(artifact["max_marginal_social"], 70.0);
    let segments = artifact["segments"].as_array().unwrap();
    assert_eq!(segments.len(), 2);
    assert_eq!(segments[0]["ms"], 70.0);
    assert_eq!(segments[1]["ms"], 62.0);
    assert_eq!(artifact["config"]["alpha"], 20.0);

    let csv = fs::read_to_string(dir.path().join("art/curve_segments.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x_lo,x_hi,marginal_fuel,marginal_carbon,marginal_social"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn solve_artifact_matches_the_library_exactly() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let out = run(
        dir.path(),
        &[
            "solve",
            "--fleet",
            "fleet.csv",
            "--demand",
            "demand.csv",
            "--alpha",
            "20",
            "--delta",
            "1",
            "--storage-frac",
            "0.5",
            "--out",
            "art",
        ],
    );
    assert_ok(&out);

    let fleet = Fleet::new(
        vec![Generator::new("dirty", 10.0, 30.0, 2.0), Generator::new("clean", 10.0, 60.0, 0.1)],
        20.0,
    )
    .unwrap();
    let curve = build_cost_curve(&fleet);
    let profile = DemandProfile::new(vec![2.0, 4.0, 2.0]).unwrap();
    let spec = StorageSpec::with_midpoint_boundaries(2.0, 1.0).unwrap();
    let expected = solve_dp(&curve, &profile, &spec).unwrap();

    let artifact = read_json(&dir.path().join("art/solve.json"));
    assert_eq!(artifact["horizon"], 3);
    assert_eq!(artifact["storage_capacity"], 2.0);
    assert_eq!(artifact["boundary_state"], 1.0);
    assert_eq!(artifact["optimal_cost"].as_f64().unwrap(), expected.optimal_cost);
    assert_eq!(
        artifact["transitions_evaluated"].as_u64().unwrap(),
        expected.transitions_evaluated
    );
    let states: Vec<f64> =
        artifact["schedule"]["states"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(states, expected.schedule.states);
    let total: f64 = artifact["total_social"].as_f64().unwrap();
    assert_eq!(total, expected.schedule.total_social());

    let csv = fs::read_to_string(dir.path().join("art/solve_schedule.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn infeasible_demand_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    fs::write(
        dir.path().join("heavy.csv"),
        "timestamp_iso8601,demand_mwh\n2018-01-01T00:00:00Z,50\n2018-01-01T01:00:00Z,50\n",
    )
    .unwrap();
    let out = run(
        dir.path(),
        &["solve", "--fleet", "fleet.csv", "--demand", "heavy.csv", "--out", "art"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no feasible schedule"));
}

#[test]
fn missing_input_file_exits_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["curve", "--fleet", "no_such_fleet.csv", "--out", "art"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn invalid_inputs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();

    let out = run(dir.path(), &["solve", "--synth-fleet", "abc", "--out", "art"]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(
        dir.path().join("bad_fleet.csv"),
        "id,capacity_mwh,fuel_cost_usd_per_mwh,carbon_t_per_mwh\nbad,-5,30,1\n",
    )
    .unwrap();
    let out = run(dir.path(), &["curve", "--fleet", "bad_fleet.csv", "--out", "art"]);
    assert_eq!(out.status.code(), Some(2));

    write_fixtures(dir.path());
    fs::write(
        dir.path().join("gappy.csv"),
        "timestamp_iso8601,demand_mwh\n2018-01-01T00:00:00Z,5\n2018-01-01T00:30:00Z,6\n",
    )
    .unwrap();
    let out = run(
        dir.path(),
        &["solve", "--fleet", "fleet.csv", "--demand", "gappy.csv", "--out", "art"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("30 minutes"));
}

#[test]
fn bench_accuracy_reports_gammas_within_delta() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let out = run(
        dir.path(),
        &[
            "bench-accuracy",
            "--fleet",
            "fleet.csv",
            "--alpha",
            "20",
            "--synth-demand",
            "4,1,10,4,1",
            "--delta",
            "2",
            "--sweep-points",
            "3",
            "--out",
            "art",
        ],
    );
    assert_ok(&out);

    let artifact = read_json(&dir.path().join("art/bench_accuracy.json"));
    let points = artifact["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    for p in points {
        let delta = p["delta"].as_f64().unwrap();
        let gamma = p["gamma"].as_f64().unwrap();
        assert!(gamma >= 0.0, "gamma {gamma} negative at delta {delta}");
        assert!(gamma <= delta, "gamma {gamma} above delta {delta}");
    }
    let csv = fs::read_to_string(dir.path().join("art/bench_accuracy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn report_days_decompose_into_carbon_plus_fuel() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["report", "--seed", "3", "--out", "art"]);
    assert_ok(&out);

    let artifact = read_json(&dir.path().join("art/report.json"));
    let report = &artifact["report"];
    let days = report["days"].as_array().unwrap();
    assert_eq!(days.len(), 2);
    let mut total = 0.0;
    for day in days {
        let social = day["social_reduction"].as_f64().unwrap();
        let carbon = day["carbon_reduction"].as_f64().unwrap();
        let fuel = day["fuel_reduction"].as_f64().unwrap();
        assert!(social >= 0.0);
        assert!((social - (carbon + fuel)).abs() <= 1e-9 * social.abs().max(1.0));
        total += social;
    }
    let reported = report["total_social_reduction"].as_f64().unwrap();
    assert!((reported - total).abs() <= 1e-9 * total.abs().max(1.0));
}

#[test]
fn same_seed_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve", "--seed", "9", "--out", "a"]);
    assert_ok(&out);
    let out = run(dir.path(), &["solve", "--seed", "9", "--out", "b"]);
    assert_ok(&out);
    let a = fs::read(dir.path().join("a/solve.json")).unwrap();
    let b = fs::read(dir.path().join("b/solve.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn selftest_passes_on_the_shipped_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["selftest", "--out", "art"]);
    assert_ok(&out);
    let artifact = read_json(&dir.path().join("art/selftest.json"));
    assert_eq!(artifact["all_passed"], true);
    assert_eq!(artifact["checks"].as_array().unwrap().len(), 6);
}
