//! Subcommand bodies: resolve the fleet and demand sources, run the
//! corresponding library call, and write the artifacts.
//!
//! Every artifact is written atomically (temp file in the target directory,
//! then rename) and serialized deterministically, so two runs with the
//! same configuration produce byte-identical JSON apart from wall-time
//! fields.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use meritstore::{
    accuracy_sweep, arbitrage_comparison, build_cost_curve, error_bound, load_demand, load_fleet,
    reduction_report, runtime_sweep, scale_demand, solve_dp, synth_demand, synth_fleet,
    DemandProfile, Error, Fleet, Result, Schedule, Segment, StorageSpec,
};
use serde::Serialize;

use crate::{CommonArgs, SynthDemandSpec, SynthFleetSpec};

/// Benchmark and report commands rescale demand to this fraction of fleet
/// capacity unless told otherwise, so synthetic series of any level are
/// comparable and feasible.
const DEFAULT_PEAK_TARGET: f64 = 0.9;

/// The configuration a result was produced under, echoed into every JSON
/// artifact so each one is self-describing.
#[derive(Serialize)]
pub(crate) struct ConfigEcho {
    fleet_source: String,
    demand_source: Option<String>,
    alpha: f64,
    delta: f64,
    reference_delta: Option<f64>,
    storage_fraction: f64,
    peak_target: Option<f64>,
    sweep_points: Option<u32>,
    seed: u64,
}

fn config_echo(
    args: &CommonArgs,
    fleet_source: String,
    demand_source: Option<String>,
    peak_target: Option<f64>,
    reference_delta: Option<f64>,
    sweep_points: Option<u32>,
) -> ConfigEcho {
    ConfigEcho {
        fleet_source,
        demand_source,
        alpha: args.alpha,
        delta: args.delta,
        reference_delta,
        storage_fraction: args.storage_frac,
        peak_target,
        sweep_points,
        seed: args.seed,
    }
}

fn resolve_fleet(args: &CommonArgs) -> Result<(Fleet, String)> {
    if let Some(path) = &args.fleet {
        let fleet = load_fleet(path, args.alpha)?;
        return Ok((fleet, format!("file:{}", path.display())));
    }
    let spec = args
        .synth_fleet
        .clone()
        .unwrap_or_else(|| SynthFleetSpec::with_seed(args.seed));
    let fleet = synth_fleet(
        spec.seed,
        spec.n,
        spec.capacity_range,
        spec.mf_range,
        spec.mce_range,
        spec.anticorrelate,
        args.alpha,
    )?;
    Ok((fleet, spec.describe()))
}

/// Loads or generates demand, then applies the peak rescaling policy:
/// an explicit `--peak-target` always wins, otherwise `default_target`
/// (set by benchmark and report commands, `None` for solve). Returns the
/// profile, its source description, and the fraction actually applied.
fn resolve_demand(
    args: &CommonArgs,
    fleet: &Fleet,
    default_target: Option<f64>,
) -> Result<(DemandProfile, String, Option<f64>)> {
    let (profile, source) = if let Some(path) = &args.demand {
        (load_demand(path)?, format!("file:{}", path.display()))
    } else {
        let spec = args
            .synth_demand
            .clone()
            .unwrap_or_else(|| SynthDemandSpec::with_seed(args.seed.wrapping_add(1)));
        let profile = synth_demand(spec.seed, spec.days, spec.base, spec.amplitude, spec.noise)?;
        (profile, spec.describe())
    };
    match args.peak_target.or(default_target) {
        Some(target) => Ok((scale_demand(&profile, fleet, target)?, source, Some(target))),
        None => Ok((profile, source, None)),
    }
}

fn sized_spec(profile: &DemandProfile, storage_fraction: f64, delta: f64) -> Result<StorageSpec> {
    if !(storage_fraction.is_finite() && storage_fraction >= 0.0) {
        return Err(Error::validation(format!(
            "storage fraction {storage_fraction} must be finite and non-negative"
        )));
    }
    let peak = profile.demands().iter().fold(0.0_f64, |m, &d| m.max(d));
    StorageSpec::with_midpoint_boundaries(storage_fraction * peak, delta)
}

fn sweep_deltas(args: &CommonArgs) -> Result<Vec<f64>> {
    if !(1..=6).contains(&args.sweep_points) {
        return Err(Error::validation(format!(
            "sweep points {} outside the supported range 1..=6",
            args.sweep_points
        )));
    }
    Ok((0..args.sweep_points)
        .map(|i| args.delta / f64::powi(2.0, i as i32))
        .collect())
}

pub(crate) fn curve(args: &CommonArgs) -> Result<()> {
    let (fleet, fleet_source) = resolve_fleet(args)?;
    let curve = build_cost_curve(&fleet);

    #[derive(Serialize)]
    struct CurveArtifact<'a> {
        config: ConfigEcho,
        total_capacity: f64,
        max_marginal_social: f64,
        segment_count: usize,
        segments: &'a [Segment],
    }
    let artifact = CurveArtifact {
        config: config_echo(args, fleet_source, None, None, None, None),
        total_capacity: curve.total_capacity,
        max_marginal_social: curve.max_marginal_social,
        segment_count: curve.segments.len(),
        segments: &curve.segments,
    };
    let json = write_json(&args.out, "curve.json", &artifact)?;
    let csv = write_csv(
        &args.out,
        "curve_segments.csv",
        &["x_lo", "x_hi", "marginal_fuel", "marginal_carbon", "marginal_social"],
        curve.segments.iter().map(|s| {
            vec![
                s.x_lo.to_string(),
                s.x_hi.to_string(),
                s.mf.to_string(),
                s.mc.to_string(),
                s.ms.to_string(),
            ]
        }),
    )?;
    println!(
        "curve: {} segments over {} MWh, max marginal social cost {}",
        curve.segments.len(),
        curve.total_capacity,
        curve.max_marginal_social
    );
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

pub(crate) fn solve(args: &CommonArgs) -> Result<()> {
    let (fleet, fleet_source) = resolve_fleet(args)?;
    let (profile, demand_source, applied_target) = resolve_demand(args, &fleet, None)?;
    let curve = build_cost_curve(&fleet);
    let spec = sized_spec(&profile, args.storage_frac, args.delta)?;
    let result = solve_dp(&curve, &profile, &spec)?;
    let bound = error_bound(&curve, profile.len(), args.delta);

    #[derive(Serialize)]
    struct SolveArtifact<'a> {
        config: ConfigEcho,
        horizon: usize,
        storage_capacity: f64,
        boundary_state: f64,
        optimal_cost: f64,
        error_bound: f64,
        transitions_evaluated: u64,
        total_fuel: f64,
        total_carbon: f64,
        total_social: f64,
        schedule: &'a Schedule,
    }
    let artifact = SolveArtifact {
        config: config_echo(args, fleet_source, Some(demand_source), applied_target, None, None),
        horizon: profile.len(),
        storage_capacity: spec.capacity(),
        boundary_state: spec.s_initial(),
        optimal_cost: result.optimal_cost,
        error_bound: bound,
        transitions_evaluated: result.transitions_evaluated,
        total_fuel: result.schedule.total_fuel(),
        total_carbon: result.schedule.total_carbon(),
        total_social: result.schedule.total_social(),
        schedule: &result.schedule,
    };
    let json = write_json(&args.out, "solve.json", &artifact)?;
    let csv = write_csv(
        &args.out,
        "solve_schedule.csv",
        &["step", "demand_mwh", "state_end_mwh", "purchase_mwh", "fuel_cost", "carbon_cost", "social_cost"],
        (0..profile.len()).map(|t| {
            let step = &result.schedule.step_costs[t];
            vec![
                (t + 1).to_string(),
                profile.demands()[t].to_string(),
                result.schedule.states[t + 1].to_string(),
                result.schedule.purchases[t].to_string(),
                step.fuel.to_string(),
                step.carbon.to_string(),
                step.social.to_string(),
            ]
        }),
    )?;
    println!(
        "solve: {} steps, storage {} MWh, optimal social cost {} (error bound {})",
        profile.len(),
        spec.capacity(),
        result.optimal_cost,
        bound
    );
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

pub(crate) fn bench_accuracy(args: &CommonArgs) -> Result<()> {
    let (fleet, fleet_source) = resolve_fleet(args)?;
    let (profile, demand_source, applied_target) =
        resolve_demand(args, &fleet, Some(DEFAULT_PEAK_TARGET))?;
    let curve = build_cost_curve(&fleet);
    let spec = sized_spec(&profile, args.storage_frac, args.delta)?;
    let deltas = sweep_deltas(args)?;
    let reference_delta = args.ref_delta.unwrap_or(args.delta / 16.0);
    let points = accuracy_sweep(&curve, &profile, &spec, &deltas, reference_delta)?;

    #[derive(Serialize)]
    struct AccuracyArtifact<'a> {
        config: ConfigEcho,
        storage_capacity: f64,
        horizon: usize,
        points: &'a [meritstore::AccuracyPoint],
    }
    let artifact = AccuracyArtifact {
        config: config_echo(
            args,
            fleet_source,
            Some(demand_source),
            applied_target,
            Some(reference_delta),
            Some(args.sweep_points),
        ),
        storage_capacity: spec.capacity(),
        horizon: profile.len(),
        points: &points,
    };
    let json = write_json(&args.out, "bench_accuracy.json", &artifact)?;
    let csv = write_csv(
        &args.out,
        "bench_accuracy.csv",
        &["delta", "cost", "reference_cost", "gamma"],
        points.iter().map(|p| {
            vec![
                p.delta.to_string(),
                p.cost.to_string(),
                p.reference_cost.to_string(),
                p.gamma.to_string(),
            ]
        }),
    )?;
    for p in &points {
        println!("delta {}: gamma {}", p.delta, p.gamma);
    }
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

pub(crate) fn bench_runtime(args: &CommonArgs) -> Result<()> {
    let (fleet, fleet_source) = resolve_fleet(args)?;
    let (profile, demand_source, applied_target) =
        resolve_demand(args, &fleet, Some(DEFAULT_PEAK_TARGET))?;
    let curve = build_cost_curve(&fleet);
    let spec = sized_spec(&profile, args.storage_frac, args.delta)?;
    let deltas = sweep_deltas(args)?;
    let points = runtime_sweep(&curve, &profile, &spec, &deltas)?;

    #[derive(Serialize)]
    struct RuntimeArtifact<'a> {
        config: ConfigEcho,
        storage_capacity: f64,
        horizon: usize,
        points: &'a [meritstore::RuntimePoint],
    }
    let artifact = RuntimeArtifact {
        config: config_echo(
            args,
            fleet_source,
            Some(demand_source),
            applied_target,
            None,
            Some(args.sweep_points),
        ),
        storage_capacity: spec.capacity(),
        horizon: profile.len(),
        points: &points,
    };
    let json = write_json(&args.out, "bench_runtime.json", &artifact)?;
    let csv = write_csv(
        &args.out,
        "bench_runtime.csv",
        &["delta", "wall_time_secs", "transitions_evaluated"],
        points.iter().map(|p| {
            vec![
                p.delta.to_string(),
                p.wall_time_secs.to_string(),
                p.transitions_evaluated.to_string(),
            ]
        }),
    )?;
    for p in &points {
        println!("delta {}: {} transitions evaluated", p.delta, p.transitions_evaluated);
    }
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

pub(crate) fn report(args: &CommonArgs) -> Result<()> {
    let (fleet, fleet_source) = resolve_fleet(args)?;
    let (profile, demand_source, applied_target) =
        resolve_demand(args, &fleet, Some(DEFAULT_PEAK_TARGET))?;
    let report = reduction_report(&fleet, &profile, args.storage_frac, args.delta)?;

    #[derive(Serialize)]
    struct ReportArtifact<'a> {
        config: ConfigEcho,
        report: &'a meritstore::ReductionReport,
    }
    let artifact = ReportArtifact {
        config: config_echo(args, fleet_source, Some(demand_source), applied_target, None, None),
        report: &report,
    };
    let json = write_json(&args.out, "report.json", &artifact)?;
    let csv = write_csv(
        &args.out,
        "report_days.csv",
        &["day", "peak_demand_mwh", "social_reduction", "carbon_reduction", "fuel_reduction"],
        report.days.iter().map(|d| {
            vec![
                d.day.to_string(),
                d.peak_demand.to_string(),
                d.social_reduction.to_string(),
                d.carbon_reduction.to_string(),
                d.fuel_reduction.to_string(),
            ]
        }),
    )?;
    println!(
        "report: {} day(s), storage {} MWh, total social reduction {}",
        report.days.len(),
        report.storage_capacity,
        report.total_social_reduction
    );
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

pub(crate) fn compare_arbitrage(args: &CommonArgs) -> Result<()> {
    let (fleet, fleet_source) = resolve_fleet(args)?;
    let (profile, demand_source, applied_target) =
        resolve_demand(args, &fleet, Some(DEFAULT_PEAK_TARGET))?;
    let comparison =
        arbitrage_comparison(&fleet, &profile, args.storage_frac, args.delta, args.alpha)?;

    #[derive(Serialize)]
    struct CompareArtifact<'a> {
        config: ConfigEcho,
        comparison: &'a meritstore::ArbitrageComparison,
    }
    let artifact = CompareArtifact {
        config: config_echo(args, fleet_source, Some(demand_source), applied_target, None, None),
        comparison: &comparison,
    };
    let json = write_json(&args.out, "compare_arbitrage.json", &artifact)?;
    let aware = &comparison.carbon_aware;
    let arb = &comparison.arbitrage;
    let csv = write_csv(
        &args.out,
        "compare_arbitrage_days.csv",
        &[
            "day",
            "peak_demand_mwh",
            "aware_social_reduction",
            "arbitrage_social_reduction",
            "aware_carbon_reduction",
            "arbitrage_carbon_reduction",
        ],
        aware.days.iter().zip(&arb.days).map(|(a, b)| {
            vec![
                a.day.to_string(),
                a.peak_demand.to_string(),
                a.social_reduction.to_string(),
                b.social_reduction.to_string(),
                a.carbon_reduction.to_string(),
                b.carbon_reduction.to_string(),
            ]
        }),
    )?;
    println!(
        "compare-arbitrage: {} day(s), carbon-aware reduction {} vs arbitrage {}",
        aware.days.len(),
        aware.total_social_reduction,
        arb.total_social_reduction
    );
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

/// Serializes `value` as pretty JSON with a trailing newline.
pub(crate) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::validation(format!("serializing {name}: {e}")))?;
    body.push('\n');
    let path = dir.join(name);
    atomic_write(dir, &path, body.as_bytes())?;
    Ok(path)
}

pub(crate) fn write_text(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    atomic_write(dir, &path, body.as_bytes())?;
    Ok(path)
}

pub(crate) fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<PathBuf> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::validation(format!("writing {name}: {e}"));
    writer.write_record(header).map_err(fail)?;
    for row in rows {
        writer.write_record(&row).map_err(fail)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::validation(format!("writing {name}: {e}")))?;
    let path = dir.join(name);
    atomic_write(dir, &path, &bytes)?;
    Ok(path)
}

fn atomic_write(dir: &Path, path: &Path, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
