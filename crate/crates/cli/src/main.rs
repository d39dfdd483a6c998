//! Command-line front end: builds cost curves, solves storage schedules,
//! runs the benchmark sweeps and reports, and writes every result as JSON
//! plus CSV plot data.
//!
//! Exit codes: 0 success, 2 validation or parse failure, 3 infeasible
//! instance, 4 I/O failure.

mod commands;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meritstore::Error;

#[derive(Parser)]
#[command(name = "meritstore", version, about = "Merit-order cost curves and storage scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the social-cost curve and emit its segments
    Curve(CommonArgs),
    /// Solve one storage scheduling horizon
    Solve(CommonArgs),
    /// Sweep grid step sizes and report normalized accuracy
    BenchAccuracy(CommonArgs),
    /// Sweep grid step sizes and report solver wall times
    BenchRuntime(CommonArgs),
    /// Day-by-day cost reductions against the no-storage baseline
    Report(CommonArgs),
    /// Carbon-aware scheduling versus fuel-only arbitrage
    CompareArbitrage(CommonArgs),
    /// Run the built-in verification suite against shipped fixtures
    Selftest(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Fleet CSV path (header: id,capacity_mwh,fuel_cost_usd_per_mwh,carbon_t_per_mwh)
    #[arg(long, conflicts_with = "synth_fleet")]
    fleet: Option<PathBuf>,

    /// Synthetic fleet: SEED,N[,CAP_LO,CAP_HI,MF_LO,MF_HI,MCE_LO,MCE_HI,ANTICORR]
    #[arg(long, value_parser = parse_synth_fleet)]
    synth_fleet: Option<SynthFleetSpec>,

    /// Demand CSV path (header: timestamp_iso8601,demand_mwh)
    #[arg(long, conflicts_with = "synth_demand")]
    demand: Option<PathBuf>,

    /// Synthetic demand: SEED,DAYS[,BASE,AMPLITUDE,NOISE]
    #[arg(long, value_parser = parse_synth_demand)]
    synth_demand: Option<SynthDemandSpec>,

    /// Carbon price in $ per tonne of CO2
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,

    /// Storage grid step in MWh
    #[arg(long, default_value_t = 1.0)]
    delta: f64,

    /// Reference grid step for accuracy sweeps; defaults to delta / 16
    #[arg(long)]
    ref_delta: Option<f64>,

    /// Storage capacity as a fraction of peak demand
    #[arg(long, default_value_t = 0.2)]
    storage_frac: f64,

    /// Rescale demand so its peak hits this fraction of fleet capacity.
    /// Benchmark and report commands default to 0.9; solve and curve leave
    /// demand untouched unless this is set.
    #[arg(long)]
    peak_target: Option<f64>,

    /// Output directory for JSON and CSV artifacts
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Seed for default synthetic sources and the selftest suites
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Number of step sizes in benchmark sweeps (delta, delta/2, ...)
    #[arg(long, default_value_t = 4)]
    sweep_points: u32,
}

#[derive(Clone, Debug)]
struct SynthFleetSpec {
    seed: u64,
    n: usize,
    capacity_range: (f64, f64),
    mf_range: (f64, f64),
    mce_range: (f64, f64),
    anticorrelate: bool,
}

impl SynthFleetSpec {
    fn with_seed(seed: u64) -> Self {
        SynthFleetSpec {
            seed,
            n: 20,
            capacity_range: (20.0, 80.0),
            mf_range: (10.0, 90.0),
            mce_range: (0.1, 1.8),
            anticorrelate: true,
        }
    }

    fn describe(&self) -> String {
        format!(
            "synthetic(seed={}, n={}, capacity=({}, {}), mf=({}, {}), mce=({}, {}), anticorrelated={})",
            self.seed,
            self.n,
            self.capacity_range.0,
            self.capacity_range.1,
            self.mf_range.0,
            self.mf_range.1,
            self.mce_range.0,
            self.mce_range.1,
            self.anticorrelate
        )
    }
}

#[derive(Clone, Debug)]
struct SynthDemandSpec {
    seed: u64,
    days: usize,
    base: f64,
    amplitude: f64,
    noise: f64,
}

impl SynthDemandSpec {
    fn with_seed(seed: u64) -> Self {
        SynthDemandSpec {
            seed,
            days: 2,
            base: 450.0,
            amplitude: 150.0,
            noise: 30.0,
        }
    }

    fn describe(&self) -> String {
        format!(
            "synthetic(seed={}, days={}, base={}, amplitude={}, noise={})",
            self.seed, self.days, self.base, self.amplitude, self.noise
        )
    }
}

fn parse_synth_fleet(value: &str) -> Result<SynthFleetSpec, String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() < 2 || parts.len() > 9 {
        return Err("expected SEED,N[,CAP_LO,CAP_HI,MF_LO,MF_HI,MCE_LO,MCE_HI,ANTICORR]".into());
    }
    let mut spec = SynthFleetSpec::with_seed(parse_num::<u64>(parts[0], "SEED")?);
    spec.n = parse_num(parts[1], "N")?;
    if let Some(&v) = parts.get(2) {
        spec.capacity_range.0 = parse_num(v, "CAP_LO")?;
    }
    if let Some(&v) = parts.get(3) {
        spec.capacity_range.1 = parse_num(v, "CAP_HI")?;
    }
    if let Some(&v) = parts.get(4) {
        spec.mf_range.0 = parse_num(v, "MF_LO")?;
    }
    if let Some(&v) = parts.get(5) {
        spec.mf_range.1 = parse_num(v, "MF_HI")?;
    }
    if let Some(&v) = parts.get(6) {
        spec.mce_range.0 = parse_num(v, "MCE_LO")?;
    }
    if let Some(&v) = parts.get(7) {
        spec.mce_range.1 = parse_num(v, "MCE_HI")?;
    }
    if let Some(&v) = parts.get(8) {
        spec.anticorrelate = parse_bool(v, "ANTICORR")?;
    }
    Ok(spec)
}

fn parse_synth_demand(value: &str) -> Result<SynthDemandSpec, String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() < 2 || parts.len() > 5 {
        return Err("expected SEED,DAYS[,BASE,AMPLITUDE,NOISE]".into());
    }
    let mut spec = SynthDemandSpec::with_seed(parse_num::<u64>(parts[0], "SEED")?);
    spec.days = parse_num(parts[1], "DAYS")?;
    if let Some(&v) = parts.get(2) {
        spec.base = parse_num(v, "BASE")?;
    }
    if let Some(&v) = parts.get(3) {
        spec.amplitude = parse_num(v, "AMPLITUDE")?;
    }
    if let Some(&v) = parts.get(4) {
        spec.noise = parse_num(v, "NOISE")?;
    }
    Ok(spec)
}

fn parse_num<T: std::str::FromStr>(value: &str, name: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{name} value {value:?} is not a number"))
}

fn parse_bool(value: &str, name: &str) -> Result<bool, String> {
    match value {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(format!("{name} value {other:?} is not a boolean (use 0/1/true/false)")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curve(args) => commands::curve(&args),
        Command::Solve(args) => commands::solve(&args),
        Command::BenchAccuracy(args) => commands::bench_accuracy(&args),
        Command::BenchRuntime(args) => commands::bench_runtime(&args),
        Command::Report(args) => commands::report(&args),
        Command::CompareArbitrage(args) => commands::compare_arbitrage(&args),
        Command::Selftest(args) => selftest::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    if err.is_infeasibility() {
        3
    } else if matches!(err, Error::Io(_)) {
        4
    } else {
        2
    }
}
