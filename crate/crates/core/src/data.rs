//! CSV interchange for fleets and demand series, plus demand rescaling.
//!
//! Fleet files carry one generator per row:
//!
//! ```text
//! id,capacity_mwh,fuel_cost_usd_per_mwh,carbon_t_per_mwh
//! coal_a,100,30,1.0
//! ```
//!
//! Demand files carry one hour per row with RFC 3339 timestamps:
//!
//! ```text
//! timestamp_iso8601,demand_mwh
//! 2018-01-01T00:00:00Z,950.5
//! ```
//!
//! The carbon price is deliberately not part of the fleet file; it is a
//! policy knob supplied alongside, so the same fleet can be priced under
//! different carbon regimes.

use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset, SecondsFormat, Utc};

use crate::dispatch::{Fleet, Generator};
use crate::error::{Error, Result};
use crate::storage::DemandProfile;

const FLEET_HEADER: [&str; 4] = ["id", "capacity_mwh", "fuel_cost_usd_per_mwh", "carbon_t_per_mwh"];
const DEMAND_HEADER: [&str; 2] = ["timestamp_iso8601", "demand_mwh"];

/// Reads a fleet file and prices its carbon at `alpha`.
pub fn load_fleet(path: &Path, alpha: f64) -> Result<Fleet> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    check_header(reader.headers().map_err(csv_error)?, &FLEET_HEADER)?;

    let mut generators = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != FLEET_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", FLEET_HEADER.len(), record.len()),
            });
        }
        let id = record[0].trim().to_string();
        let capacity = parse_f64(&record[1], line, "capacity_mwh")?;
        let mf = parse_f64(&record[2], line, "fuel_cost_usd_per_mwh")?;
        let mce = parse_f64(&record[3], line, "carbon_t_per_mwh")?;
        generators.push(Generator::new(id, capacity, mf, mce));
    }
    Fleet::new(generators, alpha)
}

/// Writes a fleet back out in the `load_fleet` format. Floats are printed
/// shortest-round-trip, so a save/load cycle reproduces the values exactly.
pub fn save_fleet(fleet: &Fleet, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    writer.write_record(FLEET_HEADER).map_err(csv_error)?;
    for g in fleet.generators() {
        writer
            .write_record([
                g.id.as_str(),
                &g.capacity.to_string(),
                &g.marginal_fuel_cost.to_string(),
                &g.marginal_carbon_emission.to_string(),
            ])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads an hourly demand file. Timestamps must be strictly increasing and
/// exactly one hour apart; gaps and duplicates are rejected rather than
/// silently bridged.
pub fn load_demand(path: &Path) -> Result<DemandProfile> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    check_header(reader.headers().map_err(csv_error)?, &DEMAND_HEADER)?;

    let mut demands = Vec::new();
    let mut previous: Option<DateTime<FixedOffset>> = None;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != DEMAND_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", DEMAND_HEADER.len(), record.len()),
            });
        }
        let stamp = DateTime::parse_from_rfc3339(record[0].trim()).map_err(|e| Error::Parse {
            line,
            message: format!("bad timestamp {:?}: {e}", &record[0]),
        })?;
        if let Some(prev) = previous {
            let gap = stamp.signed_duration_since(prev);
            if gap != Duration::hours(1) {
                return Err(Error::validation(format!(
                    "line {line}: timestamp {} is {} minutes after the previous row, expected exactly 60",
                    record[0].trim(),
                    gap.num_minutes()
                )));
            }
        }
        previous = Some(stamp);
        demands.push(parse_f64(&record[1], line, "demand_mwh")?);
    }
    DemandProfile::new(demands)
}

/// Writes an hourly demand series starting at `start`.
pub fn save_demand(profile: &DemandProfile, path: &Path, start: DateTime<Utc>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    writer.write_record(DEMAND_HEADER).map_err(csv_error)?;
    for (i, d) in profile.demands().iter().enumerate() {
        let stamp = start + Duration::hours(i as i64);
        writer
            .write_record([
                stamp.to_rfc3339_opts(SecondsFormat::Secs, true).as_str(),
                &d.to_string(),
            ])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Rescales a demand series so its peak hour lands at
/// `peak_target_fraction` of the fleet's total capacity. Keeps the shape,
/// changes only the level; any per-step error distributions are carried
/// over unchanged.
pub fn scale_demand(
    profile: &DemandProfile,
    fleet: &Fleet,
    peak_target_fraction: f64,
) -> Result<DemandProfile> {
    if !(peak_target_fraction.is_finite() && peak_target_fraction > 0.0 && peak_target_fraction <= 1.0)
    {
        return Err(Error::validation(format!(
            "peak target fraction {peak_target_fraction} must lie in (0, 1]"
        )));
    }
    let peak = profile.demands().iter().fold(0.0_f64, |m, &d| m.max(d));
    if peak <= 0.0 {
        return Err(Error::validation(
            "cannot scale an all-zero demand series to a positive peak",
        ));
    }
    let total_capacity: f64 = fleet.generators().iter().map(|g| g.capacity).sum();
    let factor = peak_target_fraction * total_capacity / peak;
    let scaled: Vec<f64> = profile.demands().iter().map(|d| d * factor).collect();
    match profile.step_errors() {
        Some(dists) => DemandProfile::with_step_errors(scaled, dists.to_vec()),
        None => DemandProfile::new(scaled),
    }
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let found_fields: Vec<&str> = found.iter().map(str::trim).collect();
    if found_fields != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {:?}, got {:?}", expected.join(","), found_fields.join(",")),
        });
    }
    Ok(())
}

fn parse_f64(field: &str, line: usize, name: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("{name} value {field:?} is not a number"),
    })
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    let message = err.to_string();
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        _ => Error::Parse { line, message },
    }
}
