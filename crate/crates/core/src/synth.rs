//! Seeded synthetic fleets and demand profiles for experiments and tests.
//!
//! Everything here is a pure function of its seed and parameters: the same
//! call produces the same bits on every run and platform, which is what
//! makes benchmark outputs and golden files reproducible.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dispatch::{Fleet, Generator};
use crate::error::{Error, Result};
use crate::storage::DemandProfile;

/// Draws `n` generators with capacities and costs uniform in the given
/// `(low, high)` ranges. With `anticorrelate` set, a generator's emission
/// rate sits at the mirrored position of its fuel cost inside `mce_range`
/// (cheap fuel pairs with heavy emissions), which keeps each marginal
/// uniform while making the social-cost curve's non-convexity likely.
pub fn synth_fleet(
    seed: u64,
    n: usize,
    capacity_range: (f64, f64),
    mf_range: (f64, f64),
    mce_range: (f64, f64),
    anticorrelate: bool,
    alpha: f64,
) -> Result<Fleet> {
    if n == 0 {
        return Err(Error::validation("synthetic fleet needs at least one generator"));
    }
    check_range("capacity_range", capacity_range, true)?;
    check_range("mf_range", mf_range, false)?;
    check_range("mce_range", mce_range, false)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut generators = Vec::with_capacity(n);
    for i in 0..n {
        let capacity = sample(&mut rng, capacity_range);
        let u: f64 = rng.random();
        let mf = mf_range.0 + u * (mf_range.1 - mf_range.0);
        let mce = if anticorrelate {
            mce_range.0 + (1.0 - u) * (mce_range.1 - mce_range.0)
        } else {
            sample(&mut rng, mce_range)
        };
        generators.push(Generator::new(format!("g{i:03}"), capacity, mf, mce));
    }
    Fleet::new(generators, alpha)
}

fn check_range(name: &str, (lo, hi): (f64, f64), strictly_positive: bool) -> Result<()> {
    let floor_ok = if strictly_positive { lo > 0.0 } else { lo >= 0.0 };
    if !(lo.is_finite() && hi.is_finite() && floor_ok && lo <= hi) {
        return Err(Error::validation(format!(
            "{name} ({lo}, {hi}) is not a valid non-negative range"
        )));
    }
    Ok(())
}

fn sample(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = rng.random();
    lo + u * (hi - lo)
}

/// Phase shift placing the diurnal peak near hour 17.
const DIURNAL_PHASE: f64 = -11.0 * PI / 12.0;

/// Hourly demand over `days` days: a diurnal sinusoid
/// `base + amplitude * sin(2*pi*hour/24 + phase)` plus seeded uniform noise
/// in `[-noise, +noise]`. Requires `base > amplitude + noise` so the series
/// stays positive; the same hour of different days differs only by the
/// noise term.
pub fn synth_demand(
    seed: u64,
    days: usize,
    base: f64,
    amplitude: f64,
    noise: f64,
) -> Result<DemandProfile> {
    if days == 0 {
        return Err(Error::validation("synthetic demand needs at least one day"));
    }
    for (name, v) in [("base", base), ("amplitude", amplitude), ("noise", noise)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::validation(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    if base <= amplitude + noise {
        return Err(Error::validation(format!(
            "base {base} must exceed amplitude + noise = {} or demand could go negative",
            amplitude + noise
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut demands = Vec::with_capacity(days * 24);
    for t in 0..days * 24 {
        let hour = (t % 24) as f64;
        let seasonal = base + amplitude * (2.0 * PI * hour / 24.0 + DIURNAL_PHASE).sin();
        let eps = (rng.random::<f64>() * 2.0 - 1.0) * noise;
        demands.push(seasonal + eps);
    }
    DemandProfile::new(demands)
}
