//! Generator fleets, merit-order dispatch, and the piecewise-linear cost
//! curves induced by filling generators in ascending marginal-cost order.
//!
//! A fleet prices energy two ways at once: each generator has a marginal
//! fuel cost (currency per MWh) and a marginal carbon emission rate
//! (tonnes per MWh) priced through the fleet-wide carbon price `alpha`.
//! Dispatching a total purchase `x` in merit order (cheapest fuel first)
//! makes the fuel cost `f(x)` convex piecewise-linear. The combined social
//! cost `C(x) = f(x) + c(x)` is still piecewise-linear but generally not
//! convex, because a generator cheap on fuel may be dirty on carbon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One dispatchable unit. Capacity is in MWh per step (steps are hourly,
/// so MW and MWh coincide), fuel cost in currency per MWh, emission rate
/// in tonnes CO2 per MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub capacity: f64,
    pub marginal_fuel_cost: f64,
    pub marginal_carbon_emission: f64,
}

impl Generator {
    pub fn new(
        id: impl Into<String>,
        capacity: f64,
        marginal_fuel_cost: f64,
        marginal_carbon_emission: f64,
    ) -> Self {
        Generator {
            id: id.into(),
            capacity,
            marginal_fuel_cost,
            marginal_carbon_emission,
        }
    }
}

/// A validated set of generators plus the carbon price `alpha`
/// (currency per tonne CO2) used to convert emission rates into
/// marginal carbon costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    generators: Vec<Generator>,
    alpha: f64,
}

impl Fleet {
    /// Builds a fleet, rejecting empty generator lists, duplicate ids,
    /// non-positive capacities, negative costs or rates, and a negative
    /// or non-finite carbon price.
    pub fn new(generators: Vec<Generator>, alpha: f64) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::validation("fleet must contain at least one generator"));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::validation(format!(
                "carbon price alpha must be finite and non-negative, got {alpha}"
            )));
        }
        for g in &generators {
            if !(g.capacity.is_finite() && g.capacity > 0.0) {
                return Err(Error::validation(format!(
                    "generator {}: capacity must be finite and positive, got {}",
                    g.id, g.capacity
                )));
            }
            if !(g.marginal_fuel_cost.is_finite() && g.marginal_fuel_cost >= 0.0) {
                return Err(Error::validation(format!(
                    "generator {}: marginal fuel cost must be finite and non-negative, got {}",
                    g.id, g.marginal_fuel_cost
                )));
            }
            if !(g.marginal_carbon_emission.is_finite() && g.marginal_carbon_emission >= 0.0) {
                return Err(Error::validation(format!(
                    "generator {}: marginal carbon emission must be finite and non-negative, got {}",
                    g.id, g.marginal_carbon_emission
                )));
            }
        }
        let mut ids: Vec<&str> = generators.iter().map(|g| g.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation(format!("duplicate generator id {}", w[0])));
        }
        Ok(Fleet { generators, alpha })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a validated fleet always has at least one generator
    }

    /// Same generators under a different carbon price. Used to compare
    /// carbon-aware operation against pure fuel-cost arbitrage.
    pub fn with_alpha(&self, alpha: f64) -> Result<Fleet> {
        Fleet::new(self.generators.clone(), alpha)
    }
}

/// The dispatch order: `permutation[k]` is the index (into the fleet's
/// generator list) of the k-th cheapest generator by marginal fuel cost.
/// `cumulative_capacity[k]` is the total capacity of the first k+1
/// generators in that order, so it is strictly increasing and ends at the
/// fleet's total capacity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeritOrder {
    pub permutation: Vec<usize>,
    pub cumulative_capacity: Vec<f64>,
}

/// Sorts generators by ascending marginal fuel cost, breaking ties by
/// ascending marginal carbon emission and then by id, so the order is a
/// deterministic function of the fleet.
pub fn build_merit_order(fleet: &Fleet) -> MeritOrder {
    let gens = fleet.generators();
    let mut permutation: Vec<usize> = (0..gens.len()).collect();
    permutation.sort_by(|&a, &b| {
        gens[a]
            .marginal_fuel_cost
            .total_cmp(&gens[b].marginal_fuel_cost)
            .then_with(|| {
                gens[a]
                    .marginal_carbon_emission
                    .total_cmp(&gens[b].marginal_carbon_emission)
            })
            .then_with(|| gens[a].id.cmp(&gens[b].id))
    });
    let mut cumulative_capacity = Vec::with_capacity(permutation.len());
    let mut acc = 0.0;
    for &i in &permutation {
        acc += gens[i].capacity;
        cumulative_capacity.push(acc);
    }
    MeritOrder {
        permutation,
        cumulative_capacity,
    }
}

/// One linear piece of the social-cost curve, valid on `[x_lo, x_hi)`
/// (the last segment also covers its right endpoint). `mf`, `mc` and
/// `ms = mf + mc` are the marginal fuel, carbon and social costs on the
/// piece, in currency per MWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x_lo: f64,
    pub x_hi: f64,
    pub mf: f64,
    pub mc: f64,
    pub ms: f64,
}

/// Piecewise-linear fuel, carbon and social cost of purchasing `x` MWh
/// from a fleet dispatched in merit order. Segments tile `[0, X]` where
/// `X` is the total capacity. Costs are evaluated from per-segment prefix
/// sums so repeated queries are O(log segments).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostCurve {
    pub segments: Vec<Segment>,
    pub total_capacity: f64,
    /// Maximum of `ms` over all segments; the Lipschitz constant of the
    /// social-cost curve and the driver of the discretization error bound.
    pub max_marginal_social: f64,
    #[serde(skip)]
    prefix_fuel: Vec<f64>,
    #[serde(skip)]
    prefix_carbon: Vec<f64>,
    #[serde(skip)]
    prefix_social: Vec<f64>,
}

/// Assembles the cost curve for a fleet: one segment per merit-order
/// position, with marginal carbon cost `alpha * marginal_carbon_emission`,
/// merging consecutive segments whose `(mf, mc)` pair is identical.
pub fn build_cost_curve(fleet: &Fleet) -> CostCurve {
    let order = build_merit_order(fleet);
    let gens = fleet.generators();
    let mut segments: Vec<Segment> = Vec::with_capacity(order.permutation.len());
    let mut x_lo = 0.0;
    for (pos, &i) in order.permutation.iter().enumerate() {
        let x_hi = order.cumulative_capacity[pos];
        let mf = gens[i].marginal_fuel_cost;
        let mc = fleet.alpha() * gens[i].marginal_carbon_emission;
        match segments.last_mut() {
            Some(last) if last.mf == mf && last.mc == mc => last.x_hi = x_hi,
            _ => segments.push(Segment {
                x_lo,
                x_hi,
                mf,
                mc,
                ms: mf + mc,
            }),
        }
        x_lo = x_hi;
    }
    let total_capacity = *order.cumulative_capacity.last().expect("fleet is non-empty");
    let max_marginal_social = segments.iter().map(|s| s.ms).fold(f64::NEG_INFINITY, f64::max);

    let mut prefix_fuel = Vec::with_capacity(segments.len());
    let mut prefix_carbon = Vec::with_capacity(segments.len());
    let mut prefix_social = Vec::with_capacity(segments.len());
    let (mut f, mut c, mut s) = (0.0, 0.0, 0.0);
    for seg in &segments {
        prefix_fuel.push(f);
        prefix_carbon.push(c);
        prefix_social.push(s);
        let w = seg.x_hi - seg.x_lo;
        f += seg.mf * w;
        c += seg.mc * w;
        s += seg.ms * w;
    }

    CostCurve {
        segments,
        total_capacity,
        max_marginal_social,
        prefix_fuel,
        prefix_carbon,
        prefix_social,
    }
}

impl CostCurve {
    fn check_purchase(&self, x: f64) -> Result<()> {
        if !x.is_finite() || x < 0.0 || x > self.total_capacity {
            return Err(Error::OutOfRange {
                value: x,
                max: self.total_capacity,
            });
        }
        Ok(())
    }

    /// Index of the segment whose half-open range `[x_lo, x_hi)` contains
    /// `x`; the full capacity `x == X` maps to the last segment.
    fn locate(&self, x: f64) -> usize {
        // partition_point returns the first segment with x_hi > x, which is
        // exactly the half-open-interval owner; clamp for x == X.
        let k = self.segments.partition_point(|s| s.x_hi <= x);
        k.min(self.segments.len() - 1)
    }

    /// Minimum fuel cost of serving purchase `x`, i.e. the merit-order
    /// dispatch cost.
    pub fn fuel_cost(&self, x: f64) -> Result<f64> {
        self.check_purchase(x)?;
        let k = self.locate(x);
        let seg = &self.segments[k];
        Ok(self.prefix_fuel[k] + seg.mf * (x - seg.x_lo))
    }

    /// Carbon cost of serving purchase `x` under the same merit-order fill.
    pub fn carbon_cost(&self, x: f64) -> Result<f64> {
        self.check_purchase(x)?;
        let k = self.locate(x);
        let seg = &self.segments[k];
        Ok(self.prefix_carbon[k] + seg.mc * (x - seg.x_lo))
    }

    /// Social cost `C(x)`, accumulated in a single pass over the combined
    /// marginal `ms` rather than by adding the other two queries.
    pub fn social_cost(&self, x: f64) -> Result<f64> {
        self.check_purchase(x)?;
        let k = self.locate(x);
        let seg = &self.segments[k];
        Ok(self.prefix_social[k] + seg.ms * (x - seg.x_lo))
    }

    /// Right-continuous marginal social cost, defined for `0 <= x < X`.
    /// At a breakpoint this is the marginal of the segment to the right.
    pub fn marginal_social_cost(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || x < 0.0 || x >= self.total_capacity {
            return Err(Error::OutOfRange {
                value: x,
                max: self.total_capacity,
            });
        }
        Ok(self.segments[self.locate(x)].ms)
    }
}

/// Per-generator outputs (indexed like the fleet's generator list) that
/// realize purchase `x` under the merit-order fill. Each generator up the
/// order runs at capacity until `x` is exhausted.
pub fn dispatch(curve: &CostCurve, order: &MeritOrder, x: f64) -> Result<Vec<f64>> {
    curve.check_purchase(x)?;
    let n = order.permutation.len();
    let mut out = vec![0.0; n];
    let mut remaining = x;
    let mut prev_cum = 0.0;
    for (pos, &i) in order.permutation.iter().enumerate() {
        let width = order.cumulative_capacity[pos] - prev_cum;
        prev_cum = order.cumulative_capacity[pos];
        let take = if remaining < width { remaining } else { width };
        out[i] = take;
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }
    Ok(out)
}
