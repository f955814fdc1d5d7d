//! Inventory-management payoffs.
//!
//! Demand takes the role availability plays for term loans: a retailer's
//! per-period profit follows the newsvendor accounting, and breaches of
//! demand thresholds (too little demand leaving excess stock, or too much
//! demand straining supply or emissions limits) reuse the barrier payoff
//! kernels unchanged.

use crate::error::{Error, Result};
use crate::payoff::{
    DiscountConfig, EvalOptions, StructureKind, TermLoanContract, ValuationResult,
};
use crate::process::{GbmSpec, PathBundle, TimeGrid, VariableKind};
use crate::rng::stream_rng;
use crate::stats::mean_std_error;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Unit economics of one period. The inventory section reuses letters the
/// loan model already spends (c, r, p), so the fields carry explicit names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRates {
    /// Retail price per unit sold.
    pub retail: f64,
    /// Wholesale price the retailer pays per unit ordered.
    pub wholesale: f64,
    /// Penalty per unit of unmet demand.
    pub stockout: f64,
    /// Salvage value per unsold unit.
    pub salvage: f64,
}

impl CostRates {
    /// 0 < salvage < wholesale < retail and stockout > 0.
    pub fn validate(&self, unit_cost: f64) -> Result<()> {
        let ok = self.salvage > 0.0
            && self.salvage < self.wholesale
            && self.wholesale < self.retail
            && self.stockout > 0.0
            && self.retail > unit_cost;
        if !ok {
            return Err(Error::invalid(format!(
                "cost rates must satisfy 0 < salvage < wholesale < retail, retail > unit cost, stockout > 0; \
                 got salvage {}, wholesale {}, retail {}, stockout {}, unit cost {unit_cost}",
                self.salvage, self.wholesale, self.retail, self.stockout
            )));
        }
        Ok(())
    }
}

/// Constant or per-period cost rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum CostSchedule {
    Constant(CostRates),
    PerPeriod(Vec<CostRates>),
}

impl CostSchedule {
    fn at(&self, t: usize) -> &CostRates {
        match self {
            CostSchedule::Constant(rates) => rates,
            CostSchedule::PerPeriod(rates) => &rates[t.min(rates.len() - 1)],
        }
    }

    fn validate(&self, unit_cost: f64) -> Result<()> {
        match self {
            CostSchedule::Constant(rates) => rates.validate(unit_cost),
            CostSchedule::PerPeriod(rates) => {
                if rates.is_empty() {
                    return Err(Error::invalid("per-period cost schedule is empty"));
                }
                rates.iter().try_for_each(|r| r.validate(unit_cost))
            }
        }
    }
}

/// Constant or per-period order quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum OrderQuantity {
    Constant(f64),
    PerPeriod(Vec<f64>),
}

impl OrderQuantity {
    fn at(&self, t: usize) -> f64 {
        match self {
            OrderQuantity::Constant(q) => *q,
            OrderQuantity::PerPeriod(qs) => qs[t.min(qs.len() - 1)],
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            OrderQuantity::Constant(q) => q.is_finite() && *q > 0.0,
            OrderQuantity::PerPeriod(qs) => {
                !qs.is_empty() && qs.iter().all(|q| q.is_finite() && *q > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("order quantities must be > 0"))
        }
    }
}

/// Inventory problem parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryParams {
    /// Manufacturer's unit cost (bounds retail from below).
    pub unit_cost: f64,
    pub costs: CostSchedule,
    /// Units ordered each period.
    pub order: OrderQuantity,
    /// Demand threshold for breach payoffs.
    pub threshold: f64,
    /// Cost when demand falls to the threshold, K.
    pub payoff_down: f64,
    /// Cost when demand rises to the threshold, K~.
    pub payoff_up: f64,
}

impl InventoryParams {
    pub fn validate(&self) -> Result<()> {
        self.costs.validate(self.unit_cost)?;
        self.order.validate()?;
        if !self.threshold.is_finite() || self.threshold <= 0.0 {
            return Err(Error::invalid("demand threshold must be > 0"));
        }
        if self.payoff_down < 0.0 || self.payoff_up < 0.0 {
            return Err(Error::invalid("breach payoffs must be >= 0"));
        }
        Ok(())
    }
}

/// Occasional multiplicative demand shocks layered on the GBM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    /// Probability of a jump per step, in [0, 1].
    pub probability: f64,
    /// Mean of the jump's log size.
    pub log_mean: f64,
    /// Standard deviation of the jump's log size.
    pub log_sd: f64,
}

impl JumpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::invalid("jump probability must lie in [0, 1]"));
        }
        if !self.log_mean.is_finite() || !self.log_sd.is_finite() || self.log_sd < 0.0 {
            return Err(Error::invalid("jump size parameters must be finite, sd >= 0"));
        }
        Ok(())
    }
}

/// Simulate demand paths; plain GBM when `jumps` is None (and then draw-for-
/// draw identical to the process module's generator with the same seed).
pub fn simulate_demand(
    spec: &GbmSpec,
    jumps: Option<&JumpSpec>,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    if spec.kind != VariableKind::Demand {
        return Err(Error::invalid("demand simulation expects a demand spec"));
    }
    spec.validate()?;
    if let Some(j) = jumps {
        j.validate()?;
    }
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be at least 1"));
    }
    let tau = grid.step();
    let log_drift = (spec.drift - 0.5 * spec.vol * spec.vol) * tau;
    let diffusion = spec.vol * tau.sqrt();
    let n_points = grid.n_points();
    let mut bundle = PathBundle::zeroed(*grid, vec![VariableKind::Demand], n_paths, seed);
    bundle
        .path_blocks_mut()
        .enumerate()
        .for_each(|(path, block)| {
            let mut rng = stream_rng(seed, path as u64);
            block[0] = spec.start;
            for point in 1..n_points {
                let z: f64 = rng.sample(StandardNormal);
                let mut next = block[point - 1] * (log_drift + diffusion * z).exp();
                if let Some(j) = jumps {
                    if rng.random_range(0.0..1.0) < j.probability {
                        let jz: f64 = rng.sample(StandardNormal);
                        next *= (j.log_mean + j.log_sd * jz).exp();
                    }
                }
                block[point] = next;
            }
        });
    Ok(bundle)
}

/// Newsvendor profit per period, summed over the horizon:
///
/// ```text
/// (D min Q) p - Q w - (D - Q)^+ r + (D - Q)^- s
/// ```
///
/// discounted at the period start.
pub fn retailer_pnl(
    demand: &PathBundle,
    params: &InventoryParams,
    discount: &DiscountConfig,
) -> Result<ValuationResult> {
    params.validate()?;
    discount.validate()?;
    let demand_var = demand.nth_of_kind(VariableKind::Demand, 0)?;
    let disc = discount.table(demand.grid());
    let n_points = demand.n_points();
    let payoffs: Vec<f64> = (0..demand.n_paths())
        .into_par_iter()
        .map(|path| {
            let series = demand.series(path, demand_var);
            let mut total = 0.0;
            for t in 0..n_points {
                let d = series[t];
                let q = params.order.at(t);
                let rates = params.costs.at(t);
                let sold = d.min(q) * rates.retail;
                let bought = q * rates.wholesale;
                let shortage = (d - q).max(0.0) * rates.stockout;
                let leftover = (q - d).max(0.0) * rates.salvage;
                total += (sold - bought - shortage + leftover) * disc[t];
            }
            total
        })
        .collect();
    let stat = mean_std_error(&payoffs);
    Ok(ValuationResult {
        structure: StructureKind::RetailerPnl,
        estimate: stat.mean,
        std_error: stat.std_error,
        n_paths: demand.n_paths(),
        annualized_rate: None,
    })
}

/// Which side of the threshold triggers the breach payoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreachDirection {
    /// Demand falling to the threshold costs K (excess-stock reading).
    Down,
    /// Demand rising to the threshold costs K~ (supply-strain / emissions
    /// reading).
    Up,
}

/// Breach payoff flavor; mirrors the term-loan structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreachMode {
    Constant,
    ProportionalTime,
    ConstantCounter,
    ProportionalCounter,
}

impl BreachMode {
    fn structure(self) -> StructureKind {
        match self {
            BreachMode::Constant => StructureKind::Constant,
            BreachMode::ProportionalTime => StructureKind::ProportionalTime,
            BreachMode::ConstantCounter => StructureKind::ConstantCounter,
            BreachMode::ProportionalCounter => StructureKind::ProportionalCounter,
        }
    }
}

/// Value a demand-barrier option by delegating to the term-loan kernels
/// with demand as the underlying and the threshold as the barrier.
///
/// `Down` relabels demand as availability, bit-for-bit identical to the
/// corresponding term-loan valuation. `Up` reflects the series around the
/// threshold (d -> 2H - d), which maps "demand rises to H" onto the
/// kernels' breach condition with ties preserved; K~ is charged on the
/// first rise (or each upward crossing), K credited on recoveries.
pub fn value_demand_breach(
    demand: &PathBundle,
    params: &InventoryParams,
    discount: &DiscountConfig,
    mode: BreachMode,
    direction: BreachDirection,
) -> Result<ValuationResult> {
    params.validate()?;
    discount.validate()?;
    let demand_var = demand.nth_of_kind(VariableKind::Demand, 0)?;
    let grid = demand.grid();
    let (payoff_down, payoff_up) = match direction {
        BreachDirection::Down => (params.payoff_down, params.payoff_up),
        BreachDirection::Up => (params.payoff_up, params.payoff_down),
    };
    let contract = TermLoanContract {
        quantities: vec![params.threshold],
        horizon: grid.horizon(),
        payoff_down: vec![payoff_down],
        payoff_up: vec![payoff_up],
        forward_start: 0,
        exclusive_fee: 0.0,
        spread: 0.0,
    };

    let n_points = demand.n_points();
    let mut values = Vec::with_capacity(demand.n_paths() * n_points);
    for path in 0..demand.n_paths() {
        let series = demand.series(path, demand_var);
        match direction {
            BreachDirection::Down => values.extend_from_slice(series),
            BreachDirection::Up => {
                values.extend(series.iter().map(|&d| 2.0 * params.threshold - d));
            }
        }
    }
    let relabeled = PathBundle::from_values(
        *grid,
        vec![VariableKind::Availability],
        demand.n_paths(),
        demand.seed(),
        values,
    )?;
    crate::payoff::value_structure(
        mode.structure(),
        &relabeled,
        None,
        &contract,
        discount,
        &EvalOptions::default(),
    )
}
