//! Term-loan payoff structures and their Monte Carlo evaluation.
//!
//! All evaluators are pure functions of (paths, contract, discount) and sum
//! per-path payoffs over securities. Estimates use a fixed-order pairwise
//! reduction, so a valuation is bit-stable across worker counts.

mod indicator;
mod kernels;
mod value;

pub use indicator::{compute_state_indicator, count_transitions, StateIndicator, TransitionCounts};
pub use value::{
    annualized_rate, desk_profit, per_path_payoffs, value_borrow_rate, value_constant_breach,
    value_counter, value_counter_with_weighting, value_proportional_time,
    value_stochastic_demand, value_stock_holding, value_structure, vanilla_put_on_breach,
    EvalOptions,
};

pub(crate) use value::EvalPlan;

use crate::error::{Error, Result};
use crate::process::TimeGrid;
use serde::{Deserialize, Serialize};

/// Payoff structure tags, matching the result CSV vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Constant,
    ProportionalTime,
    ConstantCounter,
    ProportionalCounter,
    StockHolding,
    BorrowRate,
    StochasticDemand,
    DeskProfit,
    /// Inventory profit-and-loss; shares the result format.
    RetailerPnl,
}

impl StructureKind {
    /// The eight term-loan structures (excludes the inventory P&L tag).
    pub const TERM_LOAN: [StructureKind; 8] = [
        StructureKind::Constant,
        StructureKind::ProportionalTime,
        StructureKind::ConstantCounter,
        StructureKind::ProportionalCounter,
        StructureKind::StockHolding,
        StructureKind::BorrowRate,
        StructureKind::StochasticDemand,
        StructureKind::DeskProfit,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            StructureKind::Constant => "constant",
            StructureKind::ProportionalTime => "proportional_time",
            StructureKind::ConstantCounter => "constant_counter",
            StructureKind::ProportionalCounter => "proportional_counter",
            StructureKind::StockHolding => "stock_holding",
            StructureKind::BorrowRate => "borrow_rate",
            StructureKind::StochasticDemand => "stochastic_demand",
            StructureKind::DeskProfit => "desk_profit",
            StructureKind::RetailerPnl => "retailer_pnl",
        }
    }
}

impl std::fmt::Display for StructureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StructureKind::TERM_LOAN
            .iter()
            .chain([StructureKind::RetailerPnl].iter())
            .copied()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown structure `{s}`")))
    }
}

/// How cashflows are discounted back to inception.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountMode {
    /// Annually compounded factor beta = 1/(1+r): a cashflow at time t years
    /// is worth beta^t today.
    DiscreteBeta,
    /// Continuous compounding exp(-r t).
    ContinuousExp,
    /// No discounting; reproduces raw discrete payoff sums.
    None,
}

/// Discount rate and compounding convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountConfig {
    /// Risk-free rate per year.
    pub rate: f64,
    pub mode: DiscountMode,
}

impl DiscountConfig {
    pub fn none() -> Self {
        Self {
            rate: 0.0,
            mode: DiscountMode::None,
        }
    }

    pub fn discrete(rate: f64) -> Result<Self> {
        let c = Self {
            rate,
            mode: DiscountMode::DiscreteBeta,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rate.is_finite() {
            return Err(Error::invalid("discount rate must be finite"));
        }
        if self.mode == DiscountMode::DiscreteBeta && self.rate <= -1.0 {
            return Err(Error::invalid(format!(
                "discrete discounting needs rate > -1 so beta = 1/(1+r) is positive, got {}",
                self.rate
            )));
        }
        Ok(())
    }

    /// Discount factor for a cashflow at `t` years.
    pub fn factor(&self, t: f64) -> f64 {
        match self.mode {
            DiscountMode::DiscreteBeta => (1.0 + self.rate).powf(-t),
            DiscountMode::ContinuousExp => (-self.rate * t).exp(),
            DiscountMode::None => 1.0,
        }
    }

    /// Factors for every grid point, so hot loops index instead of exp-ing.
    pub(crate) fn table(&self, grid: &TimeGrid) -> Vec<f64> {
        (0..grid.n_points()).map(|k| self.factor(grid.time(k))).collect()
    }
}

/// Which borrow-rate payoff formulation to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorrowRateForm {
    /// The prevailing rate applies to the whole quantity sourced each period:
    /// accrues S Q (H min A) tau per step.
    WholeQuantity,
    /// Borrow quantity marked in and out like a stock position, with the
    /// final-period shares assumed re-lent at the prevailing rate.
    Incremental,
}

/// Counter payoff flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterMode {
    /// Fixed amount per crossing.
    Constant,
    /// Crossing amounts scaled by time left on the deal.
    Proportional,
}

/// Weighting convention for the proportional counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterWeighting {
    /// Transition at step t+1 weighted by (T-t-1)/T, initial breach by 1.
    Normalized,
    /// Unscaled variant: weights (T-t-1) and initial breach K*T.
    Unscaled,
}

/// A guaranteed-quantity loan over `n` securities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermLoanContract {
    /// Guaranteed quantity per security, H_i (shares).
    pub quantities: Vec<f64>,
    /// Loan horizon T in years.
    pub horizon: f64,
    /// Payoff on a downward breach per security, K_i.
    pub payoff_down: Vec<f64>,
    /// Reverse cashflow when availability recovers, K~_i.
    pub payoff_up: Vec<f64>,
    /// First grid step of a forward-starting loan (0 = spot start).
    pub forward_start: usize,
    /// Per-step fee for the exclusive holdings.
    pub exclusive_fee: f64,
    /// Spread factor c: the desk lends at R = (1+c) Q.
    pub spread: f64,
}

impl TermLoanContract {
    /// Single-security contract with zero fee and spread.
    pub fn single(quantity: f64, horizon: f64, payoff_down: f64, payoff_up: f64) -> Result<Self> {
        let c = Self {
            quantities: vec![quantity],
            horizon,
            payoff_down: vec![payoff_down],
            payoff_up: vec![payoff_up],
            forward_start: 0,
            exclusive_fee: 0.0,
            spread: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.quantities.is_empty() {
            return Err(Error::invalid("contract needs at least one security"));
        }
        if self.payoff_down.len() != self.quantities.len()
            || self.payoff_up.len() != self.quantities.len()
        {
            return Err(Error::invalid(
                "payoff_down and payoff_up must have one entry per security",
            ));
        }
        for &h in &self.quantities {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::invalid(format!("quantity must be > 0, got {h}")));
            }
        }
        for &k in self.payoff_down.iter().chain(self.payoff_up.iter()) {
            if !k.is_finite() || k < 0.0 {
                return Err(Error::invalid(format!("payoffs must be >= 0, got {k}")));
            }
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(Error::invalid(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        if !self.exclusive_fee.is_finite() || self.exclusive_fee < 0.0 {
            return Err(Error::invalid("exclusive fee must be >= 0"));
        }
        if !self.spread.is_finite() || self.spread < 0.0 {
            return Err(Error::invalid(format!(
                "spread must be >= 0, got {}",
                self.spread
            )));
        }
        Ok(())
    }

    pub fn n_securities(&self) -> usize {
        self.quantities.len()
    }

    /// R = (1+c) Q multiplier.
    pub fn loan_rate_factor(&self) -> f64 {
        1.0 + self.spread
    }

    /// Index of the last loan step on `grid` (the contract's T in steps).
    ///
    /// The grid step must divide the horizon; `extra_points` is 1 for
    /// structures that read prices one step past expiry, 0 otherwise.
    pub fn last_step(&self, grid: &TimeGrid, extra_points: usize) -> Result<usize> {
        let tau = grid.step();
        let steps = self.horizon / tau;
        let rounded = steps.round();
        if (steps - rounded).abs() > 1e-6 {
            return Err(Error::GridMismatch(format!(
                "horizon {} is not a whole number of grid steps (tau = {tau})",
                self.horizon
            )));
        }
        let t_last = rounded as usize;
        if t_last < 1 {
            return Err(Error::GridMismatch(
                "contract spans less than one grid step".into(),
            ));
        }
        if t_last + extra_points > grid.n_steps() {
            return Err(Error::GridMismatch(format!(
                "grid has {} steps but the contract needs {} (horizon {} plus {} terminal point(s))",
                grid.n_steps(),
                t_last + extra_points,
                self.horizon,
                extra_points
            )));
        }
        if self.forward_start > t_last {
            return Err(Error::GridMismatch(format!(
                "forward start step {} is past the contract's last step {t_last}",
                self.forward_start
            )));
        }
        Ok(t_last)
    }
}

/// Monte Carlo estimate of one structure's value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationResult {
    pub structure: StructureKind,
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    /// ln(value / (H S0)) / T when a notional is defined and the value is
    /// positive; absent otherwise.
    pub annualized_rate: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_tags_round_trip() {
        for kind in StructureKind::TERM_LOAN {
            let parsed: StructureKind = kind.tag().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("no_such_structure".parse::<StructureKind>().is_err());
    }

    #[test]
    fn discount_factor_conventions() {
        let beta = DiscountConfig::discrete(0.05).unwrap();
        assert!((beta.factor(1.0) - 1.0 / 1.05).abs() < 1e-15);
        assert_eq!(beta.factor(0.0), 1.0);
        let none = DiscountConfig::none();
        assert_eq!(none.factor(3.0), 1.0);
        assert!(DiscountConfig::discrete(-1.0).is_err());
    }

    #[test]
    fn contract_grid_alignment() {
        let contract = TermLoanContract::single(80.0, 1.0, 1.0, 0.5).unwrap();
        let grid = TimeGrid::for_contract(1.0, 252).unwrap();
        assert_eq!(contract.last_step(&grid, 1).unwrap(), 252);
        let short = TimeGrid::new(1.0, 252).unwrap();
        assert_eq!(contract.last_step(&short, 0).unwrap(), 252);
        assert!(contract.last_step(&short, 1).is_err());
    }

    #[test]
    fn contract_rejects_bad_parameters() {
        assert!(TermLoanContract::single(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(TermLoanContract::single(10.0, 0.0, 1.0, 0.0).is_err());
        assert!(TermLoanContract::single(10.0, 1.0, -1.0, 0.0).is_err());
    }
}
