//! Monte Carlo evaluation of the payoff structures.

use crate::error::{Error, Result};
use crate::payoff::kernels::{self, EvalSeries};
use crate::payoff::{
    BorrowRateForm, CounterMode, CounterWeighting, DiscountConfig, StructureKind,
    TermLoanContract, ValuationResult,
};
use crate::process::{PathBundle, VariableKind};
use crate::stats::mean_std_error;
use rayon::prelude::*;

/// Evaluation knobs that are not part of the contract itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub borrow_form: BorrowRateForm,
    pub counter_weighting: CounterWeighting,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            borrow_form: BorrowRateForm::Incremental,
            counter_weighting: CounterWeighting::Normalized,
        }
    }
}

/// Continuously compounded annualized rate ln(value / (H * S0)) / T.
///
/// Undefined (None) when the value is not strictly positive.
pub fn annualized_rate(value: f64, quantity: f64, start_price: f64, horizon: f64) -> Option<f64> {
    if value > 0.0 && quantity > 0.0 && start_price > 0.0 && horizon > 0.0 {
        Some((value / (quantity * start_price)).ln() / horizon)
    } else {
        None
    }
}

/// Resolved evaluation context for one structure on one bundle.
pub(crate) struct EvalPlan<'a> {
    pub structure: StructureKind,
    pub contract: &'a TermLoanContract,
    pub series: EvalSeries,
    /// Demand series indices, resolved in the demand bundle.
    pub demand_vars: Vec<usize>,
    pub t_last: usize,
    pub tau: f64,
    pub disc: Vec<f64>,
    pub options: EvalOptions,
}

fn resolve(bundle: &PathBundle, kind: VariableKind, n: usize) -> Result<Vec<usize>> {
    (0..n).map(|sec| bundle.nth_of_kind(kind, sec)).collect()
}

impl<'a> EvalPlan<'a> {
    pub(crate) fn new(
        structure: StructureKind,
        paths: &PathBundle,
        demand: Option<&PathBundle>,
        contract: &'a TermLoanContract,
        discount: &DiscountConfig,
        options: EvalOptions,
    ) -> Result<Self> {
        contract.validate()?;
        discount.validate()?;
        let n = contract.n_securities();
        let needs_terminal = matches!(
            structure,
            StructureKind::StockHolding
                | StructureKind::BorrowRate
                | StructureKind::StochasticDemand
                | StructureKind::DeskProfit
        );
        let t_last = contract.last_step(paths.grid(), usize::from(needs_terminal))?;
        let mut series = EvalSeries::empty();
        match structure {
            StructureKind::Constant | StructureKind::ProportionalTime => {
                series.availability = resolve(paths, VariableKind::Availability, n)?;
            }
            StructureKind::ConstantCounter | StructureKind::ProportionalCounter => {
                series.availability = resolve(paths, VariableKind::Availability, n)?;
            }
            StructureKind::StockHolding => {
                series.availability = resolve(paths, VariableKind::Availability, n)?;
                series.price = resolve(paths, VariableKind::Price, n)?;
            }
            StructureKind::BorrowRate => {
                series.availability = resolve(paths, VariableKind::Availability, n)?;
                series.price = resolve(paths, VariableKind::Price, n)?;
                series.rate = resolve(paths, VariableKind::BorrowRate, n)?;
            }
            StructureKind::StochasticDemand => {
                series.availability = resolve(paths, VariableKind::Availability, n)?;
                series.price = resolve(paths, VariableKind::Price, n)?;
                series.rate = resolve(paths, VariableKind::BorrowRate, n)?;
            }
            StructureKind::DeskProfit => {
                series.loans = resolve(paths, VariableKind::LoanBook, n)?;
                series.borrows = resolve(paths, VariableKind::BorrowBook, n)?;
                series.price = resolve(paths, VariableKind::Price, n)?;
                series.rate = resolve(paths, VariableKind::BorrowRate, n)?;
            }
            StructureKind::RetailerPnl => {
                return Err(Error::invalid(
                    "retailer_pnl is evaluated by the inventory module",
                ));
            }
        }
        let mut demand_vars = Vec::new();
        if structure == StructureKind::StochasticDemand {
            let demand_bundle = demand.unwrap_or(paths);
            if demand_bundle.n_paths() != paths.n_paths() {
                return Err(Error::GridMismatch(format!(
                    "demand bundle has {} paths, availability bundle {}",
                    demand_bundle.n_paths(),
                    paths.n_paths()
                )));
            }
            if demand_bundle.grid().n_steps() != paths.grid().n_steps()
                || (demand_bundle.grid().horizon() - paths.grid().horizon()).abs() > 1e-12
            {
                return Err(Error::GridMismatch(
                    "demand and availability bundles use different grids".into(),
                ));
            }
            demand_vars = resolve(demand_bundle, VariableKind::Demand, n)?;
        }
        Ok(Self {
            structure,
            contract,
            series,
            demand_vars,
            t_last,
            tau: paths.grid().step(),
            disc: discount.table(paths.grid()),
            options,
        })
    }

    /// Payoff of one path, summed over securities; optionally books the
    /// per-step cashflows into `ledger` (one slot per grid point).
    // the ledger must be reborrowed per kernel call: it outlives the match
    #[allow(clippy::needless_option_as_deref)]
    pub(crate) fn eval_path(
        &self,
        paths: &PathBundle,
        demand: Option<&PathBundle>,
        path: usize,
        mut ledger: Option<&mut [f64]>,
    ) -> f64 {
        let n = self.contract.n_securities();
        let mut total = 0.0;
        for sec in 0..n {
            let h = self.contract.quantities[sec];
            let value = match self.structure {
                StructureKind::Constant | StructureKind::ProportionalTime => kernels::first_breach(
                    paths.series(path, self.series.availability[sec]),
                    h,
                    self.contract.payoff_down[sec],
                    self.t_last,
                    &self.disc,
                    self.structure == StructureKind::ProportionalTime,
                    ledger.as_deref_mut(),
                ),
                StructureKind::ConstantCounter | StructureKind::ProportionalCounter => {
                    kernels::counter(
                        paths.series(path, self.series.availability[sec]),
                        h,
                        self.contract.payoff_down[sec],
                        self.contract.payoff_up[sec],
                        self.t_last,
                        &self.disc,
                        if self.structure == StructureKind::ConstantCounter {
                            CounterMode::Constant
                        } else {
                            CounterMode::Proportional
                        },
                        self.options.counter_weighting,
                        ledger.as_deref_mut(),
                    )
                }
                StructureKind::StockHolding => kernels::stock_holding(
                    paths.series(path, self.series.availability[sec]),
                    paths.series(path, self.series.price[sec]),
                    h,
                    self.t_last,
                    self.contract.forward_start,
                    &self.disc,
                    ledger.as_deref_mut(),
                ),
                StructureKind::BorrowRate => kernels::borrow_rate(
                    paths.series(path, self.series.availability[sec]),
                    paths.series(path, self.series.price[sec]),
                    paths.series(path, self.series.rate[sec]),
                    h,
                    self.t_last,
                    self.tau,
                    &self.disc,
                    self.options.borrow_form,
                    ledger.as_deref_mut(),
                ),
                StructureKind::StochasticDemand => kernels::stochastic_demand(
                    paths.series(path, self.series.availability[sec]),
                    paths.series(path, self.series.price[sec]),
                    paths.series(path, self.series.rate[sec]),
                    demand.unwrap_or(paths).series(path, self.demand_vars[sec]),
                    self.t_last,
                    &self.disc,
                    ledger.as_deref_mut(),
                ),
                StructureKind::DeskProfit => kernels::desk_profit(
                    paths.series(path, self.series.loans[sec]),
                    paths.series(path, self.series.borrows[sec]),
                    paths.series(path, self.series.price[sec]),
                    paths.series(path, self.series.rate[sec]),
                    self.contract.loan_rate_factor(),
                    self.t_last,
                    &self.disc,
                    ledger.as_deref_mut(),
                ),
                StructureKind::RetailerPnl => unreachable!("rejected in EvalPlan::new"),
            };
            total += value;
        }
        if self.structure == StructureKind::DeskProfit {
            total += kernels::fee_leg(
                self.contract.exclusive_fee,
                self.t_last,
                &self.disc,
                ledger.as_deref_mut(),
            );
        }
        total
    }

    /// Notional H * S0 summed over securities, when prices are resolved.
    fn notional(&self, paths: &PathBundle) -> Option<f64> {
        if self.series.price.len() != self.contract.n_securities() {
            return None;
        }
        let mut notional = 0.0;
        for sec in 0..self.contract.n_securities() {
            notional += self.contract.quantities[sec] * paths.series(0, self.series.price[sec])[0];
        }
        Some(notional)
    }
}

/// Per-path payoffs of `structure`, in path order.
pub fn per_path_payoffs(
    structure: StructureKind,
    paths: &PathBundle,
    demand: Option<&PathBundle>,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
    options: &EvalOptions,
) -> Result<Vec<f64>> {
    let plan = EvalPlan::new(structure, paths, demand, contract, discount, *options)?;
    Ok((0..paths.n_paths())
        .into_par_iter()
        .map(|path| plan.eval_path(paths, demand, path, None))
        .collect())
}

/// Value one structure on a bundle.
pub fn value_structure(
    structure: StructureKind,
    paths: &PathBundle,
    demand: Option<&PathBundle>,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
    options: &EvalOptions,
) -> Result<ValuationResult> {
    let plan = EvalPlan::new(structure, paths, demand, contract, discount, *options)?;
    let payoffs: Vec<f64> = (0..paths.n_paths())
        .into_par_iter()
        .map(|path| plan.eval_path(paths, demand, path, None))
        .collect();
    let stat = mean_std_error(&payoffs);
    let rate = plan
        .notional(paths)
        .and_then(|notional| annualized_rate(stat.mean, 1.0, notional, contract.horizon));
    Ok(ValuationResult {
        structure,
        estimate: stat.mean,
        std_error: stat.std_error,
        n_paths: paths.n_paths(),
        annualized_rate: rate,
    })
}

/// Single payoff K at the first availability breach.
pub fn value_constant_breach(
    paths: &PathBundle,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
) -> Result<ValuationResult> {
    value_structure(
        StructureKind::Constant,
        paths,
        None,
        contract,
        discount,
        &EvalOptions::default(),
    )
}

/// Single payoff K (T - t)/T at the first availability breach.
pub fn value_proportional_time(
    paths: &PathBundle,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
) -> Result<ValuationResult> {
    value_structure(
        StructureKind::ProportionalTime,
        paths,
        None,
        contract,
        discount,
        &EvalOptions::default(),
    )
}

/// Per-crossing counter payoff with the stated (normalized) weights.
pub fn value_counter(
    paths: &PathBundle,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
    mode: CounterMode,
) -> Result<ValuationResult> {
    value_counter_with_weighting(paths, contract, discount, mode, CounterWeighting::Normalized)
}

/// Per-crossing counter payoff with an explicit weighting convention.
pub fn value_counter_with_weighting(
    paths: &PathBundle,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
    mode: CounterMode,
    weighting: CounterWeighting,
) -> Result<ValuationResult> {
    let structure = match mode {
        CounterMode::Constant => StructureKind::ConstantCounter,
        CounterMode::Proportional => StructureKind::ProportionalCounter,
    };
    value_structure(
        structure,
        paths,
        None,
        contract,
        discount,
        &EvalOptions {
            counter_weighting: weighting,
            ..EvalOptions::default()
        },
    )
}

/// Cost of carrying a hedge equal to the availability shortfall.
pub fn value_stock_holding(
    paths: &PathBundle,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
) -> Result<ValuationResult> {
    value_structure(
        StructureKind::StockHolding,
        paths,
        None,
        contract,
        discount,
        &EvalOptions::default(),
    )
}

/// Stock-holding cost plus the borrow cost of the sourced quantity.
pub fn value_borrow_rate(
    paths: &PathBundle,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
    form: BorrowRateForm,
) -> Result<ValuationResult> {
    value_structure(
        StructureKind::BorrowRate,
        paths,
        None,
        contract,
        discount,
        &EvalOptions {
            borrow_form: form,
            ..EvalOptions::default()
        },
    )
}

/// Borrow-rate payoff with a stochastic utilization in place of the fixed
/// quantity. `demand_paths` may be the same bundle when it carries a demand
/// series.
pub fn value_stochastic_demand(
    paths: &PathBundle,
    demand_paths: &PathBundle,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
) -> Result<ValuationResult> {
    value_structure(
        StructureKind::StochasticDemand,
        paths,
        Some(demand_paths),
        contract,
        discount,
        &EvalOptions::default(),
    )
}

/// Benchmark revenue of the whole loan book.
pub fn desk_profit(
    paths: &PathBundle,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
) -> Result<ValuationResult> {
    value_structure(
        StructureKind::DeskProfit,
        paths,
        None,
        contract,
        discount,
        &EvalOptions::default(),
    )
}

/// Per-path value of a vanilla American put benchmark on the same paths.
///
/// The put is struck at H + K so that exercising at the binary's breach time
/// pays at least the binary's cash amount; the exercise policy is "exercise
/// at the first breach, else at expiry if in the money". Any policy bounds
/// the American value from below, so the binary structure priced on shared
/// paths must come out cheaper.
pub fn vanilla_put_on_breach(
    paths: &PathBundle,
    contract: &TermLoanContract,
    discount: &DiscountConfig,
) -> Result<Vec<f64>> {
    contract.validate()?;
    discount.validate()?;
    let t_last = contract.last_step(paths.grid(), 0)?;
    let n = contract.n_securities();
    let avail = resolve(paths, VariableKind::Availability, n)?;
    let disc = discount.table(paths.grid());
    let payoffs: Vec<f64> = (0..paths.n_paths())
        .into_par_iter()
        .map(|path| {
            let mut total = 0.0;
            for (sec, &avail_var) in avail.iter().enumerate().take(n) {
                let h = contract.quantities[sec];
                let strike = h + contract.payoff_down[sec];
                let series = paths.series(path, avail_var);
                let mut exercised = false;
                for t in 0..=t_last {
                    if series[t] <= h {
                        total += (strike - series[t]).max(0.0) * disc[t];
                        exercised = true;
                        break;
                    }
                }
                if !exercised {
                    total += (strike - series[t_last]).max(0.0) * disc[t_last];
                }
            }
            total
        })
        .collect();
    Ok(payoffs)
}
