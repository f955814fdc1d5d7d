//! Per-path payoff kernels.
//!
//! One function per structure, shared by the Monte Carlo evaluators and the
//! historical-path valuation. Every kernel can optionally record the
//! discounted cashflow it books at each step into a ledger, so per-step
//! profit series come from the same arithmetic as the headline value.

#![allow(clippy::too_many_arguments)]

use crate::payoff::indicator::is_up;
use crate::payoff::{BorrowRateForm, CounterMode, CounterWeighting};

/// Add `amount` at `step` when a ledger is attached.
#[inline]
fn book(ledger: &mut Option<&mut [f64]>, step: usize, amount: f64) {
    if let Some(l) = ledger {
        l[step] += amount;
    }
}

/// First-breach payoff: K at the first step where availability drops to the
/// quantity, weighted by time remaining when `proportional`.
pub(crate) fn first_breach(
    avail: &[f64],
    quantity: f64,
    payoff: f64,
    t_last: usize,
    disc: &[f64],
    proportional: bool,
    mut ledger: Option<&mut [f64]>,
) -> f64 {
    for t in 0..=t_last {
        if !is_up(avail[t], quantity) {
            let weight = if proportional {
                (t_last - t) as f64 / t_last as f64
            } else {
                1.0
            };
            let amount = payoff * weight * disc[t];
            book(&mut ledger, t, amount);
            return amount;
        }
    }
    0.0
}

/// Per-crossing payoffs: the floor-function counter expression
///
/// ```text
/// K (1 - Up_0) + K sum_t w(t) floor((1 + Up_t - Up_{t+1})/2)
///             - K~ sum_t w(t) floor((1 - Up_t + Up_{t+1})/2)
/// ```
///
/// with each crossing discounted at the step it is observed (t+1) and the
/// initial-state term at step 0.
pub(crate) fn counter(
    avail: &[f64],
    quantity: f64,
    payoff_down: f64,
    payoff_up: f64,
    t_last: usize,
    disc: &[f64],
    mode: CounterMode,
    weighting: CounterWeighting,
    mut ledger: Option<&mut [f64]>,
) -> f64 {
    let horizon = t_last as f64;
    let initial_weight = match (mode, weighting) {
        (CounterMode::Constant, _) | (CounterMode::Proportional, CounterWeighting::Normalized) => {
            1.0
        }
        (CounterMode::Proportional, CounterWeighting::Unscaled) => horizon,
    };
    let mut total = 0.0;
    if !is_up(avail[0], quantity) {
        let amount = payoff_down * initial_weight * disc[0];
        book(&mut ledger, 0, amount);
        total += amount;
    }
    for t in 0..t_last {
        let u_t = is_up(avail[t], quantity) as i64;
        let u_next = is_up(avail[t + 1], quantity) as i64;
        let down_flag = (1 + u_t - u_next).div_euclid(2) as f64;
        let up_flag = (1 - u_t + u_next).div_euclid(2) as f64;
        if down_flag == 0.0 && up_flag == 0.0 {
            continue;
        }
        let weight = match (mode, weighting) {
            (CounterMode::Constant, _) => 1.0,
            (CounterMode::Proportional, CounterWeighting::Normalized) => {
                (horizon - t as f64 - 1.0) / horizon
            }
            (CounterMode::Proportional, CounterWeighting::Unscaled) => horizon - t as f64 - 1.0,
        };
        let amount = (payoff_down * down_flag - payoff_up * up_flag) * weight * disc[t + 1];
        book(&mut ledger, t + 1, amount);
        total += amount;
    }
    total
}

/// Cost of carrying a hedge position equal to the shortfall:
/// sum over t of (H - A_t)^+ (S_t - S_{t+1}), from the forward-start step.
pub(crate) fn stock_holding(
    avail: &[f64],
    price: &[f64],
    quantity: f64,
    t_last: usize,
    forward_start: usize,
    disc: &[f64],
    mut ledger: Option<&mut [f64]>,
) -> f64 {
    let mut total = 0.0;
    for t in forward_start..=t_last {
        let shortfall = (quantity - avail[t]).max(0.0);
        if shortfall > 0.0 {
            let amount = shortfall * (price[t] - price[t + 1]) * disc[t];
            book(&mut ledger, t, amount);
            total += amount;
        }
    }
    total
}

/// Stock-holding cost plus the borrow cost of the quantity actually sourced
/// from availability.
pub(crate) fn borrow_rate(
    avail: &[f64],
    price: &[f64],
    rate: &[f64],
    quantity: f64,
    t_last: usize,
    tau: f64,
    disc: &[f64],
    form: BorrowRateForm,
    mut ledger: Option<&mut [f64]>,
) -> f64 {
    let mut total = 0.0;
    match form {
        BorrowRateForm::WholeQuantity => {
            for t in 0..=t_last {
                let shortfall = (quantity - avail[t]).max(0.0);
                let mut amount = 0.0;
                if shortfall > 0.0 {
                    amount += shortfall * (price[t] - price[t + 1]);
                }
                // rates are annual; each step accrues over one interval, and
                // the loan spans t_last intervals
                if t < t_last {
                    amount += price[t] * rate[t] * quantity.min(avail[t]) * tau;
                }
                if amount != 0.0 {
                    let amount = amount * disc[t];
                    book(&mut ledger, t, amount);
                    total += amount;
                }
            }
        }
        BorrowRateForm::Incremental => {
            for t in 0..=t_last {
                let shortfall = (quantity - avail[t]).max(0.0);
                let sourced = quantity.min(avail[t]);
                let amount = (shortfall * (price[t] - price[t + 1])
                    + sourced * (price[t] * rate[t] - price[t + 1] * rate[t + 1]))
                    * disc[t];
                if amount != 0.0 {
                    book(&mut ledger, t, amount);
                    total += amount;
                }
            }
        }
    }
    total
}

/// Incremental borrow-rate payoff with the guaranteed quantity replaced by a
/// stochastic utilization series.
pub(crate) fn stochastic_demand(
    avail: &[f64],
    price: &[f64],
    rate: &[f64],
    demand: &[f64],
    t_last: usize,
    disc: &[f64],
    mut ledger: Option<&mut [f64]>,
) -> f64 {
    let mut total = 0.0;
    for t in 0..=t_last {
        let h = demand[t];
        let shortfall = (h - avail[t]).max(0.0);
        let sourced = h.min(avail[t]);
        let amount = (shortfall * (price[t] - price[t + 1])
            + sourced * (price[t] * rate[t] - price[t + 1] * rate[t + 1]))
            * disc[t];
        if amount != 0.0 {
            book(&mut ledger, t, amount);
            total += amount;
        }
    }
    total
}

/// Desk revenue for one security: loans earn the marked value change at the
/// loan rate, the borrow book pays it at the borrow rate, and the
/// final-period books are re-lent at prevailing rates. The exclusive fee is
/// charged once per deal via [`fee_leg`], not per security.
pub(crate) fn desk_profit(
    loans: &[f64],
    borrows: &[f64],
    price: &[f64],
    rate: &[f64],
    loan_rate_factor: f64,
    t_last: usize,
    disc: &[f64],
    mut ledger: Option<&mut [f64]>,
) -> f64 {
    let mut total = 0.0;
    for t in 0..=t_last {
        let r_t = loan_rate_factor * rate[t];
        let r_next = loan_rate_factor * rate[t + 1];
        let amount = (loans[t] * (price[t] * r_t - price[t + 1] * r_next)
            - borrows[t] * (price[t] * rate[t] - price[t + 1] * rate[t + 1]))
            * disc[t];
        if amount != 0.0 {
            book(&mut ledger, t, amount);
            total += amount;
        }
    }
    let unwind = (loans[t_last] * loan_rate_factor * rate[t_last + 1]
        - borrows[t_last] * rate[t_last + 1])
        * price[t_last + 1]
        * disc[t_last + 1];
    if unwind != 0.0 {
        book(&mut ledger, t_last + 1, unwind);
        total += unwind;
    }
    total
}

/// Exclusive-arrangement fee: one charge per loan period, discounted at the
/// start of the period. Undiscounted this is exactly fee * T steps.
pub(crate) fn fee_leg(
    fee_per_step: f64,
    t_last: usize,
    disc: &[f64],
    mut ledger: Option<&mut [f64]>,
) -> f64 {
    if fee_per_step == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for (t, d) in disc.iter().enumerate().take(t_last) {
        let amount = -fee_per_step * d;
        book(&mut ledger, t, amount);
        total += amount;
    }
    total
}

/// Resolved series indices for one structure on one bundle.
#[derive(Debug, Clone)]
pub(crate) struct EvalSeries {
    pub availability: Vec<usize>,
    pub price: Vec<usize>,
    pub rate: Vec<usize>,
    pub loans: Vec<usize>,
    pub borrows: Vec<usize>,
}

impl EvalSeries {
    pub(crate) fn empty() -> Self {
        Self {
            availability: Vec::new(),
            price: Vec::new(),
            rate: Vec::new(),
            loans: Vec::new(),
            borrows: Vec::new(),
        }
    }
}
