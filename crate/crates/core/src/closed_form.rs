//! Analytic benchmark for the simplest loan structure.
//!
//! A term loan that pays a fixed amount the first time availability falls to
//! the guaranteed quantity is a cash-or-nothing American binary put on the
//! availability process, and that option has a closed form built from the
//! Laplace transform of the first-passage time of a Brownian motion with
//! drift. The asset-or-nothing variant is the same value scaled by the
//! strike.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Error function, accurate to well below 1e-12 everywhere.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Sign function with sgn(0) = 0.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Inputs for the cash-or-nothing American binary put.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryPutInputs {
    /// Availability at inception, A0.
    pub start: f64,
    /// Barrier / strike: the guaranteed quantity H.
    pub barrier: f64,
    /// Drift of the availability process, per year.
    pub drift: f64,
    /// Volatility of the availability process, per sqrt-year; must be > 0.
    pub vol: f64,
    /// Cash paid at the first breach, K.
    pub payoff: f64,
    /// Time to expiry in years.
    pub expiry: f64,
}

impl BinaryPutInputs {
    pub fn validate(&self) -> Result<()> {
        if !self.start.is_finite() || self.start <= 0.0 {
            return Err(Error::invalid(format!("start must be > 0, got {}", self.start)));
        }
        if !self.barrier.is_finite() || self.barrier <= 0.0 {
            return Err(Error::invalid(format!(
                "barrier must be > 0, got {}",
                self.barrier
            )));
        }
        if !self.vol.is_finite() || self.vol <= 0.0 {
            return Err(Error::invalid(format!("vol must be > 0, got {}", self.vol)));
        }
        if !self.drift.is_finite() {
            return Err(Error::invalid("drift must be finite"));
        }
        if !self.payoff.is_finite() || self.payoff < 0.0 {
            return Err(Error::invalid(format!(
                "payoff must be >= 0, got {}",
                self.payoff
            )));
        }
        if !self.expiry.is_finite() || self.expiry <= 0.0 {
            return Err(Error::invalid(format!(
                "expiry must be > 0, got {}",
                self.expiry
            )));
        }
        let xi = self.drift / self.vol - self.vol / 2.0;
        // algebraically (drift/vol + vol/2)^2, so only rounding can push it
        // below zero; reject anything beyond rounding noise
        if xi * xi + 2.0 * self.drift < -1e-12 {
            return Err(Error::Domain(format!(
                "xi^2 + 2 mu = {} < 0: the exponent b would be complex",
                xi * xi + 2.0 * self.drift
            )));
        }
        Ok(())
    }
}

/// Closed-form value of the cash-or-nothing American binary put.
///
/// With a = ln(H/A0)/sigma, xi = mu/sigma - sigma/2 and b = sqrt(xi^2 + 2 mu):
///
/// ```text
/// v = K/2 * exp(a(xi - b)) * { 1 + sgn(a) erf((bT - a)/sqrt(2T))
///       + exp(2ab) * [1 - sgn(a) erf((bT + a)/sqrt(2T))] }
/// ```
///
/// The drift mu doubles as the transform rate, so the matching simulation
/// weights a breach at time t by exp(-mu t); no separate discount rate
/// enters. A barrier at or above the start means the option is already
/// exercisable and the full payoff is returned.
pub fn binary_put_closed_form(inputs: &BinaryPutInputs) -> Result<f64> {
    inputs.validate()?;
    if inputs.barrier >= inputs.start {
        // immediate exercise: in the money at inception
        return Ok(inputs.payoff);
    }
    let a = (inputs.barrier / inputs.start).ln() / inputs.vol;
    let xi = inputs.drift / inputs.vol - inputs.vol / 2.0;
    let b = (xi * xi + 2.0 * inputs.drift).max(0.0).sqrt();
    let t = inputs.expiry;
    let s = sgn(a);
    let sqrt2t = (2.0 * t).sqrt();
    let value = 0.5
        * inputs.payoff
        * (a * (xi - b)).exp()
        * (1.0 + s * erf((b * t - a) / sqrt2t)
            + (2.0 * a * b).exp() * (1.0 - s * erf((b * t + a) / sqrt2t)));
    // guard rounding below zero; with drift >= 0 the value also stays <= K,
    // while a negative drift weights early breaches by exp(-mu t) > 1 and
    // the expression can legitimately exceed the cash amount
    Ok(value.max(0.0))
}

/// Axis of a closed-form sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridAxis {
    Start,
    Barrier,
    Drift,
    Vol,
    Payoff,
    Expiry,
}

impl GridAxis {
    pub const ALL: [GridAxis; 6] = [
        GridAxis::Start,
        GridAxis::Barrier,
        GridAxis::Drift,
        GridAxis::Vol,
        GridAxis::Payoff,
        GridAxis::Expiry,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            GridAxis::Start => "start",
            GridAxis::Barrier => "barrier",
            GridAxis::Drift => "drift",
            GridAxis::Vol => "vol",
            GridAxis::Payoff => "payoff",
            GridAxis::Expiry => "expiry",
        }
    }

    fn apply(self, base: &BinaryPutInputs, multiplier: f64) -> BinaryPutInputs {
        let mut inputs = *base;
        match self {
            GridAxis::Start => inputs.start *= multiplier,
            GridAxis::Barrier => inputs.barrier *= multiplier,
            GridAxis::Drift => inputs.drift *= multiplier,
            GridAxis::Vol => inputs.vol *= multiplier,
            GridAxis::Payoff => inputs.payoff *= multiplier,
            GridAxis::Expiry => inputs.expiry *= multiplier,
        }
        inputs
    }
}

impl std::fmt::Display for GridAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// One cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub axis: GridAxis,
    pub multiplier: f64,
    /// None when the perturbed inputs left the formula's domain.
    pub value: Option<f64>,
    pub error: Option<String>,
}

/// Per-axis monotonicity diagnostic over the valid cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMonotonicity {
    pub axis: GridAxis,
    pub nondecreasing: bool,
    pub nonincreasing: bool,
    pub decreases: usize,
    pub increases: usize,
}

/// Sweep table plus monotonicity diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormGrid {
    pub base_value: f64,
    pub cells: Vec<GridCell>,
    pub monotonicity: Vec<AxisMonotonicity>,
}

impl ClosedFormGrid {
    /// Export as `axis,multiplier,value,domain_ok` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "axis,multiplier,value,domain_ok")?;
        for cell in &self.cells {
            match cell.value {
                Some(v) => writeln!(out, "{},{},{},true", cell.axis, cell.multiplier, v)?,
                None => writeln!(out, "{},{},,false", cell.axis, cell.multiplier)?,
            }
        }
        Ok(())
    }
}

/// Value the binary put along per-axis multiplier sweeps. Out-of-domain
/// cells are recorded and the sweep continues.
pub fn closed_form_grid(
    base: &BinaryPutInputs,
    axes: &[GridAxis],
    multipliers: &[f64],
) -> Result<ClosedFormGrid> {
    let base_value = binary_put_closed_form(base)?;
    let mut cells = Vec::with_capacity(axes.len() * multipliers.len());
    let mut monotonicity = Vec::with_capacity(axes.len());
    for &axis in axes {
        let mut axis_values: Vec<f64> = Vec::new();
        for &m in multipliers {
            let inputs = axis.apply(base, m);
            match binary_put_closed_form(&inputs) {
                Ok(v) => {
                    axis_values.push(v);
                    cells.push(GridCell {
                        axis,
                        multiplier: m,
                        value: Some(v),
                        error: None,
                    });
                }
                Err(e) => cells.push(GridCell {
                    axis,
                    multiplier: m,
                    value: None,
                    error: Some(e.to_string()),
                }),
            }
        }
        let mut decreases = 0;
        let mut increases = 0;
        for pair in axis_values.windows(2) {
            if pair[1] < pair[0] {
                decreases += 1;
            }
            if pair[1] > pair[0] {
                increases += 1;
            }
        }
        monotonicity.push(AxisMonotonicity {
            axis,
            nondecreasing: decreases == 0,
            nonincreasing: increases == 0,
            decreases,
            increases,
        });
    }
    Ok(ClosedFormGrid {
        base_value,
        cells,
        monotonicity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Series / continued-fraction evaluation of erf, independent of the
    /// implementation route. Maclaurin series below 2, Lentz continued
    /// fraction for the complement above.
    fn erf_oracle(x: f64) -> f64 {
        if x < 0.0 {
            return -erf_oracle(-x);
        }
        if x == 0.0 {
            return 0.0;
        }
        if x < 2.0 {
            // erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))
            let mut term = x;
            let mut sum = x;
            let x2 = x * x;
            for n in 1..200 {
                term *= -x2 / n as f64;
                let add = term / (2 * n + 1) as f64;
                sum += add;
                if add.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            sum * 2.0 / std::f64::consts::PI.sqrt()
        } else {
            // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2 / (x + 2/2 / (x + ...)))
            let mut f = x;
            let tiny = 1e-300;
            let mut c = f;
            let mut d = 0.0;
            for n in 1..400 {
                let a_n = n as f64 / 2.0;
                d = x + a_n * d;
                if d.abs() < tiny {
                    d = tiny;
                }
                c = x + a_n / c;
                if c.abs() < tiny {
                    c = tiny;
                }
                d = 1.0 / d;
                let delta = c * d;
                f *= delta;
                if (delta - 1.0).abs() < 1e-17 {
                    break;
                }
            }
            let erfc = (-x * x).exp() / std::f64::consts::PI.sqrt() / f;
            1.0 - erfc
        }
    }

    #[test]
    fn erf_at_zero_and_in_the_tail() {
        assert_eq!(erf(0.0), 0.0);
        assert!(erf(6.0) > 1.0 - 1e-15);
        assert_eq!(erf(-1.25), -erf(1.25));
    }

    #[test]
    fn erf_matches_independent_series_oracle() {
        // canonical point first
        assert!((erf(1.0) - 0.8427007929497149).abs() < 1e-14);
        let mut x = -5.9f64;
        while x < 6.0 {
            let got = erf(x);
            let want = erf_oracle(x);
            assert!(
                (got - want).abs() <= 1e-12,
                "erf({x}) = {got}, oracle {want}"
            );
            x += 0.137;
        }
    }

    fn base() -> BinaryPutInputs {
        BinaryPutInputs {
            start: 100.0,
            barrier: 80.0,
            drift: 0.0,
            vol: 0.5,
            payoff: 1.0,
            expiry: 1.0,
        }
    }

    #[test]
    fn barrier_at_start_pays_in_full() {
        let mut inputs = base();
        inputs.barrier = 100.0;
        assert_eq!(binary_put_closed_form(&inputs).unwrap(), 1.0);
        inputs.barrier = 120.0;
        assert_eq!(binary_put_closed_form(&inputs).unwrap(), 1.0);
    }

    #[test]
    fn vanishing_expiry_kills_the_value() {
        let mut inputs = base();
        inputs.expiry = 1e-9;
        let v = binary_put_closed_form(&inputs).unwrap();
        assert!(v < 1e-12, "value {v} should vanish as T -> 0");
    }

    #[test]
    fn zero_drift_value_equals_first_passage_probability() {
        // with mu = 0 the transform weight drops out and the value is the
        // probability that a drifted Brownian motion hits the log-barrier
        let inputs = base();
        let v = binary_put_closed_form(&inputs).unwrap();
        let a = (inputs.barrier / inputs.start).ln() / inputs.vol;
        let xi = -inputs.vol / 2.0;
        let t = inputs.expiry;
        let phi = |z: f64| 0.5 * (1.0 + erf(z / 2.0f64.sqrt()));
        let p = phi((a - xi * t) / t.sqrt()) + (2.0 * xi * a).exp() * phi((a + xi * t) / t.sqrt());
        assert!(
            (v - p).abs() < 1e-12,
            "closed form {v} vs reflection formula {p}"
        );
    }

    #[test]
    fn exponent_b_is_real_across_the_whole_parameter_space() {
        // xi^2 + 2 mu expands to (mu/sigma + sigma/2)^2, so b is real for
        // every finite drift; the domain rejection only guards rounding
        for &vol in &[0.1, 0.5, 1.0, 2.5] {
            for &drift in &[-3.0f64, -0.5, -0.125, 0.0, 0.2, 1.0] {
                let xi = drift / vol - vol / 2.0;
                let square = drift / vol + vol / 2.0;
                assert!(
                    (xi * xi + 2.0 * drift - square * square).abs() < 1e-9,
                    "identity failed at vol={vol}, drift={drift}"
                );
                let inputs = BinaryPutInputs {
                    drift,
                    vol,
                    ..base()
                };
                let v = binary_put_closed_form(&inputs).unwrap();
                assert!(v.is_finite() && v >= 0.0);
            }
        }
        // b = 0 edge: drift = -vol^2/2 makes the square vanish
        let inputs = BinaryPutInputs {
            drift: -0.125,
            vol: 0.5,
            ..base()
        };
        let v = binary_put_closed_form(&inputs).unwrap();
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn nonnegative_drift_keeps_value_within_the_cash_amount() {
        for &drift in &[0.0, 0.05, 0.2, 1.0] {
            for &vol in &[0.1, 0.5, 1.5] {
                for &barrier in &[20.0, 60.0, 95.0] {
                    let inputs = BinaryPutInputs {
                        drift,
                        vol,
                        barrier,
                        ..base()
                    };
                    let v = binary_put_closed_form(&inputs).unwrap();
                    assert!(
                        (0.0..=1.0 + 1e-12).contains(&v),
                        "value {v} outside [0, K] at drift={drift}, vol={vol}, barrier={barrier}"
                    );
                }
            }
        }
    }

    #[test]
    fn value_is_monotone_in_vol_and_expiry() {
        let grid = closed_form_grid(
            &base(),
            &[GridAxis::Vol, GridAxis::Expiry],
            &[0.5, 0.7, 0.9, 1.1, 1.3, 1.5],
        )
        .unwrap();
        for m in &grid.monotonicity {
            assert!(m.nondecreasing, "{} axis not nondecreasing: {m:?}", m.axis);
        }
    }

    #[test]
    fn closer_barrier_raises_the_value() {
        let mut last = 0.0;
        for barrier in [60.0, 70.0, 80.0, 90.0, 99.0] {
            let mut inputs = base();
            inputs.barrier = barrier;
            let v = binary_put_closed_form(&inputs).unwrap();
            assert!(v > last, "value {v} at barrier {barrier} not above {last}");
            last = v;
        }
    }

    #[test]
    fn monotonicity_holds_on_randomized_parameter_sweeps() {
        // cheap linear-congruential draws are plenty for sweep bases
        let mut state = 0x2545F491u64;
        let mut uniform = |lo: f64, hi: f64| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            lo + (hi - lo) * ((state >> 11) as f64 / (1u64 << 53) as f64)
        };
        for _ in 0..50 {
            let base = BinaryPutInputs {
                start: 100.0,
                barrier: uniform(50.0, 95.0),
                drift: uniform(0.0, 0.15),
                vol: uniform(0.2, 0.8),
                payoff: 1.0,
                expiry: uniform(0.3, 2.0),
            };
            let multipliers = [0.6, 0.8, 1.0, 1.2, 1.4];
            let grid =
                closed_form_grid(&base, &[GridAxis::Vol, GridAxis::Expiry], &multipliers).unwrap();
            for m in &grid.monotonicity {
                assert!(m.nondecreasing, "{:?} at base {base:?}", m);
            }
            // barrier closer to the start raises the value
            let barrier_sweep =
                closed_form_grid(&base, &[GridAxis::Barrier], &multipliers).unwrap();
            let values: Vec<f64> = barrier_sweep.cells.iter().filter_map(|c| c.value).collect();
            for pair in values.windows(2) {
                assert!(pair[1] >= pair[0], "barrier sweep fell at base {base:?}");
            }
        }
    }

    #[test]
    fn unit_multipliers_reproduce_the_base_value() {
        let grid = closed_form_grid(&base(), &GridAxis::ALL, &[1.0]).unwrap();
        for cell in &grid.cells {
            assert_eq!(cell.value, Some(grid.base_value));
        }
    }

    #[test]
    fn out_of_domain_cells_are_recorded_not_fatal() {
        // a zero multiplier on vol leaves the formula's domain entirely
        let grid = closed_form_grid(&base(), &[GridAxis::Vol], &[0.0, 1.0, 1.5]).unwrap();
        let bad: Vec<&GridCell> = grid.cells.iter().filter(|c| c.value.is_none()).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].multiplier, 0.0);
        assert!(bad[0].error.is_some());
        assert_eq!(grid.cells.iter().filter(|c| c.value.is_some()).count(), 2);
    }

    #[test]
    fn csv_layout_is_stable() {
        let grid = closed_form_grid(&base(), &[GridAxis::Vol], &[0.9, 1.1]).unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("axis,multiplier,value,domain_ok\nvol,0.9,"));
    }
}
