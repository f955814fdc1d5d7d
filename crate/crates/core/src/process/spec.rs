//! Process and grid definitions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Trading-day convention used to annualize daily series.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// What a simulated series represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    /// Security price S.
    Price,
    /// Total lendable supply A.
    Availability,
    /// Borrow rate Q (cost of sourcing shares, per year).
    BorrowRate,
    /// Internal inventory I.
    Inventory,
    /// Supply sourceable from other beneficial owners O.
    OtherSupply,
    /// Existing external borrows B.
    BorrowBook,
    /// Exclusive-arrangement holdings, drawn plus undrawn (E + P).
    ExclusivePool,
    /// Existing loans to external borrowers L.
    LoanBook,
    /// Stochastic loan utilization / demand H(t).
    Demand,
    /// Locate requests D (count-like, not a GBM).
    Locate,
}

impl VariableKind {
    pub fn is_gbm(self) -> bool {
        self != VariableKind::Locate
    }

    pub fn tag(self) -> &'static str {
        match self {
            VariableKind::Price => "price",
            VariableKind::Availability => "availability",
            VariableKind::BorrowRate => "borrow_rate",
            VariableKind::Inventory => "inventory",
            VariableKind::OtherSupply => "other_supply",
            VariableKind::BorrowBook => "borrow_book",
            VariableKind::ExclusivePool => "exclusive_pool",
            VariableKind::LoanBook => "loan_book",
            VariableKind::Demand => "demand",
            VariableKind::Locate => "locate",
        }
    }
}

impl fmt::Display for VariableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for VariableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "price" => VariableKind::Price,
            "availability" => VariableKind::Availability,
            "borrow_rate" => VariableKind::BorrowRate,
            "inventory" => VariableKind::Inventory,
            "other_supply" => VariableKind::OtherSupply,
            "borrow_book" => VariableKind::BorrowBook,
            "exclusive_pool" => VariableKind::ExclusivePool,
            "loan_book" => VariableKind::LoanBook,
            "demand" => VariableKind::Demand,
            "locate" => VariableKind::Locate,
            other => return Err(Error::invalid(format!("unknown variable kind `{other}`"))),
        })
    }
}

/// One geometric Brownian motion: dX/X = drift dt + vol dW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmSpec {
    pub kind: VariableKind,
    /// X(0); must be strictly positive.
    pub start: f64,
    /// Drift per year.
    pub drift: f64,
    /// Volatility per square-root year; must be nonnegative.
    pub vol: f64,
}

impl GbmSpec {
    pub fn new(kind: VariableKind, start: f64, drift: f64, vol: f64) -> Result<Self> {
        let spec = Self {
            kind,
            start,
            drift,
            vol,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kind.is_gbm() {
            return Err(Error::invalid(format!(
                "{} is not a GBM variable; use LocateSpec",
                self.kind
            )));
        }
        if !self.start.is_finite() || self.start <= 0.0 {
            return Err(Error::invalid(format!(
                "{} start must be finite and > 0, got {}",
                self.kind, self.start
            )));
        }
        if !self.drift.is_finite() {
            return Err(Error::invalid(format!("{} drift must be finite", self.kind)));
        }
        if !self.vol.is_finite() || self.vol < 0.0 {
            return Err(Error::invalid(format!(
                "{} vol must be finite and >= 0, got {}",
                self.kind, self.vol
            )));
        }
        Ok(())
    }
}

/// Locate arrival model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum LocateModel {
    /// Poisson counts with the given arrival rate per step.
    Poisson { rate: f64 },
    /// |N(mean, sd^2)| per step; reproduces the skew of the count process.
    AbsNormal { mean: f64, sd: f64 },
}

/// Locate request process (per-step counts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocateSpec {
    pub model: LocateModel,
}

impl LocateSpec {
    pub fn poisson(rate: f64) -> Result<Self> {
        let spec = Self {
            model: LocateModel::Poisson { rate },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn abs_normal(mean: f64, sd: f64) -> Result<Self> {
        let spec = Self {
            model: LocateModel::AbsNormal { mean, sd },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.model {
            LocateModel::Poisson { rate } => {
                if !rate.is_finite() || rate <= 0.0 {
                    return Err(Error::invalid(format!(
                        "locate arrival rate must be > 0, got {rate}"
                    )));
                }
            }
            LocateModel::AbsNormal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::invalid("locate mean must be finite"));
                }
                if !sd.is_finite() || sd < 0.0 {
                    return Err(Error::invalid(format!(
                        "locate sd must be finite and >= 0, got {sd}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Uniform discretization of [0, horizon] into `n_steps` intervals.
///
/// Point k sits at k * step(); a grid therefore stores n_steps + 1 points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::invalid(format!(
                "grid horizon must be finite and > 0, got {horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::invalid("grid must have at least one step"));
        }
        Ok(Self { horizon, n_steps })
    }

    /// Daily grid over `horizon` years at 252 trading days per year.
    pub fn daily(horizon: f64) -> Result<Self> {
        let steps = (horizon * TRADING_DAYS_PER_YEAR).round().max(1.0) as usize;
        // keep the step exactly one trading day
        Self::new(steps as f64 / TRADING_DAYS_PER_YEAR, steps)
    }

    /// Grid covering a contract of `horizon` years in `n_steps` intervals
    /// plus one extra interval past expiry, so terminal-period values at
    /// index n_steps + 1 exist for payoffs that unwind one step after T.
    pub fn for_contract(horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::invalid("contract grid must have at least one step"));
        }
        let tau = horizon / n_steps as f64;
        Self::new(horizon + tau, n_steps + 1)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of stored points, n_steps + 1.
    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    /// Interval length tau = horizon / n_steps.
    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Time of point k.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step()
    }
}

/// A set of GBM specs plus the correlation of their driving Brownian motions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedSystem {
    specs: Vec<GbmSpec>,
    /// Row-major n x n correlation matrix.
    correlation: Vec<f64>,
}

impl CorrelatedSystem {
    /// System with independent drivers (identity correlation).
    pub fn independent(specs: Vec<GbmSpec>) -> Result<Self> {
        let n = specs.len();
        let mut correlation = vec![0.0; n * n];
        for i in 0..n {
            correlation[i * n + i] = 1.0;
        }
        Self::new(specs, correlation)
    }

    /// System with an explicit correlation matrix (row-major, n x n).
    pub fn new(specs: Vec<GbmSpec>, correlation: Vec<f64>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::invalid("system needs at least one process"));
        }
        for spec in &specs {
            spec.validate()?;
        }
        let n = specs.len();
        if correlation.len() != n * n {
            return Err(Error::invalid(format!(
                "correlation must be {n}x{n} to match {n} processes, got {} entries",
                correlation.len()
            )));
        }
        for i in 0..n {
            if (correlation[i * n + i] - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "correlation diagonal entry {i} must be 1, got {}",
                    correlation[i * n + i]
                )));
            }
            for j in 0..n {
                let c = correlation[i * n + j];
                if !c.is_finite() || !(-1.0..=1.0).contains(&c) {
                    return Err(Error::invalid(format!(
                        "correlation[{i}][{j}] must lie in [-1, 1], got {c}"
                    )));
                }
                if (c - correlation[j * n + i]).abs() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "correlation must be symmetric; entries [{i}][{j}] and [{j}][{i}] differ"
                    )));
                }
            }
        }
        let system = Self { specs, correlation };
        // reject non-PSD matrices eagerly, naming the offending minor
        crate::process::lower_triangular_factor(&system.correlation, n)?;
        Ok(system)
    }

    pub fn from_rows(specs: Vec<GbmSpec>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = specs.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "correlation rows must form an {n}x{n} matrix"
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(specs, flat)
    }

    pub fn specs(&self) -> &[GbmSpec] {
        &self.specs
    }

    pub fn n_processes(&self) -> usize {
        self.specs.len()
    }

    pub(crate) fn correlation(&self) -> &[f64] {
        &self.correlation
    }
}
