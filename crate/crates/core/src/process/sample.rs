//! Randomized parameter draws for synthetic securities.
//!
//! Drift, volatility and start level of every simulated variable are
//! themselves drawn from per-kind uniform ranges, so a whole book of
//! hypothetical securities can be generated from one seed.

use crate::error::{Error, Result};
use crate::process::{CorrelatedSystem, GbmSpec, LocateSpec, VariableKind};
use crate::rng::stream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Closed interval for a uniform draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let r = Self { lo, hi };
        r.validate("range")?;
        Ok(r)
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(Error::invalid(format!(
                "{what} must satisfy lo <= hi with finite bounds, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

/// Uniform ranges for one GBM variable kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmRange {
    pub drift: Range,
    pub vol: Range,
    pub start: Range,
}

impl GbmRange {
    pub fn validate(&self, kind: VariableKind) -> Result<()> {
        self.drift.validate(&format!("{kind} drift range"))?;
        self.vol.validate(&format!("{kind} vol range"))?;
        self.start.validate(&format!("{kind} start range"))?;
        if self.vol.lo < 0.0 {
            return Err(Error::invalid(format!("{kind} vol range must be >= 0")));
        }
        if self.start.lo <= 0.0 {
            return Err(Error::invalid(format!("{kind} start range must be > 0")));
        }
        Ok(())
    }
}

/// Per-kind parameter ranges. Quantity processes (borrow book, inventory,
/// supply) are typically given wider vol ranges than prices and rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRanges {
    /// One entry per simulated GBM kind, in the variable order securities
    /// will carry.
    pub gbm: Vec<(VariableKind, GbmRange)>,
    /// Locate |N(mean, sd^2)| parameter ranges; omit to skip locates.
    pub locate_mean: Option<Range>,
    pub locate_sd: Option<Range>,
}

impl ParameterRanges {
    pub fn validate(&self) -> Result<()> {
        if self.gbm.is_empty() && self.locate_mean.is_none() {
            return Err(Error::invalid("parameter ranges are empty"));
        }
        for (kind, range) in &self.gbm {
            if !kind.is_gbm() {
                return Err(Error::invalid(format!("{kind} cannot be sampled as a GBM")));
            }
            range.validate(*kind)?;
        }
        if self.locate_mean.is_some() != self.locate_sd.is_some() {
            return Err(Error::invalid(
                "locate_mean and locate_sd must be given together",
            ));
        }
        if let (Some(mean), Some(sd)) = (&self.locate_mean, &self.locate_sd) {
            mean.validate("locate mean range")?;
            sd.validate("locate sd range")?;
            if sd.lo < 0.0 {
                return Err(Error::invalid("locate sd range must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Drawn parameters for one hypothetical security.
#[derive(Debug, Clone, PartialEq)]
pub struct SecuritySample {
    pub system: CorrelatedSystem,
    pub locate: Option<LocateSpec>,
}

/// Draw `n_securities` independent parameter sets. The same (ranges, seed)
/// always produces the same table; security `i` consumes stream `i` of the
/// seed, so the table is stable under any evaluation order.
pub fn sample_parameter_seed(
    ranges: &ParameterRanges,
    n_securities: usize,
    seed: u64,
) -> Result<Vec<SecuritySample>> {
    ranges.validate()?;
    if n_securities == 0 {
        return Err(Error::invalid("n_securities must be at least 1"));
    }
    let mut out = Vec::with_capacity(n_securities);
    for i in 0..n_securities {
        let mut rng = stream_rng(seed, i as u64);
        let mut specs = Vec::with_capacity(ranges.gbm.len());
        for (kind, range) in &ranges.gbm {
            let drift = range.drift.draw(&mut rng);
            let vol = range.vol.draw(&mut rng);
            let start = range.start.draw(&mut rng);
            specs.push(GbmSpec::new(*kind, start, drift, vol)?);
        }
        let locate = match (&ranges.locate_mean, &ranges.locate_sd) {
            (Some(mean), Some(sd)) => Some(LocateSpec::abs_normal(
                mean.draw(&mut rng),
                sd.draw(&mut rng),
            )?),
            _ => None,
        };
        let system = CorrelatedSystem::independent(specs)?;
        out.push(SecuritySample { system, locate });
    }
    Ok(out)
}
