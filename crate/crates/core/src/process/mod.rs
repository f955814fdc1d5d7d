//! Stochastic process models driving the loan book.
//!
//! Share quantities (availability, inventory, borrow/loan books), prices and
//! borrow rates are all strictly positive and are simulated as correlated
//! geometric Brownian motions on a shared time grid. Locate requests are a
//! separate count-like process, simulated as Poisson arrivals or as the
//! absolute value of a normal.

mod bundle;
mod sample;
mod simulate;
mod spec;
mod supply;

pub use bundle::PathBundle;
pub use sample::{sample_parameter_seed, GbmRange, ParameterRanges, Range, SecuritySample};
pub use simulate::{simulate_gbm_paths, simulate_locates};
pub use spec::{CorrelatedSystem, GbmSpec, LocateModel, LocateSpec, TimeGrid, VariableKind};
pub use supply::{aggregate_availability, validate_supply_chain, SupplyChainReport, SupplyChainViolation};

pub(crate) use simulate::lower_triangular_factor;
