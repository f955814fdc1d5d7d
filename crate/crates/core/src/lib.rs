//! Valuation engine for long-horizon securities-lending loans.
//!
//! A term loan guarantees a borrower a fixed quantity of a security for a
//! fixed period. Whether the lending desk can keep that promise depends on
//! the evolution of its availability (lendable supply), so the deal behaves
//! like a barrier option written on a non-traded process. This crate
//! simulates the driving processes, evaluates the full family of payoff
//! structures by Monte Carlo, benchmarks the simplest structure against a
//! closed form, values the same structures directly off historical series,
//! reuses the barrier machinery for inventory-management payoffs, and runs
//! perturbation scenario grids with checkpoint/resume.

pub mod closed_form;
pub mod config;
pub mod error;
pub mod historical;
pub mod inventory;
pub mod payoff;
pub mod process;
pub mod scenario;
pub mod stats;

pub(crate) mod rng;

pub use error::{Error, Result};
