//! Up/Down state indicators and barrier-crossing counters.

use crate::error::Result;
use crate::payoff::TermLoanContract;
use crate::process::{PathBundle, VariableKind};

/// Availability strictly above the guaranteed quantity. Equality counts as
/// a breach (the Down state), matching the breach condition A <= H; the
/// tie-break lives here and nowhere else.
#[inline]
pub(crate) fn is_up(availability: f64, quantity: f64) -> bool {
    availability > quantity
}

/// Up/Down state per (path, security, step). The two states are mutually
/// exclusive by construction: down is stored as the complement of up.
#[derive(Debug, Clone, PartialEq)]
pub struct StateIndicator {
    n_paths: usize,
    n_securities: usize,
    n_steps: usize,
    up: Vec<bool>,
}

impl StateIndicator {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_securities(&self) -> usize {
        self.n_securities
    }

    /// Number of state observations per path and security (T + 1).
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Up_it for one path and security, one flag per step.
    pub fn up(&self, path: usize, security: usize) -> &[bool] {
        let base = (path * self.n_securities + security) * self.n_steps;
        &self.up[base..base + self.n_steps]
    }

    /// Down_it = 1 - Up_it.
    pub fn down_at(&self, path: usize, security: usize, step: usize) -> bool {
        !self.up(path, security)[step]
    }
}

/// Classify every step of every path as Up (availability above quantity) or
/// Down (at or below).
pub fn compute_state_indicator(
    paths: &PathBundle,
    contract: &TermLoanContract,
) -> Result<StateIndicator> {
    contract.validate()?;
    let t_last = contract.last_step(paths.grid(), 0)?;
    let n_steps = t_last + 1;
    let n_securities = contract.n_securities();
    let mut avail_vars = Vec::with_capacity(n_securities);
    for sec in 0..n_securities {
        avail_vars.push(paths.nth_of_kind(VariableKind::Availability, sec)?);
    }
    let mut up = Vec::with_capacity(paths.n_paths() * n_securities * n_steps);
    for path in 0..paths.n_paths() {
        for (sec, &var) in avail_vars.iter().enumerate() {
            let series = paths.series(path, var);
            let h = contract.quantities[sec];
            up.extend(series[..n_steps].iter().map(|&a| is_up(a, h)));
        }
    }
    Ok(StateIndicator {
        n_paths: paths.n_paths(),
        n_securities,
        n_steps,
        up,
    })
}

/// Down/up transition counts per (path, security).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCounts {
    /// counts[path][security] = (downward transitions, upward transitions)
    pub counts: Vec<Vec<(u32, u32)>>,
}

/// Count barrier crossings with the floor-function expressions
///
/// ```text
/// down = sum_t floor((1 + Up_t - Up_{t+1}) / 2)
/// up   = sum_t floor((1 - Up_t + Up_{t+1}) / 2)
/// ```
///
/// which pick out exactly the 1->0 and 0->1 steps of the Up sequence.
pub fn count_transitions(indicator: &StateIndicator) -> TransitionCounts {
    let mut counts = Vec::with_capacity(indicator.n_paths());
    for path in 0..indicator.n_paths() {
        let mut row = Vec::with_capacity(indicator.n_securities());
        for sec in 0..indicator.n_securities() {
            let up = indicator.up(path, sec);
            let mut down_count = 0i64;
            let mut up_count = 0i64;
            for t in 0..up.len().saturating_sub(1) {
                let u_t = up[t] as i64;
                let u_next = up[t + 1] as i64;
                down_count += (1 + u_t - u_next).div_euclid(2);
                up_count += (1 - u_t + u_next).div_euclid(2);
            }
            row.push((down_count as u32, up_count as u32));
        }
        counts.push(row);
    }
    TransitionCounts { counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::TimeGrid;

    fn indicator_from(up: &[bool]) -> StateIndicator {
        StateIndicator {
            n_paths: 1,
            n_securities: 1,
            n_steps: up.len(),
            up: up.to_vec(),
        }
    }

    fn bundle_from_availability(values: &[f64]) -> PathBundle {
        let grid = TimeGrid::new(values.len() as f64 - 1.0, values.len() - 1).unwrap();
        PathBundle::from_values(
            grid,
            vec![VariableKind::Availability],
            1,
            0,
            values.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn above_quantity_is_up_everywhere() {
        let contract = TermLoanContract::single(10.0, 4.0, 1.0, 0.0).unwrap();
        let bundle = bundle_from_availability(&[11.0; 5]);
        let ind = compute_state_indicator(&bundle, &contract).unwrap();
        assert!(ind.up(0, 0).iter().all(|&u| u));
    }

    #[test]
    fn equality_breaks_to_down() {
        let contract = TermLoanContract::single(10.0, 4.0, 1.0, 0.0).unwrap();
        let bundle = bundle_from_availability(&[10.0; 5]);
        let ind = compute_state_indicator(&bundle, &contract).unwrap();
        assert!(ind.up(0, 0).iter().all(|&u| !u));
        assert!(ind.down_at(0, 0, 2));
    }

    #[test]
    fn alternating_availability_alternates_states() {
        let contract = TermLoanContract::single(10.0, 3.0, 1.0, 0.0).unwrap();
        let bundle = bundle_from_availability(&[11.0, 9.0, 11.0, 9.0]);
        let ind = compute_state_indicator(&bundle, &contract).unwrap();
        assert_eq!(ind.up(0, 0), &[true, false, true, false]);
    }

    #[test]
    fn hand_counted_transitions() {
        // Up = [1,1,0,1,0]: down transitions at (1,2) and (3,4), up at (2,3)
        let ind = indicator_from(&[true, true, false, true, false]);
        let counts = count_transitions(&ind);
        assert_eq!(counts.counts[0][0], (2, 1));
    }

    #[test]
    fn constant_state_never_transitions() {
        let ind = indicator_from(&[true; 4]);
        assert_eq!(count_transitions(&ind).counts[0][0], (0, 0));
        let ind = indicator_from(&[false; 4]);
        assert_eq!(count_transitions(&ind).counts[0][0], (0, 0));
    }

    #[test]
    fn floor_sums_match_adjacent_pair_scan_for_all_length_12_sequences() {
        // exhaustive oracle: brute-force scan of every 0/1 sequence
        for bits in 0u32..(1 << 12) {
            let up: Vec<bool> = (0..12).map(|i| bits & (1 << i) != 0).collect();
            let mut down_scan = 0u32;
            let mut up_scan = 0u32;
            for t in 0..11 {
                if up[t] && !up[t + 1] {
                    down_scan += 1;
                }
                if !up[t] && up[t + 1] {
                    up_scan += 1;
                }
            }
            let ind = indicator_from(&up);
            assert_eq!(count_transitions(&ind).counts[0][0], (down_scan, up_scan));
        }
    }

    #[test]
    fn single_observation_has_no_transitions() {
        let ind = indicator_from(&[true]);
        assert_eq!(count_transitions(&ind).counts[0][0], (0, 0));
    }
}
