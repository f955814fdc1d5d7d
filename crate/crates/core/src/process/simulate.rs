//! Correlated path generation.

use crate::error::{Error, Result};
use crate::process::{CorrelatedSystem, LocateModel, LocateSpec, PathBundle, TimeGrid, VariableKind};
use crate::rng::stream_rng;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use rayon::prelude::*;

/// Pivot tolerance for the semi-definite factorization: diagonal residuals
/// within this of zero are treated as exactly zero.
const PSD_JITTER: f64 = 1e-10;

/// Lower-triangular L with L L^T = `matrix` (row-major n x n).
///
/// Plain Cholesky extended to the positive semi-definite case: a pivot
/// within `PSD_JITTER` of zero collapses its column to zero, which is only
/// consistent when the remaining column residuals vanish too. The first
/// leading minor that goes negative is reported in the error.
pub(crate) fn lower_triangular_factor(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(matrix.len(), n * n);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = matrix[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d < -PSD_JITTER {
            return Err(Error::NotPositiveSemiDefinite { order: j + 1 });
        }
        let pivot = if d > 0.0 { d.sqrt() } else { 0.0 };
        l[j * n + j] = pivot;
        for i in (j + 1)..n {
            let mut s = matrix[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if pivot > 0.0 {
                l[i * n + j] = s / pivot;
            } else if s.abs() > 1e-8 {
                // zero pivot with a nonzero residual column: not PSD
                return Err(Error::NotPositiveSemiDefinite { order: i + 1 });
            }
        }
    }
    Ok(l)
}

/// Simulate correlated GBM paths on `grid`.
///
/// Each path evolves by the exact log scheme
/// `X(t+tau) = X(t) * exp((mu - sigma^2/2) tau + sigma sqrt(tau) Z)`,
/// with the Z vector obtained by applying the lower-triangular factor of
/// the correlation matrix to independent standard normals. Every path has
/// its own generator derived from (seed, path index), so output is
/// bit-identical whether paths are filled serially or in parallel.
pub fn simulate_gbm_paths(
    system: &CorrelatedSystem,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be at least 1"));
    }
    let n_vars = system.n_processes();
    let factor = lower_triangular_factor(system.correlation(), n_vars)?;

    let tau = grid.step();
    let sqrt_tau = tau.sqrt();
    let labels: Vec<VariableKind> = system.specs().iter().map(|s| s.kind).collect();
    let starts: Vec<f64> = system.specs().iter().map(|s| s.start).collect();
    // per-variable log-drift and diffusion coefficients
    let log_drift: Vec<f64> = system
        .specs()
        .iter()
        .map(|s| (s.drift - 0.5 * s.vol * s.vol) * tau)
        .collect();
    let diffusion: Vec<f64> = system.specs().iter().map(|s| s.vol * sqrt_tau).collect();

    let n_points = grid.n_points();
    let mut bundle = PathBundle::zeroed(*grid, labels, n_paths, seed);
    bundle
        .path_blocks_mut()
        .enumerate()
        .for_each(|(path, block)| {
            let mut rng = stream_rng(seed, path as u64);
            let mut z = vec![0.0f64; n_vars];
            let mut y = vec![0.0f64; n_vars];
            for (var, &start) in starts.iter().enumerate() {
                block[var * n_points] = start;
            }
            for point in 1..n_points {
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, &zk) in z.iter().enumerate().take(i + 1) {
                        acc += factor[i * n_vars + k] * zk;
                    }
                    *yi = acc;
                }
                for var in 0..n_vars {
                    let prev = block[var * n_points + point - 1];
                    let next = prev * (log_drift[var] + diffusion[var] * y[var]).exp();
                    block[var * n_points + point] = next;
                }
            }
        });
    Ok(bundle)
}

/// Simulate locate-request series (one variable, per-step counts).
pub fn simulate_locates(
    spec: &LocateSpec,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    spec.validate()?;
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be at least 1"));
    }
    let n_points = grid.n_points();
    let mut bundle = PathBundle::zeroed(*grid, vec![VariableKind::Locate], n_paths, seed);
    match spec.model {
        LocateModel::Poisson { rate } => {
            let dist = Poisson::new(rate)
                .map_err(|e| Error::invalid(format!("poisson rate {rate}: {e}")))?;
            bundle
                .path_blocks_mut()
                .enumerate()
                .for_each(|(path, block)| {
                    let mut rng = stream_rng(seed, path as u64);
                    for v in block.iter_mut().take(n_points) {
                        *v = dist.sample(&mut rng);
                    }
                });
        }
        LocateModel::AbsNormal { mean, sd } => {
            if sd == 0.0 {
                bundle.path_blocks_mut().for_each(|block| {
                    for v in block.iter_mut() {
                        *v = mean.abs();
                    }
                });
            } else {
                let dist = Normal::new(mean, sd)
                    .map_err(|e| Error::invalid(format!("normal({mean}, {sd}): {e}")))?;
                bundle
                    .path_blocks_mut()
                    .enumerate()
                    .for_each(|(path, block)| {
                        let mut rng = stream_rng(seed, path as u64);
                        for v in block.iter_mut().take(n_points) {
                            *v = dist.sample(&mut rng).abs();
                        }
                    });
            }
        }
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::GbmSpec;
    use crate::stats::mean_std_error;

    fn system_one(kind: VariableKind, start: f64, drift: f64, vol: f64) -> CorrelatedSystem {
        CorrelatedSystem::independent(vec![GbmSpec::new(kind, start, drift, vol).unwrap()]).unwrap()
    }

    #[test]
    fn zero_vol_path_is_deterministic_exponential() {
        let system = system_one(VariableKind::Availability, 100.0, 0.1, 0.0);
        let grid = TimeGrid::new(1.0, 13).unwrap();
        let bundle = simulate_gbm_paths(&system, &grid, 5, 42).unwrap();
        let expected = 100.0 * 0.1f64.exp();
        for path in 0..5 {
            let series = bundle.series(path, 0);
            assert!(
                (series[13] - expected).abs() < 1e-9,
                "path {path} ended at {}",
                series[13]
            );
        }
    }

    #[test]
    fn terminal_mean_matches_lognormal_moment() {
        // E[X_T] = X_0 exp(mu T); independent oracle is the analytic moment
        let system = system_one(VariableKind::Availability, 100.0, 0.05, 0.3);
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let n_paths = 50_000;
        let bundle = simulate_gbm_paths(&system, &grid, n_paths, 7).unwrap();
        let terminal: Vec<f64> = (0..n_paths).map(|p| bundle.series(p, 0)[50]).collect();
        let stat = mean_std_error(&terminal);
        let expected = 100.0 * 0.05f64.exp();
        assert!(
            (stat.mean - expected).abs() <= 3.0 * stat.std_error,
            "mean {} vs {expected} (se {})",
            stat.mean,
            stat.std_error
        );
    }

    #[test]
    fn zero_drift_terminal_mean_stays_at_start() {
        let system = system_one(VariableKind::Availability, 100.0, 0.0, 0.4);
        let grid = TimeGrid::new(1.0, 25).unwrap();
        let n_paths = 40_000;
        let bundle = simulate_gbm_paths(&system, &grid, n_paths, 11).unwrap();
        let terminal: Vec<f64> = (0..n_paths).map(|p| bundle.series(p, 0)[25]).collect();
        let stat = mean_std_error(&terminal);
        assert!((stat.mean - 100.0).abs() <= 3.0 * stat.std_error);
    }

    #[test]
    fn paths_stay_strictly_positive() {
        let system = system_one(VariableKind::BorrowRate, 0.01, -0.5, 1.5);
        let grid = TimeGrid::new(2.0, 100).unwrap();
        let bundle = simulate_gbm_paths(&system, &grid, 200, 3).unwrap();
        assert!(bundle.raw_values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn same_seed_is_bit_identical_across_worker_counts() {
        let specs = vec![
            GbmSpec::new(VariableKind::Availability, 100.0, 0.02, 0.4).unwrap(),
            GbmSpec::new(VariableKind::Price, 50.0, 0.05, 0.2).unwrap(),
        ];
        let system = CorrelatedSystem::new(specs, vec![1.0, 0.4, 0.4, 1.0]).unwrap();
        let grid = TimeGrid::new(1.0, 60).unwrap();
        let a = simulate_gbm_paths(&system, &grid, 500, 99).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = serial.install(|| simulate_gbm_paths(&system, &grid, 500, 99).unwrap());
        let bits_a: Vec<u64> = a.raw_values().iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u64> = b.raw_values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    fn log_increment_correlation(bundle: &PathBundle, i: usize, j: usize) -> f64 {
        let n_points = bundle.n_points();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for path in 0..bundle.n_paths() {
            let a = bundle.series(path, i);
            let b = bundle.series(path, j);
            for t in 1..n_points {
                xs.push((a[t] / a[t - 1]).ln());
                ys.push((b[t] / b[t - 1]).ln());
            }
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            cov += (x - mx) * (y - my);
            vx += (x - mx) * (x - mx);
            vy += (y - my) * (y - my);
        }
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn independent_drivers_have_vanishing_cross_correlation() {
        let specs = vec![
            GbmSpec::new(VariableKind::Availability, 100.0, 0.0, 0.3).unwrap(),
            GbmSpec::new(VariableKind::Price, 50.0, 0.0, 0.2).unwrap(),
        ];
        let system = CorrelatedSystem::independent(specs).unwrap();
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let n_paths = 400;
        let bundle = simulate_gbm_paths(&system, &grid, n_paths, 21).unwrap();
        let c = log_increment_correlation(&bundle, 0, 1);
        let tol = 4.0 / ((n_paths * grid.n_steps()) as f64).sqrt();
        assert!(c.abs() < tol, "correlation {c} exceeds {tol}");
    }

    #[test]
    fn requested_correlation_is_realized() {
        let specs = vec![
            GbmSpec::new(VariableKind::Availability, 100.0, 0.0, 0.3).unwrap(),
            GbmSpec::new(VariableKind::Price, 50.0, 0.0, 0.2).unwrap(),
            GbmSpec::new(VariableKind::BorrowRate, 0.02, 0.0, 0.5).unwrap(),
        ];
        let rho = vec![1.0, 0.7, -0.3, 0.7, 1.0, 0.1, -0.3, 0.1, 1.0];
        let system = CorrelatedSystem::new(specs, rho.clone()).unwrap();
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let n_paths = 800;
        let bundle = simulate_gbm_paths(&system, &grid, n_paths, 5).unwrap();
        let tol = 4.0 / ((n_paths * grid.n_steps()) as f64).sqrt();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let c = log_increment_correlation(&bundle, i, j);
                assert!(
                    (c - rho[i * 3 + j]).abs() < tol,
                    "corr[{i}][{j}] = {c}, wanted {}",
                    rho[i * 3 + j]
                );
            }
        }
    }

    #[test]
    fn perfectly_correlated_pair_factors_without_jitter_failure() {
        let specs = vec![
            GbmSpec::new(VariableKind::Availability, 100.0, 0.0, 0.3).unwrap(),
            GbmSpec::new(VariableKind::Price, 50.0, 0.0, 0.3).unwrap(),
        ];
        let system = CorrelatedSystem::new(specs, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let grid = TimeGrid::new(0.5, 20).unwrap();
        let bundle = simulate_gbm_paths(&system, &grid, 50, 1).unwrap();
        // identical vol and drivers: log-returns must coincide
        for path in 0..50 {
            let a = bundle.series(path, 0);
            let b = bundle.series(path, 1);
            for t in 1..bundle.n_points() {
                let ra = (a[t] / a[t - 1]).ln();
                let rb = (b[t] / b[t - 1]).ln();
                assert!((ra - rb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn abs_normal_with_zero_sd_is_constant() {
        let spec = LocateSpec::abs_normal(50.0, 0.0).unwrap();
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let bundle = simulate_locates(&spec, &grid, 3, 9).unwrap();
        assert!(bundle.raw_values().iter().all(|&v| v == 50.0));
    }

    #[test]
    fn poisson_sample_mean_matches_rate() {
        let spec = LocateSpec::poisson(4.0).unwrap();
        let grid = TimeGrid::new(1.0, 99).unwrap();
        // 1000 paths x 100 points = 100_000 draws
        let bundle = simulate_locates(&spec, &grid, 1000, 13).unwrap();
        let stat = mean_std_error(bundle.raw_values());
        let tol = 3.0 * (4.0f64 / 100_000.0).sqrt();
        assert!(
            (stat.mean - 4.0).abs() < tol,
            "mean {} not within {tol} of 4",
            stat.mean
        );
        assert!(bundle
            .raw_values()
            .iter()
            .all(|&v| v >= 0.0 && v.fract() == 0.0));
    }

    #[test]
    fn half_normal_mean_is_sqrt_two_over_pi() {
        let spec = LocateSpec::abs_normal(0.0, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 99).unwrap();
        let bundle = simulate_locates(&spec, &grid, 2000, 17).unwrap();
        let stat = mean_std_error(bundle.raw_values());
        let expected = (2.0 / std::f64::consts::PI).sqrt();
        assert!(
            (stat.mean - expected).abs() <= 4.0 * stat.std_error,
            "mean {} vs {expected}",
            stat.mean
        );
    }

    #[test]
    fn negative_poisson_rate_is_rejected() {
        assert!(LocateSpec::poisson(-1.0).is_err());
        assert!(LocateSpec::poisson(0.0).is_err());
    }
}
