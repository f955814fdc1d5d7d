//! Deterministic summation and Monte Carlo error estimation.

/// Pairwise sum with a fixed recursion layout.
///
/// The reduction tree depends only on the slice length, so the result is
/// bit-identical no matter how the values were produced, and rounding error
/// grows like O(log n) instead of O(n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const CHUNK: usize = 64;
    if values.len() <= CHUNK {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean and standard error of a Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStdError {
    pub mean: f64,
    /// Standard error of the mean; zero for fewer than two samples.
    pub std_error: f64,
    pub n: usize,
}

/// Two-pass mean / standard error with pairwise sums in both passes.
pub fn mean_std_error(samples: &[f64]) -> MeanStdError {
    let n = samples.len();
    if n == 0 {
        return MeanStdError {
            mean: 0.0,
            std_error: 0.0,
            n,
        };
    }
    let mean = pairwise_sum(samples) / n as f64;
    if n == 1 {
        return MeanStdError {
            mean,
            std_error: 0.0,
            n,
        };
    }
    let sq: Vec<f64> = samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    MeanStdError {
        mean,
        std_error: (var / n as f64).sqrt(),
        n,
    }
}

/// Standard error of the difference of two independent estimates.
pub fn joint_std_error(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}
