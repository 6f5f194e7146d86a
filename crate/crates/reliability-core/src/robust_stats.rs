//! Order-statistic primitives: percentiles, IQR, MAD, and empirical CVaR.
//!
//! Conventions pinned project-wide:
//!
//! * Percentiles interpolate linearly at fractional rank
//!   `h = (n - 1) * q / 100` over the ascending sort:
//!   `v[floor(h)] + (h - floor(h)) * (v[floor(h) + 1] - v[floor(h)])`.
//! * `iqr = percentile(75) - percentile(25)`; `mad` is the median absolute
//!   deviation from the median (unscaled).
//! * `cvar(s, alpha)` is the mean of the `k = ceil(alpha * n)` smallest
//!   values (`k >= 1`), i.e. the expected score in the lower `alpha` tail.
//!   The mean is accumulated incrementally over the sorted prefix
//!   (`m += (v[i] - m) / (i + 1)`) rather than as `sum / k`: with that order
//!   of operations a constant sample returns the constant bit-exactly, the
//!   estimator is exactly monotone in `alpha`, and `cvar <= mean` holds
//!   exactly in floating point — none of which naive summation guarantees.

use alloc::vec::Vec;
use thiserror::Error;

/// Invalid input to a robust statistic.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("percentile {q} outside [0, 100]")]
    QuantileOutOfRange { q: f64 },
    #[error("cvar tail fraction {alpha} outside (0, 1)")]
    AlphaOutOfRange { alpha: f64 },
}

fn checked_sorted(sample: &[f64]) -> Result<Vec<f64>, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if let Some(index) = sample.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite { index });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(sorted)
}

/// Linear-interpolation percentile of `sample` at `q` in [0, 100].
pub fn percentile(sample: &[f64], q: f64) -> Result<f64, StatsError> {
    if !(0.0..=100.0).contains(&q) {
        return Err(StatsError::QuantileOutOfRange { q });
    }
    Ok(percentile_sorted(&checked_sorted(sample)?, q))
}

/// Percentile over an already-ascending slice; `q` must be in [0, 100].
pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * q / 100.0;
    let lo = h as usize; // floor: h is nonnegative
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

/// Median (50th percentile).
pub fn median(sample: &[f64]) -> Result<f64, StatsError> {
    percentile(sample, 50.0)
}

/// Interquartile range: 75th minus 25th percentile.
pub fn iqr(sample: &[f64]) -> Result<f64, StatsError> {
    let sorted = checked_sorted(sample)?;
    Ok(iqr_sorted(&sorted))
}

pub(crate) fn iqr_sorted(sorted: &[f64]) -> f64 {
    percentile_sorted(sorted, 75.0) - percentile_sorted(sorted, 25.0)
}

/// Median absolute deviation from the median, unscaled.
pub fn mad(sample: &[f64]) -> Result<f64, StatsError> {
    let sorted = checked_sorted(sample)?;
    let center = percentile_sorted(&sorted, 50.0);
    let mut deviations: Vec<f64> = sorted.iter().map(|v| abs(v - center)).collect();
    deviations.sort_unstable_by(f64::total_cmp);
    Ok(percentile_sorted(&deviations, 50.0))
}

/// Empirical CVaR at tail fraction `alpha` in (0, 1): the mean of the
/// `ceil(alpha * n)` smallest values. Lower (more negative) means a heavier
/// lower tail.
pub fn cvar(sample: &[f64], alpha: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::AlphaOutOfRange { alpha });
    }
    let sorted = checked_sorted(sample)?;
    Ok(cvar_sorted(&sorted, alpha))
}

/// CVaR over an already-ascending slice; `alpha` must be in (0, 1).
pub(crate) fn cvar_sorted(sorted: &[f64], alpha: f64) -> f64 {
    let k = tail_count(sorted.len(), alpha);
    running_mean(&sorted[..k])
}

/// `ceil(alpha * n)` clamped to [1, n], computed without float `ceil`.
pub(crate) fn tail_count(n: usize, alpha: f64) -> usize {
    let target = alpha * n as f64;
    let floor = target as usize;
    let k = if (floor as f64) < target { floor + 1 } else { floor };
    k.clamp(1, n)
}

/// Arithmetic mean accumulated in the same order `cvar` uses (ascending),
/// so `cvar(s, alpha) <= mean(s)` holds exactly for every `alpha`.
pub fn mean(sample: &[f64]) -> Result<f64, StatsError> {
    let sorted = checked_sorted(sample)?;
    Ok(running_mean(&sorted))
}

/// Incremental mean; values must be non-empty.
pub(crate) fn running_mean(values: &[f64]) -> f64 {
    let mut m = values[0];
    for (i, &v) in values.iter().enumerate().skip(1) {
        m += (v - m) / (i + 1) as f64;
    }
    m
}

/// Absolute value usable without `std`.
pub(crate) fn abs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn percentile_interpolates_linearly() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&s, 25.0).unwrap(), 1.75);
        assert_eq!(percentile(&s, 50.0).unwrap(), 2.5);
        assert_eq!(percentile(&s, 75.0).unwrap(), 3.25);
        assert_eq!(percentile(&s, 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&s, 100.0).unwrap(), 4.0);
    }

    #[test]
    fn percentile_of_singleton_is_that_value() {
        assert_eq!(percentile(&[7.25], 33.0).unwrap(), 7.25);
        assert_eq!(percentile(&[7.25], 100.0).unwrap(), 7.25);
    }

    #[test]
    fn percentile_rejects_bad_inputs() {
        assert_eq!(percentile(&[], 50.0), Err(StatsError::EmptySample));
        assert_eq!(
            percentile(&[1.0], 101.0),
            Err(StatsError::QuantileOutOfRange { q: 101.0 })
        );
        assert_eq!(
            percentile(&[1.0, f64::NAN], 50.0),
            Err(StatsError::NonFinite { index: 1 })
        );
    }

    #[test]
    fn iqr_worked_value() {
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.5);
        // Order never matters.
        assert_eq!(iqr(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 1.5);
    }

    #[test]
    fn iqr_of_constant_sample_is_zero() {
        assert_eq!(iqr(&[5.0; 9]).unwrap(), 0.0);
    }

    #[test]
    fn mad_worked_value() {
        // median 2, deviations {1, 0, 7} -> median 1
        assert_eq!(mad(&[1.0, 2.0, 9.0]).unwrap(), 1.0);
    }

    #[test]
    fn mad_of_constant_sample_is_zero() {
        assert_eq!(mad(&[3.0; 5]).unwrap(), 0.0);
    }

    #[test]
    fn cvar_worked_value() {
        // 1..=20, alpha 0.25 -> mean of the 5 smallest = 3.0
        let s: Vec<f64> = (1..=20).map(|v| v as f64).collect();
        assert_eq!(cvar(&s, 0.25).unwrap(), 3.0);
    }

    #[test]
    fn cvar_tail_count_rounds_up_and_clamps() {
        assert_eq!(tail_count(20, 0.25), 5);
        assert_eq!(tail_count(49, 0.05), 3);
        assert_eq!(tail_count(3, 0.01), 1);
        assert_eq!(tail_count(1, 0.99), 1);
        assert_eq!(tail_count(10, 0.91), 10);
    }

    #[test]
    fn cvar_of_constant_sample_is_exact() {
        // The incremental mean returns the constant bit-exactly even when
        // 0.1 sums would round (see module docs).
        let s = [0.1; 7];
        for &alpha in &[0.05, 0.4, 0.5, 0.9] {
            assert_eq!(cvar(&s, alpha).unwrap(), 0.1);
        }
    }

    #[test]
    fn cvar_monotone_and_below_mean_on_degenerate_input() {
        let s = [0.1; 7];
        assert!(cvar(&s, 0.4).unwrap() <= cvar(&s, 0.9).unwrap());
        assert!(cvar(&s, 0.4).unwrap() <= mean(&s).unwrap());
    }

    #[test]
    fn cvar_rejects_bad_alpha() {
        assert_eq!(cvar(&[1.0], 0.0), Err(StatsError::AlphaOutOfRange { alpha: 0.0 }));
        assert_eq!(cvar(&[1.0], 1.0), Err(StatsError::AlphaOutOfRange { alpha: 1.0 }));
        assert!(cvar(&[1.0], f64::NAN).is_err());
    }

    #[test]
    fn mean_matches_arithmetic_mean_closely() {
        let s = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(mean(&s).unwrap(), 3.0);
    }
}
