//! Training-curve transforms: differencing, trailing-window IQR, low-pass
//! filtering, and drawdown.
//!
//! Curves whose performance accumulates (difference-stationary behaviour)
//! are detrended by first-order differencing before dispersion is measured;
//! drawdown captures how far a curve has fallen from its running best.

use alloc::vec::Vec;
use thiserror::Error;

use crate::config::{WindowSpec, WindowUnit};
use crate::data::EvaluationPoint;
use crate::robust_stats;

/// Invalid input to a series transform.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("series steps are not strictly increasing at index {index}")]
    NonIncreasingSteps { index: usize },
    #[error("series contains a non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error(
        "window too small: no trailing window of {size} {unit} covers two detrended points"
    )]
    WindowTooSmall { size: u64, unit: &'static str },
    #[error("low-pass window must be a positive odd integer, got {0}")]
    EvenWindow(u64),
}

fn check_points(points: &[EvaluationPoint], needed: usize) -> Result<(), SeriesError> {
    if points.len() < needed {
        return Err(SeriesError::TooFewPoints { needed, got: points.len() });
    }
    for (index, pair) in points.windows(2).enumerate() {
        if pair[1].step <= pair[0].step {
            return Err(SeriesError::NonIncreasingSteps { index: index + 1 });
        }
    }
    if let Some(index) = points.iter().position(|p| !p.value.is_finite()) {
        return Err(SeriesError::NonFinite { index });
    }
    Ok(())
}

/// First differences of a curve. Each entry sits at the *right* endpoint of
/// its interval; `origin_step` remembers where the source curve began so
/// trailing windows know the earliest step they may extend back to.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffSeries {
    pub origin_step: u64,
    pub points: Vec<EvaluationPoint>,
}

impl DiffSeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// Drawdown of a curve: value minus running maximum, so entries are
/// nonpositive and the first entry is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawdownSeries {
    pub points: Vec<EvaluationPoint>,
}

impl DrawdownSeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// First-order differencing: `y'_i = y_i - y_{i-1}`, optionally divided by
/// the step gap `t_i - t_{i-1}` (`per_step`) so differences taken at
/// different evaluation frequencies stay comparable.
pub fn difference(points: &[EvaluationPoint], per_step: bool) -> Result<DiffSeries, SeriesError> {
    check_points(points, 2)?;
    let diffs = points
        .windows(2)
        .map(|pair| {
            let dv = pair[1].value - pair[0].value;
            let value = if per_step { dv / (pair[1].step - pair[0].step) as f64 } else { dv };
            EvaluationPoint { step: pair[1].step, value }
        })
        .collect();
    Ok(DiffSeries { origin_step: points[0].step, points: diffs })
}

/// IQR inside a trailing half-open window `(s - W, s]` ending at each
/// evaluation step `s`.
///
/// A window is emitted only where it is fully supported — it must not extend
/// back past the start of the source curve — and only when it covers at
/// least two detrended points. In `eval_points` units the window holds
/// exactly `size` consecutive detrended samples; in `env_steps` units it
/// holds whatever falls inside the step span. Errors if no window anywhere
/// satisfies both conditions.
pub fn sliding_window_iqr(
    diffs: &DiffSeries,
    window: &WindowSpec,
) -> Result<Vec<EvaluationPoint>, SeriesError> {
    let pts = &diffs.points;
    if pts.is_empty() {
        return Err(SeriesError::TooFewPoints { needed: 2, got: 0 });
    }
    let mut out = Vec::new();
    let mut scratch: Vec<f64> = Vec::new();
    match window.unit {
        WindowUnit::EvalPoints => {
            let w = window.size as usize;
            if w >= 2 {
                for end in (w - 1)..pts.len() {
                    scratch.clear();
                    scratch.extend(pts[end + 1 - w..=end].iter().map(|p| p.value));
                    scratch.sort_unstable_by(f64::total_cmp);
                    out.push(EvaluationPoint {
                        step: pts[end].step,
                        value: robust_stats::iqr_sorted(&scratch),
                    });
                }
            }
        }
        WindowUnit::EnvSteps => {
            let span = window.size;
            let mut lo = 0usize;
            for end in 0..pts.len() {
                let step = pts[end].step;
                // Full support: the window may not reach back before the
                // first point of the source curve.
                if step < diffs.origin_step + span {
                    continue;
                }
                while pts[lo].step + span <= step {
                    lo += 1;
                }
                if end + 1 - lo >= 2 {
                    scratch.clear();
                    scratch.extend(pts[lo..=end].iter().map(|p| p.value));
                    scratch.sort_unstable_by(f64::total_cmp);
                    out.push(EvaluationPoint {
                        step,
                        value: robust_stats::iqr_sorted(&scratch),
                    });
                }
            }
        }
    }
    if out.is_empty() {
        return Err(SeriesError::WindowTooSmall {
            size: window.size,
            unit: match window.unit {
                WindowUnit::EvalPoints => "eval_points",
                WindowUnit::EnvSteps => "env_steps",
            },
        });
    }
    Ok(out)
}

/// Centered moving average with an odd window, truncated at the edges (the
/// first/last points average over however much of the window exists).
pub fn lowpass_filter(values: &[f64], window: u64) -> Result<Vec<f64>, SeriesError> {
    if window == 0 || window % 2 == 0 {
        return Err(SeriesError::EvenWindow(window));
    }
    if values.is_empty() {
        return Err(SeriesError::TooFewPoints { needed: 1, got: 0 });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(SeriesError::NonFinite { index });
    }
    let half = (window / 2) as usize;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let slice = &values[lo..=hi];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect())
}

/// Drawdown: each point's value minus the running maximum so far.
pub fn drawdown(points: &[EvaluationPoint]) -> Result<DrawdownSeries, SeriesError> {
    check_points(points, 1)?;
    let mut peak = f64::NEG_INFINITY;
    let out = points
        .iter()
        .map(|p| {
            peak = peak.max(p.value);
            EvaluationPoint { step: p.step, value: p.value - peak }
        })
        .collect();
    Ok(DrawdownSeries { points: out })
}
