//! Synthetic training curves and rollout scores with known ground truth.
//!
//! Curves follow either a difference-stationary process (noise accumulates:
//! `y_t = y_{t-1} + slope * dt + eps_t`) or a trend-stationary process
//! (noise stays around the trend line: `y_t = intercept + slope * t +
//! eps_t`), with optional transient performance drops: with probability
//! `drop_probability` an emitted point is lowered by `drop_magnitude`, while
//! the underlying process continues unaffected.
//!
//! Generation is deterministic per `(seed, run index)`, and the noise stream
//! is drawn independently of the drop parameters: two specs that differ only
//! in `drop_magnitude` / `drop_probability` produce the same base curves
//! with drops applied on top, which makes paired constructions possible.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, EvaluationPoint, RolloutSet, TrainingCurve};
use crate::seeding::{
    self,
    domain::{SYNTH_CURVE, SYNTH_ROLLOUT},
};

/// How noise enters the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    /// Shocks persist: the curve is a random walk around the trend.
    DifferenceStationary,
    /// Shocks are transient: the curve reverts to the trend line.
    TrendStationary,
}

/// Recipe for one algorithm/task cell of synthetic training curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub algorithm: String,
    pub task: String,
    /// Trend value at step 0.
    pub intercept: f64,
    /// Trend increase per environment step.
    pub slope: f64,
    /// Standard deviation of the Gaussian noise term.
    pub noise_sigma: f64,
    /// Size of a transient drop when one fires.
    pub drop_magnitude: f64,
    /// Per-point probability of a transient drop.
    pub drop_probability: f64,
    pub process: ProcessKind,
    pub num_runs: u32,
    pub num_points: u32,
    /// Environment steps between consecutive evaluations.
    pub step_interval: u64,
    pub seed: u64,
}

/// Why generation was refused.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("num_runs must be at least 1")]
    NoRuns,
    #[error("num_points must be at least 1")]
    NoPoints,
    #[error("step_interval must be at least 1")]
    ZeroInterval,
    #[error("noise sigma must be finite and nonnegative, got {0}")]
    BadSigma(f64),
    #[error("drop_probability must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn validate(spec: &SynthSpec) -> Result<(), SynthError> {
    if spec.num_runs == 0 {
        return Err(SynthError::NoRuns);
    }
    if spec.num_points == 0 {
        return Err(SynthError::NoPoints);
    }
    if spec.step_interval == 0 {
        return Err(SynthError::ZeroInterval);
    }
    if !(spec.noise_sigma.is_finite() && spec.noise_sigma >= 0.0) {
        return Err(SynthError::BadSigma(spec.noise_sigma));
    }
    if !(spec.drop_probability >= 0.0 && spec.drop_probability <= 1.0) {
        return Err(SynthError::BadProbability(spec.drop_probability));
    }
    for (name, v) in
        [("intercept", spec.intercept), ("slope", spec.slope), ("drop_magnitude", spec.drop_magnitude)]
    {
        if !v.is_finite() {
            return Err(SynthError::NonFinite(name));
        }
    }
    Ok(())
}

/// Generates `spec.num_runs` training curves. Run `i` depends only on
/// `(spec, i)`, so extending `num_runs` keeps earlier runs bit-identical.
pub fn generate_curves(spec: &SynthSpec) -> Result<Vec<TrainingCurve>, SynthError> {
    validate(spec)?;
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|_| SynthError::BadSigma(spec.noise_sigma))?;
    let mut curves = Vec::with_capacity(spec.num_runs as usize);
    for run in 0..spec.num_runs {
        let mut rng = seeding::stream_rng(spec.seed, SYNTH_CURVE, &[u64::from(run)]);
        let mut points = Vec::with_capacity(spec.num_points as usize);
        let mut level = spec.intercept;
        for i in 0..u64::from(spec.num_points) {
            let step = i * spec.step_interval;
            let eps: f64 = noise.sample(&mut rng);
            let base = match spec.process {
                ProcessKind::DifferenceStationary => {
                    if i > 0 {
                        level += spec.slope * spec.step_interval as f64;
                    }
                    level += eps;
                    // Undo transient treatment: for a random walk the shock
                    // stays in the level permanently.
                    level
                }
                ProcessKind::TrendStationary => spec.intercept + spec.slope * step as f64 + eps,
            };
            // The drop draw happens on every point regardless of the
            // parameters so the noise stream above never shifts.
            let u: f64 = rng.random();
            let value =
                if u < spec.drop_probability { base - spec.drop_magnitude } else { base };
            points.push(EvaluationPoint { step, value });
        }
        curves.push(TrainingCurve::new(
            spec.algorithm.clone(),
            spec.task.clone(),
            format!("run{run:04}"),
            points,
        )?);
    }
    Ok(curves)
}

/// Draws `n` Gaussian rollout scores for one fixed policy, deterministic in
/// `seed` alone.
pub fn generate_rollouts(
    algorithm: &str,
    task: &str,
    run: &str,
    mean: f64,
    sigma: f64,
    n: u32,
    seed: u64,
) -> Result<RolloutSet, SynthError> {
    if n == 0 {
        return Err(SynthError::NoPoints);
    }
    if !mean.is_finite() {
        return Err(SynthError::NonFinite("mean"));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(SynthError::BadSigma(sigma));
    }
    let noise = Normal::new(mean, sigma).map_err(|_| SynthError::BadSigma(sigma))?;
    let mut rng = seeding::stream_rng(seed, SYNTH_ROLLOUT, &[]);
    let scores: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
    Ok(RolloutSet::new(
        String::from(algorithm),
        String::from(task),
        String::from(run),
        scores,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn base_spec() -> SynthSpec {
        SynthSpec {
            algorithm: "a".to_string(),
            task: "t".to_string(),
            intercept: 1.0,
            slope: 0.5,
            noise_sigma: 2.0,
            drop_magnitude: 0.0,
            drop_probability: 0.0,
            process: ProcessKind::TrendStationary,
            num_runs: 3,
            num_points: 50,
            step_interval: 4,
            seed: 7,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = base_spec();
        assert_eq!(generate_curves(&spec).unwrap(), generate_curves(&spec).unwrap());
    }

    #[test]
    fn runs_are_stable_under_num_runs_extension() {
        let mut spec = base_spec();
        spec.num_runs = 1;
        let one = generate_curves(&spec).unwrap();
        spec.num_runs = 4;
        let four = generate_curves(&spec).unwrap();
        assert_eq!(one[0], four[0]);
        assert_ne!(four[0].values(), four[1].values());
    }

    #[test]
    fn noiseless_trend_stationary_is_the_trend_line() {
        let mut spec = base_spec();
        spec.noise_sigma = 0.0;
        let curves = generate_curves(&spec).unwrap();
        for (i, p) in curves[0].points.iter().enumerate() {
            assert_eq!(p.step, i as u64 * 4);
            assert!((p.value - (1.0 + 0.5 * p.step as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_difference_stationary_matches_the_trend_line() {
        let mut spec = base_spec();
        spec.noise_sigma = 0.0;
        spec.process = ProcessKind::DifferenceStationary;
        let curves = generate_curves(&spec).unwrap();
        for p in &curves[0].points {
            assert!((p.value - (1.0 + 0.5 * p.step as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn drops_do_not_disturb_the_noise_stream() {
        let clean = base_spec();
        let mut dropped = base_spec();
        dropped.drop_probability = 0.5;
        dropped.drop_magnitude = 100.0;
        let a = generate_curves(&clean).unwrap();
        let c = generate_curves(&dropped).unwrap();
        let mut fired = 0;
        for (pa, pc) in a[0].points.iter().zip(&c[0].points) {
            if pc.value == pa.value - 100.0 {
                fired += 1;
            } else {
                assert_eq!(pc.value, pa.value);
            }
        }
        assert!(fired > 0, "no drop fired across 50 points at p = 0.5");
    }

    #[test]
    fn certain_drops_lower_every_point() {
        let mut spec = base_spec();
        spec.drop_probability = 1.0;
        spec.drop_magnitude = 3.0;
        let base = generate_curves(&base_spec()).unwrap();
        let dropped = generate_curves(&spec).unwrap();
        for (pb, pd) in base[0].points.iter().zip(&dropped[0].points) {
            assert_eq!(pd.value, pb.value - 3.0);
        }
    }

    #[test]
    fn random_walk_accumulates_more_spread_than_trend_reverting() {
        let mut ts = base_spec();
        ts.num_points = 200;
        ts.num_runs = 30;
        let mut ds = ts.clone();
        ds.process = ProcessKind::DifferenceStationary;
        // Across-run spread of the residual at the last point: O(sigma) for
        // trend-stationary, O(sigma * sqrt(num_points)) for a random walk.
        let spread = |curves: &[TrainingCurve]| {
            let finals: Vec<f64> = curves
                .iter()
                .map(|c| {
                    let p = c.points.last().unwrap();
                    p.value - (1.0 + 0.5 * p.step as f64)
                })
                .collect();
            crate::robust_stats::iqr(&finals).unwrap()
        };
        let s_ts = spread(&generate_curves(&ts).unwrap());
        let s_ds = spread(&generate_curves(&ds).unwrap());
        assert!(s_ds > s_ts * 5.0, "walk spread {s_ds} vs trend spread {s_ts}");
    }

    #[test]
    fn rollouts_are_deterministic_and_centered() {
        let a = generate_rollouts("a", "t", "run0000", 5.0, 1.0, 4000, 3).unwrap();
        let b = generate_rollouts("a", "t", "run0000", 5.0, 1.0, 4000, 3).unwrap();
        assert_eq!(a, b);
        let mean = a.scores.iter().sum::<f64>() / a.scores.len() as f64;
        assert!((mean - 5.0).abs() < 0.1, "sample mean {mean}");
        assert_ne!(
            a.scores,
            generate_rollouts("a", "t", "run0000", 5.0, 1.0, 4000, 4).unwrap().scores
        );
    }

    #[test]
    fn zero_sigma_rollouts_are_constant() {
        let r = generate_rollouts("a", "t", "r", 2.5, 0.0, 10, 0).unwrap();
        assert!(r.scores.iter().all(|&s| s == 2.5));
    }

    #[test]
    fn invalid_parameters_are_refused() {
        let mut spec = base_spec();
        spec.num_runs = 0;
        assert_eq!(generate_curves(&spec).unwrap_err(), SynthError::NoRuns);
        let mut spec = base_spec();
        spec.drop_probability = 1.5;
        assert_eq!(generate_curves(&spec).unwrap_err(), SynthError::BadProbability(1.5));
        let mut spec = base_spec();
        spec.noise_sigma = f64::NAN;
        assert!(matches!(generate_curves(&spec).unwrap_err(), SynthError::BadSigma(_)));
        assert_eq!(
            generate_rollouts("a", "t", "r", 0.0, 1.0, 0, 0).unwrap_err(),
            SynthError::NoPoints
        );
    }
}
