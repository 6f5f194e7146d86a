//! The seven reliability metrics, median performance, normalization, and
//! time-frame collapse.
//!
//! Metric axes:
//!
//! * **During training, per run** — DT (dispersion across time: trailing-window
//!   IQR of the differenced curve), SRT (short-term risk: CVaR of per-step
//!   differences), LRT (long-term risk: magnitude of CVaR of drawdown).
//! * **During training, across runs** — DR (IQR across runs of low-pass
//!   filtered curves), RR (CVaR of final performances across runs).
//! * **After learning, across rollouts** — DF (IQR of rollout scores), RF
//!   (CVaR of rollout scores), both over the pooled rollouts of every policy
//!   the algorithm produced on the task.
//! * **Performance** — median performance (MEDIAN_PERF), reported alongside
//!   reliability so rankings can show both.
//!
//! Orientation is fixed per metric: dispersion-style metrics (DT, LRT, DR,
//! DF) are lower-is-better; CVaR-style tail scores (SRT, RR, RF) and median
//! performance are higher-is-better. LRT is the exception among CVaR metrics
//! because it is reported as the *magnitude* of the drawdown tail.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AnalysisConfig, NormalizationMode};
use crate::data::{Dataset, RolloutSet, TrainingCurve};
use crate::robust_stats::{self, StatsError};
use crate::timeseries::{self, SeriesError};

/// Identifier of a reliability metric (or median performance).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    #[serde(rename = "DT")]
    Dt,
    #[serde(rename = "SRT")]
    Srt,
    #[serde(rename = "LRT")]
    Lrt,
    #[serde(rename = "DR")]
    Dr,
    #[serde(rename = "RR")]
    Rr,
    #[serde(rename = "DF")]
    Df,
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "MEDIAN_PERF")]
    MedianPerf,
}

impl MetricId {
    pub const ALL: [MetricId; 8] = [
        MetricId::Dt,
        MetricId::Srt,
        MetricId::Lrt,
        MetricId::Dr,
        MetricId::Rr,
        MetricId::Df,
        MetricId::Rf,
        MetricId::MedianPerf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Dt => "DT",
            MetricId::Srt => "SRT",
            MetricId::Lrt => "LRT",
            MetricId::Dr => "DR",
            MetricId::Rr => "RR",
            MetricId::Df => "DF",
            MetricId::Rf => "RF",
            MetricId::MedianPerf => "MEDIAN_PERF",
        }
    }

    /// Which direction counts as rank 1.
    pub fn orientation(self) -> Orientation {
        match self {
            MetricId::Dt | MetricId::Lrt | MetricId::Dr | MetricId::Df => {
                Orientation::LowerIsBetter
            }
            MetricId::Srt | MetricId::Rr | MetricId::Rf | MetricId::MedianPerf => {
                Orientation::HigherIsBetter
            }
        }
    }

    /// Metrics computed once per training run.
    pub fn is_per_run(self) -> bool {
        matches!(self, MetricId::Dt | MetricId::Srt | MetricId::Lrt)
    }

    /// Metrics measured on training curves (as opposed to fixed-policy
    /// rollouts after learning).
    pub fn is_during_training(self) -> bool {
        !matches!(self, MetricId::Df | MetricId::Rf)
    }

    /// Metrics that produce a per-step series collapsed into time frames.
    pub fn has_timeframes(self) -> bool {
        matches!(self, MetricId::Dt | MetricId::Dr)
    }
}

impl core::fmt::Display for MetricId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether smaller or larger values earn the better (lower) rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LowerIsBetter,
    HigherIsBetter,
}

/// A metric value with full provenance.
///
/// `run_id` is present exactly for per-run metrics; `step` only on per-step
/// series entries (before time-frame collapse); `timeframe` only after
/// collapse. `unnormalizable` marks values whose normalization divisor was
/// unavailable or nonpositive — they are excluded from rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub metric_id: MetricId,
    pub algorithm: String,
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeframe: Option<u32>,
    pub value: f64,
    pub normalized: bool,
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub unnormalizable: bool,
    pub orientation: Orientation,
}

impl MetricResult {
    fn new(metric_id: MetricId, algorithm: &str, task: &str, value: f64) -> Self {
        Self {
            metric_id,
            algorithm: String::from(algorithm),
            task: String::from(task),
            run_id: None,
            step: None,
            timeframe: None,
            value,
            normalized: false,
            unnormalizable: false,
            orientation: metric_id.orientation(),
        }
    }

    fn with_run(mut self, run: &str) -> Self {
        self.run_id = Some(String::from(run));
        self
    }
}

/// Why a metric could not be computed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("no curves supplied")]
    NoCurves,
    #[error("no rollout sets supplied")]
    NoRollouts,
    #[error("inputs mix identities: expected {expected_algorithm}/{expected_task}, found {found_algorithm}/{found_task}")]
    MixedIdentity {
        expected_algorithm: String,
        expected_task: String,
        found_algorithm: String,
        found_task: String,
    },
    #[error("runs of {algorithm}/{task} do not share one evaluation grid (run {run} differs)")]
    GridMismatch { algorithm: String, task: String, run: String },
    #[error("metric needs at least {needed} runs, got {got}")]
    TooFewRuns { needed: usize, got: usize },
    #[error("metric needs at least {needed} scores, got {got}")]
    TooFewScores { needed: usize, got: usize },
    #[error("baseline upper and lower scores are both {0}; cannot scale")]
    DegenerateBaselines(f64),
    #[error("normalization context has no entry for {algorithm}/{task}")]
    MissingContext { algorithm: String, task: String },
    #[error("time-frame collapse needs a non-empty per-step series")]
    CollapseEmpty,
    #[error("time-frame collapse input mixes series (expected one metric/algorithm/task/run)")]
    CollapseMixed,
    #[error("time-frame collapse input has an entry without a step")]
    CollapseMissingStep,
}

fn require_uniform_identity<'a, I>(mut identities: I) -> Result<(&'a str, &'a str), MetricError>
where
    I: Iterator<Item = (&'a str, &'a str)>,
{
    let (algorithm, task) = identities.next().ok_or(MetricError::NoCurves)?;
    for (a, t) in identities {
        if a != algorithm || t != task {
            return Err(MetricError::MixedIdentity {
                expected_algorithm: String::from(algorithm),
                expected_task: String::from(task),
                found_algorithm: String::from(a),
                found_task: String::from(t),
            });
        }
    }
    Ok((algorithm, task))
}

/// DT — dispersion across time. IQR of the differenced curve inside each
/// supported trailing window; one result per supported evaluation step.
/// Lower is better.
pub fn dispersion_across_time(
    curve: &TrainingCurve,
    cfg: &AnalysisConfig,
) -> Result<Vec<MetricResult>, MetricError> {
    let diffs = timeseries::difference(&curve.points, false)?;
    let windows = timeseries::sliding_window_iqr(&diffs, &cfg.window_size)?;
    Ok(windows
        .into_iter()
        .map(|p| {
            let mut r = MetricResult::new(MetricId::Dt, &curve.algorithm, &curve.task, p.value)
                .with_run(&curve.run);
            r.step = Some(p.step);
            r
        })
        .collect())
}

/// SRT — short-term risk. CVaR of the per-step-normalized differences: the
/// expected drop between consecutive evaluations, conditioned on the worst
/// `alpha` tail. Higher (less negative) is better.
pub fn short_term_risk(
    curve: &TrainingCurve,
    cfg: &AnalysisConfig,
) -> Result<MetricResult, MetricError> {
    let diffs = timeseries::difference(&curve.points, true)?;
    let value = robust_stats::cvar(&diffs.values(), cfg.cvar_alpha)?;
    Ok(MetricResult::new(MetricId::Srt, &curve.algorithm, &curve.task, value)
        .with_run(&curve.run))
}

/// LRT — long-term risk. Magnitude of the CVaR of the drawdown series: how
/// far the curve sits below its running peak in the worst `alpha` tail.
/// Nonnegative; lower is better.
pub fn long_term_risk(
    curve: &TrainingCurve,
    cfg: &AnalysisConfig,
) -> Result<MetricResult, MetricError> {
    let dd = timeseries::drawdown(&curve.points)?;
    let value = -robust_stats::cvar(&dd.values(), cfg.cvar_alpha)?;
    Ok(MetricResult::new(MetricId::Lrt, &curve.algorithm, &curve.task, value)
        .with_run(&curve.run))
}

fn shared_grid<'a>(curves: &'a [TrainingCurve]) -> Result<&'a [TrainingCurve], MetricError> {
    let first = &curves[0];
    for c in &curves[1..] {
        let same = c.points.len() == first.points.len()
            && c.points.iter().zip(&first.points).all(|(a, b)| a.step == b.step);
        if !same {
            return Err(MetricError::GridMismatch {
                algorithm: c.algorithm.clone(),
                task: c.task.clone(),
                run: c.run.clone(),
            });
        }
    }
    Ok(curves)
}

/// DR — dispersion across runs. Runs are low-pass filtered, then the IQR
/// across runs is taken at every shared evaluation step; one result per
/// step. Requires ≥ 2 runs on one grid. Lower is better.
pub fn dispersion_across_runs(
    curves: &[TrainingCurve],
    cfg: &AnalysisConfig,
) -> Result<Vec<MetricResult>, MetricError> {
    let (algorithm, task) =
        require_uniform_identity(curves.iter().map(|c| (c.algorithm.as_str(), c.task.as_str())))?;
    if curves.len() < 2 {
        return Err(MetricError::TooFewRuns { needed: 2, got: curves.len() });
    }
    shared_grid(curves)?;
    let filtered: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| timeseries::lowpass_filter(&c.values(), cfg.lowpass_window))
        .collect::<Result<_, _>>()?;
    let steps: Vec<u64> = curves[0].points.iter().map(|p| p.step).collect();
    let mut out = Vec::with_capacity(steps.len());
    let mut at_step = Vec::with_capacity(filtered.len());
    for (i, &step) in steps.iter().enumerate() {
        at_step.clear();
        at_step.extend(filtered.iter().map(|run| run[i]));
        let mut r =
            MetricResult::new(MetricId::Dr, algorithm, task, robust_stats::iqr(&at_step)?);
        r.step = Some(step);
        out.push(r);
    }
    Ok(out)
}

/// RR — risk across runs. CVaR of the final performances of the runs (mean
/// of each run's last `final_perf_window` scores). Higher is better.
pub fn risk_across_runs(
    curves: &[TrainingCurve],
    cfg: &AnalysisConfig,
) -> Result<MetricResult, MetricError> {
    let (algorithm, task) =
        require_uniform_identity(curves.iter().map(|c| (c.algorithm.as_str(), c.task.as_str())))?;
    let finals: Vec<f64> = curves.iter().map(|c| c.final_performance(cfg.final_perf_window)).collect();
    let value = robust_stats::cvar(&finals, cfg.cvar_alpha)?;
    Ok(MetricResult::new(MetricId::Rr, algorithm, task, value))
}

fn pooled_scores(sets: &[RolloutSet]) -> Result<(&str, &str, Vec<f64>), MetricError> {
    if sets.is_empty() {
        return Err(MetricError::NoRollouts);
    }
    let (algorithm, task) =
        require_uniform_identity(sets.iter().map(|s| (s.algorithm.as_str(), s.task.as_str())))?;
    let scores: Vec<f64> = sets.iter().flat_map(|s| s.scores.iter().copied()).collect();
    Ok((algorithm, task, scores))
}

/// DF — dispersion across fixed-policy rollouts: IQR of the rollout scores,
/// pooled over every policy (run) in `sets`. Requires ≥ 2 scores. Lower is
/// better.
pub fn dispersion_fixed_policy(sets: &[RolloutSet]) -> Result<MetricResult, MetricError> {
    let (algorithm, task, scores) = pooled_scores(sets)?;
    if scores.len() < 2 {
        return Err(MetricError::TooFewScores { needed: 2, got: scores.len() });
    }
    Ok(MetricResult::new(MetricId::Df, algorithm, task, robust_stats::iqr(&scores)?))
}

/// RF — risk across fixed-policy rollouts: CVaR of the pooled rollout
/// scores. Higher is better.
pub fn risk_fixed_policy(
    sets: &[RolloutSet],
    cfg: &AnalysisConfig,
) -> Result<MetricResult, MetricError> {
    let (algorithm, task, scores) = pooled_scores(sets)?;
    let value = robust_stats::cvar(&scores, cfg.cvar_alpha)?;
    Ok(MetricResult::new(MetricId::Rf, algorithm, task, value))
}

/// Optional lower/upper reference scores (e.g. random and expert agents)
/// mapping raw scores onto a baseline-relative scale before the median is
/// taken: `(p - lower) / (upper - lower)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub lower: f64,
    pub upper: f64,
}

/// What median performance is measured over.
#[derive(Debug, Clone, Copy)]
pub enum PerformanceInput<'a> {
    /// Final performances of training runs.
    Curves(&'a [TrainingCurve]),
    /// Pooled fixed-policy rollout scores.
    Rollouts(&'a [RolloutSet]),
}

/// MEDIAN_PERF — median of final training performances (or of pooled
/// rollout scores), optionally baseline-scaled. Higher is better.
pub fn median_performance(
    input: PerformanceInput<'_>,
    cfg: &AnalysisConfig,
    baselines: Option<Baselines>,
) -> Result<MetricResult, MetricError> {
    if let Some(b) = baselines {
        if b.upper == b.lower {
            return Err(MetricError::DegenerateBaselines(b.upper));
        }
    }
    let scale = |p: f64| match baselines {
        Some(b) => (p - b.lower) / (b.upper - b.lower),
        None => p,
    };
    let (algorithm, task, scores) = match input {
        PerformanceInput::Curves(curves) => {
            let (algorithm, task) = require_uniform_identity(
                curves.iter().map(|c| (c.algorithm.as_str(), c.task.as_str())),
            )?;
            let finals = curves
                .iter()
                .map(|c| scale(c.final_performance(cfg.final_perf_window)))
                .collect();
            (algorithm, task, finals)
        }
        PerformanceInput::Rollouts(sets) => {
            let (algorithm, task, raw) = pooled_scores(sets)?;
            (algorithm, task, raw.into_iter().map(scale).collect::<Vec<f64>>())
        }
    };
    let value = robust_stats::median(&scores)?;
    Ok(MetricResult::new(MetricId::MedianPerf, algorithm, task, value))
}

/// Per-(algorithm, task) scale factors used by [`normalize_metrics`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Factors {
    /// Median across runs of each run's performance range (95th percentile
    /// of its scores minus its initial score). `None` without curves.
    pub median_range: Option<f64>,
    /// Median pooled rollout score, falling back to the median final
    /// training performance when the pair has no rollouts.
    pub median_perf: Option<f64>,
}

/// Scale factors for every (algorithm, task) pair in a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizationContext {
    factors: BTreeMap<(String, String), Factors>,
}

impl NormalizationContext {
    pub fn get(&self, algorithm: &str, task: &str) -> Option<&Factors> {
        self.factors.get(&(String::from(algorithm), String::from(task)))
    }
}

/// Computes normalization factors from the raw dataset.
pub fn normalization_context(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
) -> Result<NormalizationContext, MetricError> {
    let mut factors: BTreeMap<(String, String), Factors> = BTreeMap::new();
    for (key, curves) in dataset.curve_groups() {
        let mut ranges = Vec::with_capacity(curves.len());
        for c in curves {
            let values = c.values();
            ranges.push(robust_stats::percentile(&values, 95.0)? - values[0]);
        }
        let finals: Vec<f64> =
            curves.iter().map(|c| c.final_performance(cfg.final_perf_window)).collect();
        factors.insert(
            key.clone(),
            Factors {
                median_range: Some(robust_stats::median(&ranges)?),
                median_perf: Some(robust_stats::median(&finals)?),
            },
        );
    }
    for (key, sets) in dataset.rollout_groups() {
        let scores: Vec<f64> = sets.iter().flat_map(|s| s.scores.iter().copied()).collect();
        let median_perf = Some(robust_stats::median(&scores)?);
        factors.entry(key.clone()).or_default().median_perf = median_perf;
    }
    Ok(NormalizationContext { factors })
}

/// Output of [`normalize_metrics`]: rescaled results plus human-readable
/// notes about values that could not be normalized.
#[derive(Debug, Clone)]
pub struct NormalizedMetrics {
    pub results: Vec<MetricResult>,
    pub notes: Vec<String>,
}

/// Rescales metric values so they are comparable across tasks.
///
/// Under [`NormalizationMode::MedianRange`], during-training metrics divide
/// by the pair's median performance range and after-learning metrics by its
/// median performance; under [`NormalizationMode::MedianPerformance`]
/// everything divides by median performance. MEDIAN_PERF itself is never
/// rescaled. A missing or nonpositive divisor marks the result
/// `unnormalizable` (excluded from rankings) and adds a note.
pub fn normalize_metrics(
    results: Vec<MetricResult>,
    ctx: &NormalizationContext,
    mode: NormalizationMode,
) -> Result<NormalizedMetrics, MetricError> {
    if mode == NormalizationMode::None {
        return Ok(NormalizedMetrics { results, notes: Vec::new() });
    }
    let mut notes: Vec<String> = Vec::new();
    let mut out = Vec::with_capacity(results.len());
    for mut r in results {
        if r.metric_id == MetricId::MedianPerf {
            out.push(r);
            continue;
        }
        let factors = ctx.get(&r.algorithm, &r.task).ok_or_else(|| {
            MetricError::MissingContext { algorithm: r.algorithm.clone(), task: r.task.clone() }
        })?;
        let divisor = normalization_divisor(r.metric_id, factors, mode);
        match divisor {
            Some(d) if d > 0.0 && d.is_finite() => {
                r.value /= d;
                r.normalized = true;
            }
            _ => {
                r.unnormalizable = true;
                let note = format!(
                    "{} for {}/{} left unnormalized: {} divisor; excluded from rankings",
                    r.metric_id,
                    r.algorithm,
                    r.task,
                    if divisor.is_none() { "missing" } else { "nonpositive" },
                );
                if !notes.contains(&note) {
                    notes.push(note);
                }
            }
        }
        out.push(r);
    }
    Ok(NormalizedMetrics { results: out, notes })
}

/// Divisor [`normalize_metrics`] applies to `metric` under `mode`, given a
/// pair's factors. `None` means the value is left as-is (MEDIAN_PERF, mode
/// `none`, or the dataset never produced the needed factor); callers must
/// still reject nonpositive or non-finite divisors.
pub fn normalization_divisor(
    metric: MetricId,
    factors: &Factors,
    mode: NormalizationMode,
) -> Option<f64> {
    if metric == MetricId::MedianPerf {
        return None;
    }
    match mode {
        NormalizationMode::None => None,
        NormalizationMode::MedianRange => {
            if metric.is_during_training() {
                factors.median_range
            } else {
                factors.median_perf
            }
        }
        NormalizationMode::MedianPerformance => factors.median_perf,
    }
}

/// Frame a step lands in when `[min, max]` is cut into `frames` equal spans.
/// Integer arithmetic keeps the boundaries exact; the top step is clamped
/// into the last frame.
pub(crate) fn frame_index(step: u64, min: u64, max: u64, frames: u32) -> u32 {
    if max == min {
        return 0;
    }
    let f = ((step - min) as u128 * frames as u128) / (max - min) as u128;
    (f as u32).min(frames - 1)
}

/// Output of [`collapse_timeframes`]: one aggregated result per non-empty
/// frame, plus the indices of frames that received no points.
#[derive(Debug, Clone)]
pub struct CollapsedSeries {
    pub results: Vec<MetricResult>,
    pub empty_frames: Vec<u32>,
}

/// Collapses one per-step series into `cfg.num_timeframes` contiguous equal
/// spans of its step range, taking the median within each frame. Empty
/// frames are omitted and reported in `empty_frames`.
pub fn collapse_timeframes(
    results: &[MetricResult],
    cfg: &AnalysisConfig,
) -> Result<CollapsedSeries, MetricError> {
    let first = results.first().ok_or(MetricError::CollapseEmpty)?;
    if results.iter().any(|r| {
        r.metric_id != first.metric_id
            || r.algorithm != first.algorithm
            || r.task != first.task
            || r.run_id != first.run_id
            || r.normalized != first.normalized
            || r.unnormalizable != first.unnormalizable
    }) {
        return Err(MetricError::CollapseMixed);
    }
    let steps: Vec<u64> = results
        .iter()
        .map(|r| r.step.ok_or(MetricError::CollapseMissingStep))
        .collect::<Result<_, _>>()?;
    let frames = cfg.num_timeframes;
    let min = *steps.iter().min().expect("non-empty");
    let max = *steps.iter().max().expect("non-empty");
    let mut buckets: Vec<Vec<f64>> = alloc::vec![Vec::new(); frames as usize];
    for (r, &s) in results.iter().zip(&steps) {
        buckets[frame_index(s, min, max, frames) as usize].push(r.value);
    }
    let mut collapsed = Vec::new();
    let mut empty_frames = Vec::new();
    for (f, bucket) in buckets.iter().enumerate() {
        if bucket.is_empty() {
            empty_frames.push(f as u32);
            continue;
        }
        let mut r = first.clone();
        r.step = None;
        r.timeframe = Some(f as u32);
        r.value = robust_stats::median(bucket)?;
        collapsed.push(r);
    }
    Ok(CollapsedSeries { results: collapsed, empty_frames })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{WindowSpec, WindowUnit};
    use crate::data::EvaluationPoint;
    use alloc::string::ToString;
    use alloc::vec;

    fn curve(algorithm: &str, task: &str, run: &str, pts: &[(u64, f64)]) -> TrainingCurve {
        TrainingCurve::new(
            algorithm.to_string(),
            task.to_string(),
            run.to_string(),
            pts.iter().map(|&(step, value)| EvaluationPoint { step, value }).collect(),
        )
        .unwrap()
    }

    fn rollouts(algorithm: &str, task: &str, run: &str, scores: &[f64]) -> RolloutSet {
        RolloutSet::new(algorithm.to_string(), task.to_string(), run.to_string(), scores.to_vec())
            .unwrap()
    }

    fn cfg() -> AnalysisConfig {
        AnalysisConfig::default()
    }

    #[test]
    fn dt_is_zero_on_a_noiseless_linear_curve() {
        let pts: Vec<(u64, f64)> = (0..40).map(|i| (i, 3.0 * i as f64 + 1.0)).collect();
        let c = curve("a", "t", "r0", &pts);
        let mut config = cfg();
        config.window_size = WindowSpec { size: 5, unit: WindowUnit::EvalPoints };
        let results = dispersion_across_time(&c, &config).unwrap();
        assert!(!results.is_empty());
        for r in &results {
            assert!(r.value.abs() <= 1e-12, "DT {} at step {:?}", r.value, r.step);
            assert_eq!(r.run_id.as_deref(), Some("r0"));
            assert_eq!(r.orientation, Orientation::LowerIsBetter);
        }
    }

    #[test]
    fn srt_worked_value() {
        // scores [0, 10, 4] at steps [0, 2, 4]: per-step diffs {5, -3};
        // alpha = 0.5 -> k = 1 -> CVaR = -3.
        let c = curve("a", "t", "r0", &[(0, 0.0), (2, 10.0), (4, 4.0)]);
        let mut config = cfg();
        config.cvar_alpha = 0.5;
        let r = short_term_risk(&c, &config).unwrap();
        assert_eq!(r.value, -3.0);
        assert_eq!(r.metric_id, MetricId::Srt);
        assert_eq!(r.orientation, Orientation::HigherIsBetter);
    }

    #[test]
    fn lrt_worked_value() {
        // drawdown of [3,5,4,6,2] = [0,0,-1,0,-4]; alpha = 0.2 -> k = 1 ->
        // CVaR = -4 -> LRT = 4.
        let c = curve("a", "t", "r0", &[(0, 3.0), (1, 5.0), (2, 4.0), (3, 6.0), (4, 2.0)]);
        let mut config = cfg();
        config.cvar_alpha = 0.2;
        let r = long_term_risk(&c, &config).unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.orientation, Orientation::LowerIsBetter);
    }

    #[test]
    fn lrt_of_monotone_curve_is_exactly_zero() {
        let pts: Vec<(u64, f64)> = (0..30).map(|i| (i, (i * i) as f64)).collect();
        let c = curve("a", "t", "r0", &pts);
        assert_eq!(long_term_risk(&c, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn dr_worked_value_on_two_constant_runs() {
        // Two constant runs at 0 and 10 with identity filter: IQR of {0, 10}
        // is p75 - p25 = 7.5 - 2.5 = 5 at every step.
        let a = curve("a", "t", "r0", &[(0, 0.0), (1, 0.0), (2, 0.0)]);
        let b = curve("a", "t", "r1", &[(0, 10.0), (1, 10.0), (2, 10.0)]);
        let mut config = cfg();
        config.lowpass_window = 1;
        let results = dispersion_across_runs(&[a, b], &config).unwrap();
        assert_eq!(results.len(), 3);
        for r in &results {
            assert_eq!(r.value, 5.0);
            assert_eq!(r.run_id, None);
        }
    }

    #[test]
    fn dr_requires_two_runs_and_one_grid() {
        let a = curve("a", "t", "r0", &[(0, 0.0), (1, 0.0)]);
        assert!(matches!(
            dispersion_across_runs(core::slice::from_ref(&a), &cfg()),
            Err(MetricError::TooFewRuns { needed: 2, got: 1 })
        ));
        let b = curve("a", "t", "r1", &[(0, 0.0), (2, 0.0)]);
        assert!(matches!(
            dispersion_across_runs(&[a, b], &cfg()),
            Err(MetricError::GridMismatch { .. })
        ));
    }

    #[test]
    fn rr_worked_value() {
        // finals {10, 20, 30, 40}, alpha 0.5 -> mean of 2 smallest = 15.
        let curves: Vec<TrainingCurve> = [10.0, 20.0, 30.0, 40.0]
            .iter()
            .enumerate()
            .map(|(i, &f)| curve("a", "t", &format!("r{i}"), &[(0, 0.0), (1, f)]))
            .collect();
        let mut config = cfg();
        config.cvar_alpha = 0.5;
        assert_eq!(risk_across_runs(&curves, &config).unwrap().value, 15.0);
    }

    #[test]
    fn final_perf_window_averages_before_rr() {
        let curves = vec![curve("a", "t", "r0", &[(0, 0.0), (1, 2.0), (2, 4.0)])];
        let mut config = cfg();
        config.cvar_alpha = 0.5;
        config.final_perf_window = 2;
        assert_eq!(risk_across_runs(&curves, &config).unwrap().value, 3.0);
    }

    #[test]
    fn df_and_rf_pool_rollout_scores() {
        let sets = [
            rollouts("a", "t", "r0", &[1.0, 2.0]),
            rollouts("a", "t", "r1", &[3.0, 4.0]),
        ];
        assert_eq!(dispersion_fixed_policy(&sets).unwrap().value, 1.5);

        let pool: Vec<f64> = (1..=20).map(|v| v as f64).collect();
        let sets = [rollouts("a", "t", "r0", &pool)];
        let mut config = cfg();
        config.cvar_alpha = 0.25;
        assert_eq!(risk_fixed_policy(&sets, &config).unwrap().value, 3.0);
    }

    #[test]
    fn df_requires_two_scores() {
        let sets = [rollouts("a", "t", "r0", &[1.0])];
        assert!(matches!(
            dispersion_fixed_policy(&sets),
            Err(MetricError::TooFewScores { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn median_perf_with_baselines() {
        let sets = [rollouts("a", "t", "r0", &[10.0, 20.0, 30.0])];
        let r = median_performance(
            PerformanceInput::Rollouts(&sets),
            &cfg(),
            Some(Baselines { lower: 10.0, upper: 30.0 }),
        )
        .unwrap();
        assert_eq!(r.value, 0.5);

        assert!(matches!(
            median_performance(
                PerformanceInput::Rollouts(&sets),
                &cfg(),
                Some(Baselines { lower: 5.0, upper: 5.0 }),
            ),
            Err(MetricError::DegenerateBaselines(_))
        ));
    }

    #[test]
    fn mixed_identities_are_rejected() {
        let a = curve("a", "t", "r0", &[(0, 0.0), (1, 1.0)]);
        let b = curve("b", "t", "r0", &[(0, 0.0), (1, 1.0)]);
        assert!(matches!(
            risk_across_runs(&[a, b], &cfg()),
            Err(MetricError::MixedIdentity { .. })
        ));
    }

    fn collapse_input(steps_values: &[(u64, f64)]) -> Vec<MetricResult> {
        steps_values
            .iter()
            .map(|&(step, value)| {
                let mut r = MetricResult::new(MetricId::Dt, "a", "t", value).with_run("r0");
                r.step = Some(step);
                r
            })
            .collect()
    }

    #[test]
    fn collapse_worked_value() {
        let input = collapse_input(&[
            (0, 1.0),
            (1, 2.0),
            (2, 3.0),
            (3, 10.0),
            (4, 20.0),
            (5, 30.0),
        ]);
        let mut config = cfg();
        config.num_timeframes = 2;
        let out = collapse_timeframes(&input, &config).unwrap();
        assert!(out.empty_frames.is_empty());
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.results[0].timeframe, Some(0));
        assert_eq!(out.results[0].value, 2.0);
        assert_eq!(out.results[1].timeframe, Some(1));
        assert_eq!(out.results[1].value, 20.0);
        assert_eq!(out.results[0].step, None);
    }

    #[test]
    fn collapse_single_frame_is_plain_median() {
        let input = collapse_input(&[(0, 5.0), (7, 1.0), (9, 3.0)]);
        let mut config = cfg();
        config.num_timeframes = 1;
        let out = collapse_timeframes(&input, &config).unwrap();
        assert_eq!(out.results.len(), 1);
        assert_eq!(out.results[0].value, 3.0);
    }

    #[test]
    fn collapse_reports_empty_frames() {
        // Steps 0 and 100 with 3 frames: middle frame has no points.
        let input = collapse_input(&[(0, 1.0), (100, 2.0)]);
        let out = collapse_timeframes(&input, &cfg()).unwrap();
        assert_eq!(out.empty_frames, vec![1]);
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.results[0].timeframe, Some(0));
        assert_eq!(out.results[1].timeframe, Some(2));
    }

    #[test]
    fn collapse_rejects_mixed_series() {
        let mut input = collapse_input(&[(0, 1.0), (1, 2.0)]);
        input[1].run_id = Some("other".to_string());
        assert!(matches!(collapse_timeframes(&input, &cfg()), Err(MetricError::CollapseMixed)));
    }

    #[test]
    fn normalization_divides_during_training_by_median_range() {
        // Each run rises from 0 to 10 over 20 points; p95 - p0 per run
        // computes from the sorted scores.
        let runs: Vec<TrainingCurve> = (0..3)
            .map(|r| {
                let pts: Vec<(u64, f64)> = (0..21).map(|i| (i, i as f64 * 0.5)).collect();
                curve("a", "t", &format!("r{r}"), &pts)
            })
            .collect();
        let ds = Dataset::new(runs.clone(), vec![]).unwrap();
        let ctx = normalization_context(&ds, &cfg()).unwrap();
        let factors = ctx.get("a", "t").unwrap();
        let expected_range =
            robust_stats::percentile(&runs[0].values(), 95.0).unwrap() - 0.0;
        assert_eq!(factors.median_range, Some(expected_range));
        assert_eq!(factors.median_perf, Some(10.0));

        let raw = MetricResult::new(MetricId::Lrt, "a", "t", 4.0).with_run("r0");
        let out =
            normalize_metrics(vec![raw], &ctx, NormalizationMode::MedianRange).unwrap();
        assert!(out.results[0].normalized);
        assert_eq!(out.results[0].value, 4.0 / expected_range);
        assert!(out.notes.is_empty());
    }

    #[test]
    fn normalization_flags_nonpositive_divisors() {
        // Flat curves: p95 - p0 = 0 -> median range 0 -> unnormalizable.
        let runs = vec![
            curve("a", "t", "r0", &[(0, 5.0), (1, 5.0)]),
            curve("a", "t", "r1", &[(0, 5.0), (1, 5.0)]),
        ];
        let ds = Dataset::new(runs, vec![]).unwrap();
        let ctx = normalization_context(&ds, &cfg()).unwrap();
        let raw = MetricResult::new(MetricId::Dt, "a", "t", 1.0).with_run("r0");
        let out = normalize_metrics(vec![raw], &ctx, NormalizationMode::MedianRange).unwrap();
        assert!(out.results[0].unnormalizable);
        assert!(!out.results[0].normalized);
        assert_eq!(out.results[0].value, 1.0);
        assert_eq!(out.notes.len(), 1);
    }

    #[test]
    fn median_perf_metric_is_never_range_normalized() {
        let runs = vec![
            curve("a", "t", "r0", &[(0, 0.0), (1, 8.0)]),
            curve("a", "t", "r1", &[(0, 0.0), (1, 12.0)]),
        ];
        let ds = Dataset::new(runs, vec![]).unwrap();
        let ctx = normalization_context(&ds, &cfg()).unwrap();
        let raw = MetricResult::new(MetricId::MedianPerf, "a", "t", 10.0);
        let out = normalize_metrics(vec![raw], &ctx, NormalizationMode::MedianRange).unwrap();
        assert!(!out.results[0].normalized);
        assert_eq!(out.results[0].value, 10.0);
    }

    #[test]
    fn normalization_mode_none_passes_through() {
        let ctx = NormalizationContext::default();
        let raw = MetricResult::new(MetricId::Dt, "a", "t", 2.0);
        let out = normalize_metrics(vec![raw.clone()], &ctx, NormalizationMode::None).unwrap();
        assert_eq!(out.results, vec![raw]);
    }

    #[test]
    fn after_learning_metrics_divide_by_median_perf() {
        let sets = vec![rollouts("a", "t", "r0", &[2.0, 4.0, 6.0])];
        let ds = Dataset::new(vec![], sets).unwrap();
        let ctx = normalization_context(&ds, &cfg()).unwrap();
        assert_eq!(ctx.get("a", "t").unwrap().median_perf, Some(4.0));
        let raw = MetricResult::new(MetricId::Df, "a", "t", 2.0);
        let out = normalize_metrics(vec![raw], &ctx, NormalizationMode::MedianRange).unwrap();
        assert!(out.results[0].normalized);
        assert_eq!(out.results[0].value, 0.5);
    }

    #[test]
    fn metric_ids_serialize_to_schema_names() {
        assert_eq!(serde_json::to_string(&MetricId::MedianPerf).unwrap(), "\"MEDIAN_PERF\"");
        assert_eq!(serde_json::to_string(&MetricId::Dt).unwrap(), "\"DT\"");
        let back: MetricId = serde_json::from_str("\"SRT\"").unwrap();
        assert_eq!(back, MetricId::Srt);
    }
}
