//! Uncertainty for rankings: bootstrap confidence intervals on mean ranks,
//! pairwise permutation tests, and multiple-comparison correction.
//!
//! Both procedures run on a [`Prepared`] metric instance: the per-task
//! resampling ingredients of every algorithm (per-run metric values, final
//! performances, rollout sets, or filtered curves) together with frozen
//! normalization divisors taken from the observed dataset. Freezing the
//! divisors means resampling perturbs the metric values, not the scale they
//! are reported on.
//!
//! Determinism: iteration `i` on task index `t` always draws from
//! `stream_rng(seed, domain, &[i, t])`, with the algorithms of a task
//! consuming the task stream in sorted-name order. Per-iteration outputs are
//! therefore bit-identical however iterations are scheduled, and the
//! reductions (percentiles of collected samples, exceedance counts) do not
//! depend on iteration order — a parallel driver that fans
//! [`bootstrap_iteration`] / [`permutation_iteration`] out over threads
//! reproduces the sequential [`bootstrap_ci`] / [`permutation_test`] results
//! exactly.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AnalysisConfig, CorrectionMethod};
use crate::data::Dataset;
use crate::metrics::{self, MetricError, MetricId, Orientation};
use crate::ranking;
use crate::robust_stats;
use crate::seeding::{
    self,
    domain::{BOOTSTRAP, PERMUTATION},
};

/// One rankable unit of analysis: a metric, plus the time frame for metrics
/// that are collapsed into frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MetricInstance {
    pub metric_id: MetricId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeframe: Option<u32>,
}

impl core::fmt::Display for MetricInstance {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.timeframe {
            Some(t) => write!(f, "{}@frame{}", self.metric_id, t),
            None => write!(f, "{}", self.metric_id),
        }
    }
}

/// The metric instances an analysis covers: every metric, with DT and DR
/// expanded over the selected time frames.
pub fn metric_instances(cfg: &AnalysisConfig) -> Vec<MetricInstance> {
    let frames: Vec<u32> = (0..cfg.num_timeframes).filter(|&f| cfg.frame_selected(f)).collect();
    let mut out = Vec::new();
    for metric_id in MetricId::ALL {
        if metric_id.has_timeframes() {
            out.extend(frames.iter().map(|&f| MetricInstance { metric_id, timeframe: Some(f) }));
        } else {
            out.push(MetricInstance { metric_id, timeframe: None });
        }
    }
    out
}

/// Why a metric instance could not be prepared or tested.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{instance}: time frame {frame} is outside the configured {frames} frames")]
    FrameOutOfRange { instance: MetricInstance, frame: u32, frames: u32 },
    #[error("{0} takes no time frame (or is missing one)")]
    InstanceShape(MetricInstance),
    #[error("{instance}: no task has a defined value for every algorithm")]
    NoUsableTasks { instance: MetricInstance },
    #[error("pairwise comparison needs at least 2 algorithms, got {got}")]
    TooFewAlgorithms { got: usize },
    #[error("unknown algorithm {0}")]
    UnknownAlgorithm(String),
    #[error("cannot compare algorithm {0} with itself")]
    SamePair(String),
    #[error("{instance}: {algorithm_a} and {algorithm_b} use different evaluation grids on task {task}; their runs cannot be pooled")]
    PairGridMismatch {
        instance: MetricInstance,
        task: String,
        algorithm_a: String,
        algorithm_b: String,
    },
}

/// Per-task resampling ingredients for one (algorithm, task) cell.
#[derive(Debug, Clone)]
enum CellData {
    /// Per-run metric values (DT at one frame, SRT, LRT). Resampling unit:
    /// the run's value.
    Values(Vec<f64>),
    /// Per-run final performances (RR, MEDIAN_PERF from curves).
    /// Resampling unit: the run.
    Finals(Vec<f64>),
    /// Per-policy rollout scores (DF, RF, MEDIAN_PERF from rollouts).
    /// Resampling unit: the policy's whole rollout set; scores are pooled
    /// after picking policies.
    Rollouts(Vec<Vec<f64>>),
    /// Low-pass-filtered runs on their shared grid (DR). Resampling unit:
    /// the run; the per-step IQR and frame median are recomputed.
    Filtered { steps: Vec<u64>, runs: Vec<Vec<f64>> },
}

#[derive(Debug, Clone)]
struct Cell {
    data: CellData,
    /// Frozen normalization divisor (1.0 when the value is reported raw).
    divisor: f64,
}

/// A metric instance frozen for resampling: effective tasks, per-cell
/// ingredients and divisors, and the observed (normalized) values and mean
/// ranks.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub instance: MetricInstance,
    /// Sorted algorithm names; indices into all per-algorithm vectors.
    pub algorithms: Vec<String>,
    /// Tasks on which every algorithm has a defined value, sorted.
    pub tasks: Vec<String>,
    /// Tasks dropped and runs skipped on the way here.
    pub warnings: Vec<String>,
    /// Observed normalized value per `[task][algorithm]`.
    pub observed_values: Vec<Vec<f64>>,
    /// Observed mean rank per algorithm.
    pub observed_mean_ranks: Vec<f64>,
    cells: Vec<Vec<Cell>>,
}

fn orientation(instance: MetricInstance) -> Orientation {
    instance.metric_id.orientation()
}

fn aggregate_values(metric: MetricId, cfg: &AnalysisConfig, values: &[f64]) -> f64 {
    match metric {
        MetricId::Rr | MetricId::Rf => {
            robust_stats::cvar(values, cfg.cvar_alpha).expect("non-empty finite cell")
        }
        MetricId::Df => robust_stats::iqr(values).expect("cell checked to hold >= 2 scores"),
        _ => robust_stats::median(values).expect("non-empty finite cell"),
    }
}

fn dr_value(steps: &[u64], runs: &[&[f64]], cfg: &AnalysisConfig, frame: u32) -> f64 {
    let min = steps[0];
    let max = *steps.last().expect("shared grid is non-empty");
    let mut at_step = Vec::with_capacity(runs.len());
    let mut bucket = Vec::new();
    for (i, &step) in steps.iter().enumerate() {
        if metrics::frame_index(step, min, max, cfg.num_timeframes) == frame {
            at_step.clear();
            at_step.extend(runs.iter().map(|r| r[i]));
            bucket.push(robust_stats::iqr(&at_step).expect("cell holds >= 2 runs"));
        }
    }
    robust_stats::median(&bucket).expect("frame checked non-empty at prepare time")
}

fn observed_aggregate(cell: &Cell, instance: MetricInstance, cfg: &AnalysisConfig) -> f64 {
    let raw = match &cell.data {
        CellData::Values(v) | CellData::Finals(v) => aggregate_values(instance.metric_id, cfg, v),
        CellData::Rollouts(sets) => {
            let pooled: Vec<f64> = sets.iter().flatten().copied().collect();
            aggregate_values(instance.metric_id, cfg, &pooled)
        }
        CellData::Filtered { steps, runs } => {
            let refs: Vec<&[f64]> = runs.iter().map(|r| r.as_slice()).collect();
            dr_value(steps, &refs, cfg, instance.timeframe.expect("DR carries a frame"))
        }
    };
    raw / cell.divisor
}

/// Builds one cell's ingredients, or `None` (with a warning) when the
/// algorithm has no defined value on the task.
fn build_cell(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
    instance: MetricInstance,
    algorithm: &str,
    task: &str,
    median_perf_from_rollouts: bool,
    warnings: &mut Vec<String>,
) -> Option<CellData> {
    fn warn(
        warnings: &mut Vec<String>,
        instance: MetricInstance,
        algorithm: &str,
        task: &str,
        reason: &dyn core::fmt::Display,
    ) {
        warnings.push(format!("{instance}: no value for {algorithm} on {task}: {reason}"));
    }
    let metric = instance.metric_id;
    match metric {
        MetricId::Dt | MetricId::Srt | MetricId::Lrt => {
            let curves = dataset.curves_for(algorithm, task)?;
            let mut values = Vec::with_capacity(curves.len());
            for curve in curves {
                let result = match metric {
                    MetricId::Srt => kern_value(metrics::short_term_risk(curve, cfg)),
                    MetricId::Lrt => kern_value(metrics::long_term_risk(curve, cfg)),
                    _ => metrics::dispersion_across_time(curve, cfg).and_then(|series| {
                        let frame = instance.timeframe.expect("DT carries a frame");
                        let collapsed = metrics::collapse_timeframes(&series, cfg)?;
                        Ok(collapsed
                            .results
                            .into_iter()
                            .find(|r| r.timeframe == Some(frame))
                            .map(|r| r.value))
                    }),
                };
                match result {
                    Ok(Some(v)) => values.push(v),
                    Ok(None) => warnings.push(format!(
                        "{instance}: run {} of {algorithm} on {task} has no points in the frame",
                        curve.run
                    )),
                    Err(e) => warnings.push(format!(
                        "{instance}: run {} of {algorithm} on {task} skipped: {e}",
                        curve.run
                    )),
                }
            }
            if values.is_empty() {
                warn(warnings, instance, algorithm, task, &"no run produced a value");
                return None;
            }
            Some(CellData::Values(values))
        }
        MetricId::Dr => {
            let curves = dataset.curves_for(algorithm, task)?;
            match metrics::dispersion_across_runs(curves, cfg) {
                Ok(series) => {
                    let frame = instance.timeframe.expect("DR carries a frame");
                    let steps: Vec<u64> = series.iter().map(|r| r.step.expect("per-step")).collect();
                    let min = steps[0];
                    let max = *steps.last().expect("non-empty");
                    if !steps
                        .iter()
                        .any(|&s| metrics::frame_index(s, min, max, cfg.num_timeframes) == frame)
                    {
                        warn(warnings, instance, algorithm, task, &"the frame holds no evaluation steps");
                        return None;
                    }
                    let runs: Vec<Vec<f64>> = curves
                        .iter()
                        .map(|c| {
                            crate::timeseries::lowpass_filter(&c.values(), cfg.lowpass_window)
                                .expect("validated by dispersion_across_runs")
                        })
                        .collect();
                    Some(CellData::Filtered { steps, runs })
                }
                Err(e) => {
                    warn(warnings, instance, algorithm, task, &e);
                    None
                }
            }
        }
        MetricId::Rr => {
            let curves = dataset.curves_for(algorithm, task)?;
            if curves.len() < 2 {
                warn(warnings, instance, algorithm, task, &"an across-run metric needs at least 2 runs");
                return None;
            }
            Some(CellData::Finals(
                curves.iter().map(|c| c.final_performance(cfg.final_perf_window)).collect(),
            ))
        }
        MetricId::Df | MetricId::Rf => {
            let sets = dataset.rollouts_for(algorithm, task)?;
            if sets.len() < 2 {
                warn(warnings, instance, algorithm, task, &"an across-rollout metric needs at least 2 policies");
                return None;
            }
            Some(CellData::Rollouts(sets.iter().map(|s| s.scores.clone()).collect()))
        }
        MetricId::MedianPerf => {
            if median_perf_from_rollouts {
                let sets = dataset.rollouts_for(algorithm, task)?;
                Some(CellData::Rollouts(sets.iter().map(|s| s.scores.clone()).collect()))
            } else {
                let curves = dataset.curves_for(algorithm, task)?;
                Some(CellData::Finals(
                    curves.iter().map(|c| c.final_performance(cfg.final_perf_window)).collect(),
                ))
            }
        }
    }
}

fn kern_value(r: Result<metrics::MetricResult, MetricError>) -> Result<Option<f64>, MetricError> {
    r.map(|m| Some(m.value))
}

/// Freezes one metric instance for resampling. Tasks where any algorithm
/// lacks a defined (and, when normalization applies, normalizable) value are
/// dropped with a warning; failing every task is an error.
pub fn prepare(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
    instance: MetricInstance,
) -> Result<Prepared, InferenceError> {
    match instance.timeframe {
        Some(f) if !instance.metric_id.has_timeframes() => {
            let _ = f;
            return Err(InferenceError::InstanceShape(instance));
        }
        Some(f) if f >= cfg.num_timeframes => {
            return Err(InferenceError::FrameOutOfRange {
                instance,
                frame: f,
                frames: cfg.num_timeframes,
            });
        }
        None if instance.metric_id.has_timeframes() => {
            return Err(InferenceError::InstanceShape(instance));
        }
        _ => {}
    }

    let algorithms = dataset.algorithms();
    if algorithms.is_empty() {
        return Err(InferenceError::NoUsableTasks { instance });
    }
    let ctx = metrics::normalization_context(dataset, cfg)?;
    let mut warnings = Vec::new();
    let mut tasks = Vec::new();
    let mut cells: Vec<Vec<Cell>> = Vec::new();
    let mut observed_values: Vec<Vec<f64>> = Vec::new();

    'task: for task in dataset.tasks() {
        // MEDIAN_PERF must read every algorithm from the same source on a
        // task: training finals when all have curves, else pooled rollouts.
        let median_perf_from_rollouts = instance.metric_id == MetricId::MedianPerf
            && !algorithms.iter().all(|a| dataset.curves_for(a, &task).is_some());
        let mut row = Vec::with_capacity(algorithms.len());
        for algorithm in &algorithms {
            let Some(data) = build_cell(
                dataset,
                cfg,
                instance,
                algorithm,
                &task,
                median_perf_from_rollouts,
                &mut warnings,
            ) else {
                warnings.push(format!(
                    "{instance}: task {task} dropped ({algorithm} has no value on it)"
                ));
                continue 'task;
            };
            let divisor = match metrics::normalization_divisor(
                instance.metric_id,
                ctx.get(algorithm, &task).expect("context covers every dataset pair"),
                cfg.normalization,
            ) {
                None => 1.0,
                Some(d) if d > 0.0 && d.is_finite() => d,
                Some(_) => {
                    warnings.push(format!(
                        "{instance}: task {task} dropped ({algorithm} has no usable normalization divisor)"
                    ));
                    continue 'task;
                }
            };
            row.push(Cell { data, divisor });
        }
        observed_values
            .push(row.iter().map(|c| observed_aggregate(c, instance, cfg)).collect());
        cells.push(row);
        tasks.push(task);
    }

    if tasks.is_empty() {
        return Err(InferenceError::NoUsableTasks { instance });
    }
    let observed_mean_ranks = ranking::mean_ranks(&observed_values, orientation(instance));
    Ok(Prepared {
        instance,
        algorithms,
        tasks,
        warnings,
        observed_values,
        observed_mean_ranks,
        cells,
    })
}

fn resample_indices(rng: &mut ChaCha8Rng, n: usize, scratch: &mut Vec<usize>) {
    scratch.clear();
    for _ in 0..n {
        scratch.push(rng.random_range(0..n));
    }
}

fn bootstrap_aggregate(
    cell: &Cell,
    instance: MetricInstance,
    cfg: &AnalysisConfig,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let metric = instance.metric_id;
    let mut idx = Vec::new();
    let raw = match &cell.data {
        CellData::Values(v) | CellData::Finals(v) => {
            resample_indices(rng, v.len(), &mut idx);
            let sample: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
            aggregate_values(metric, cfg, &sample)
        }
        CellData::Rollouts(sets) => {
            resample_indices(rng, sets.len(), &mut idx);
            let pooled: Vec<f64> =
                idx.iter().flat_map(|&i| sets[i].iter().copied()).collect();
            aggregate_values(metric, cfg, &pooled)
        }
        CellData::Filtered { steps, runs } => {
            resample_indices(rng, runs.len(), &mut idx);
            let sample: Vec<&[f64]> = idx.iter().map(|&i| runs[i].as_slice()).collect();
            dr_value(steps, &sample, cfg, instance.timeframe.expect("DR carries a frame"))
        }
    };
    raw / cell.divisor
}

/// One bootstrap draw: every cell resampled (runs, policies, or values with
/// replacement), re-aggregated under its frozen divisor, and re-ranked.
/// Returns the mean rank per algorithm. Deterministic in
/// `(cfg.rng_seed, iteration, task index)`.
pub fn bootstrap_iteration(p: &Prepared, cfg: &AnalysisConfig, iteration: u64) -> Vec<f64> {
    let mut values = Vec::with_capacity(p.tasks.len());
    for (t, row) in p.cells.iter().enumerate() {
        let mut rng = seeding::stream_rng(cfg.rng_seed, BOOTSTRAP, &[iteration, t as u64]);
        values.push(
            row.iter()
                .map(|cell| bootstrap_aggregate(cell, p.instance, cfg, &mut rng))
                .collect::<Vec<f64>>(),
        );
    }
    ranking::mean_ranks(&values, orientation(p.instance))
}

/// Bootstrap confidence interval on one algorithm's mean rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCi {
    pub metric_id: MetricId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeframe: Option<u32>,
    pub algorithm: String,
    /// Observed mean rank.
    pub mean_rank: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Bootstrap iterations behind the interval.
    pub num_bootstraps: u32,
}

/// Confidence level of the bootstrap rank intervals (fixed).
pub const CI_LEVEL: f64 = 0.95;

/// Runs `cfg.num_bootstraps` bootstrap iterations and reports the central
/// 95% interval of each algorithm's mean rank.
pub fn bootstrap_ci(p: &Prepared, cfg: &AnalysisConfig) -> Vec<RankCi> {
    let mut samples: Vec<Vec<f64>> =
        alloc::vec![Vec::with_capacity(cfg.num_bootstraps as usize); p.algorithms.len()];
    for iteration in 0..u64::from(cfg.num_bootstraps) {
        for (a, rank) in bootstrap_iteration(p, cfg, iteration).into_iter().enumerate() {
            samples[a].push(rank);
        }
    }
    summarize_bootstrap(p, cfg, samples)
}

/// Builds the interval rows from per-algorithm mean-rank samples (as
/// collected from [`bootstrap_iteration`] in any order).
pub fn summarize_bootstrap(
    p: &Prepared,
    cfg: &AnalysisConfig,
    samples: Vec<Vec<f64>>,
) -> Vec<RankCi> {
    let tail = 100.0 * (1.0 - CI_LEVEL) / 2.0;
    p.algorithms
        .iter()
        .zip(samples)
        .zip(&p.observed_mean_ranks)
        .map(|((algorithm, sample), &mean_rank)| RankCi {
            metric_id: p.instance.metric_id,
            timeframe: p.instance.timeframe,
            algorithm: algorithm.clone(),
            mean_rank,
            ci_low: robust_stats::percentile(&sample, tail).expect("bootstrap samples non-empty"),
            ci_high: robust_stats::percentile(&sample, 100.0 - tail)
                .expect("bootstrap samples non-empty"),
            num_bootstraps: cfg.num_bootstraps,
        })
        .collect()
}

/// Looks up a pair of algorithm indices by name.
pub fn pair_indices(p: &Prepared, a: &str, b: &str) -> Result<(usize, usize), InferenceError> {
    let find = |name: &str| {
        p.algorithms
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| InferenceError::UnknownAlgorithm(String::from(name)))
    };
    let (ia, ib) = (find(a)?, find(b)?);
    if ia == ib {
        return Err(InferenceError::SamePair(String::from(a)));
    }
    Ok((ia, ib))
}

/// All index pairs `(i, j)` with `i < j` over `n` algorithms, in
/// lexicographic order of the sorted algorithm names.
pub fn algorithm_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n.saturating_sub(1) * n / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

/// Checks that a pair can be permutation-tested: DR cells must share one
/// evaluation grid within each task so their runs can be pooled.
pub fn check_pair(p: &Prepared, pair: (usize, usize)) -> Result<(), InferenceError> {
    for (t, row) in p.cells.iter().enumerate() {
        if let (CellData::Filtered { steps: sa, .. }, CellData::Filtered { steps: sb, .. }) =
            (&row[pair.0].data, &row[pair.1].data)
        {
            if sa != sb {
                return Err(InferenceError::PairGridMismatch {
                    instance: p.instance,
                    task: p.tasks[t].clone(),
                    algorithm_a: p.algorithms[pair.0].clone(),
                    algorithm_b: p.algorithms[pair.1].clone(),
                });
            }
        }
    }
    Ok(())
}

fn permuted_pair_aggregates(
    a: &Cell,
    b: &Cell,
    instance: MetricInstance,
    cfg: &AnalysisConfig,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let metric = instance.metric_id;
    match (&a.data, &b.data) {
        (CellData::Values(va), CellData::Values(vb))
        | (CellData::Finals(va), CellData::Finals(vb)) => {
            let mut pool: Vec<f64> = va.iter().chain(vb).copied().collect();
            pool.shuffle(rng);
            let (ga, gb) = pool.split_at(va.len());
            (
                aggregate_values(metric, cfg, ga) / a.divisor,
                aggregate_values(metric, cfg, gb) / b.divisor,
            )
        }
        (CellData::Rollouts(sa), CellData::Rollouts(sb)) => {
            let mut pool: Vec<&Vec<f64>> = sa.iter().chain(sb).collect();
            pool.shuffle(rng);
            let (ga, gb) = pool.split_at(sa.len());
            let flat = |g: &[&Vec<f64>]| g.iter().flat_map(|s| s.iter().copied()).collect::<Vec<f64>>();
            (
                aggregate_values(metric, cfg, &flat(ga)) / a.divisor,
                aggregate_values(metric, cfg, &flat(gb)) / b.divisor,
            )
        }
        (
            CellData::Filtered { steps, runs: ra },
            CellData::Filtered { runs: rb, .. },
        ) => {
            let mut pool: Vec<&[f64]> =
                ra.iter().chain(rb).map(|r| r.as_slice()).collect();
            pool.shuffle(rng);
            let (ga, gb) = pool.split_at(ra.len());
            let frame = instance.timeframe.expect("DR carries a frame");
            (
                dr_value(steps, ga, cfg, frame) / a.divisor,
                dr_value(steps, gb, cfg, frame) / b.divisor,
            )
        }
        _ => unreachable!("one metric instance builds one cell shape"),
    }
}

/// One permutation draw for the pair `(pair.0, pair.1)`: within every task
/// the two algorithms' units are pooled and re-partitioned (group sizes
/// preserved), the cells re-aggregated, and the full field re-ranked with
/// the other algorithms frozen at their observed values. Returns the
/// mean-rank difference `a - b`. Deterministic in
/// `(cfg.rng_seed, iteration, task index)`; the pair does not enter the
/// stream derivation.
pub fn permutation_iteration(
    p: &Prepared,
    cfg: &AnalysisConfig,
    pair: (usize, usize),
    iteration: u64,
) -> f64 {
    let mut values = p.observed_values.clone();
    for (t, row) in p.cells.iter().enumerate() {
        let mut rng = seeding::stream_rng(cfg.rng_seed, PERMUTATION, &[iteration, t as u64]);
        let (va, vb) =
            permuted_pair_aggregates(&row[pair.0], &row[pair.1], p.instance, cfg, &mut rng);
        values[t][pair.0] = va;
        values[t][pair.1] = vb;
    }
    let ranks = ranking::mean_ranks(&values, orientation(p.instance));
    ranks[pair.0] - ranks[pair.1]
}

/// Raw outcome of one pairwise permutation test.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTest {
    /// Observed mean-rank difference (first minus second algorithm).
    pub statistic: f64,
    /// Two-sided p-value `(exceedances + 1) / (iterations + 1)`.
    pub p_raw: f64,
}

/// Combines an observed statistic with the permuted statistics collected
/// from [`permutation_iteration`] (in any order).
pub fn summarize_permutation(statistic: f64, permuted: &[f64]) -> PairTest {
    let obs = if statistic < 0.0 { -statistic } else { statistic };
    let count = permuted
        .iter()
        .filter(|&&s| {
            let mag = if s < 0.0 { -s } else { s };
            mag >= obs
        })
        .count();
    PairTest { statistic, p_raw: (count + 1) as f64 / (permuted.len() + 1) as f64 }
}

/// Permutation test of "the pair's mean ranks are exchangeable", run for
/// `cfg.num_permutations` iterations.
pub fn permutation_test(
    p: &Prepared,
    cfg: &AnalysisConfig,
    pair: (usize, usize),
) -> Result<PairTest, InferenceError> {
    check_pair(p, pair)?;
    let observed = p.observed_mean_ranks[pair.0] - p.observed_mean_ranks[pair.1];
    let permuted: Vec<f64> = (0..u64::from(cfg.num_permutations))
        .map(|i| permutation_iteration(p, cfg, pair, i))
        .collect();
    Ok(summarize_permutation(observed, &permuted))
}

/// Adjusted p-values controlling the false discovery rate under arbitrary
/// dependence: `adj_(i) = min_{j >= i} min(1, m * c(m) * p_(j) / j)` with
/// `c(m) = sum_{k=1..m} 1/k`, reported in the input order.
pub fn benjamini_yekutieli(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    if m == 0 {
        return Vec::new();
    }
    let c: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = alloc::vec![0.0; m];
    let mut running = 1.0_f64;
    for (rank, &idx) in order.iter().enumerate().rev() {
        let raw = (m as f64 * c * p_values[idx] / (rank + 1) as f64).min(1.0);
        running = running.min(raw);
        adjusted[idx] = running;
    }
    adjusted
}

/// Adjusted p-values controlling the family-wise error rate:
/// `adj_(i) = min(1, max_{j <= i} (m - j + 1) * p_(j))`, reported in the
/// input order.
pub fn holm_bonferroni(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = alloc::vec![0.0; m];
    let mut running = 0.0_f64;
    for (rank, &idx) in order.iter().enumerate() {
        let raw = ((m - rank) as f64 * p_values[idx]).min(1.0);
        running = running.max(raw);
        adjusted[idx] = running;
    }
    adjusted
}

/// Dispatches to the configured correction.
pub fn apply_correction(p_values: &[f64], method: CorrectionMethod) -> Vec<f64> {
    match method {
        CorrectionMethod::BenjaminiYekutieli => benjamini_yekutieli(p_values),
        CorrectionMethod::HolmBonferroni => holm_bonferroni(p_values),
    }
}

/// One corrected pairwise comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub metric_id: MetricId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeframe: Option<u32>,
    pub algorithm_a: String,
    pub algorithm_b: String,
    /// Observed mean-rank difference (a minus b; negative means a ranks
    /// better).
    pub statistic: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    /// Whether `p_adjusted <= significance_level`.
    pub significant: bool,
    /// Permutation iterations behind `p_raw`.
    pub num_permutations: u32,
}

/// Builds the comparison rows for one instance from raw pair tests: applies
/// the configured correction across the family of all pairs and flags
/// significance at `cfg.significance_level`.
pub fn summarize_comparisons(
    p: &Prepared,
    cfg: &AnalysisConfig,
    pairs: &[(usize, usize)],
    tests: &[PairTest],
) -> Vec<ComparisonResult> {
    let raw: Vec<f64> = tests.iter().map(|t| t.p_raw).collect();
    let adjusted = apply_correction(&raw, cfg.correction);
    pairs
        .iter()
        .zip(tests)
        .zip(adjusted)
        .map(|((&(ia, ib), test), p_adjusted)| ComparisonResult {
            metric_id: p.instance.metric_id,
            timeframe: p.instance.timeframe,
            algorithm_a: p.algorithms[ia].clone(),
            algorithm_b: p.algorithms[ib].clone(),
            statistic: test.statistic,
            p_raw: test.p_raw,
            p_adjusted,
            significant: p_adjusted <= cfg.significance_level,
            num_permutations: cfg.num_permutations,
        })
        .collect()
}

/// Tests every algorithm pair of the instance and corrects the p-values
/// across that family with the configured method.
pub fn pairwise_compare_all(
    p: &Prepared,
    cfg: &AnalysisConfig,
) -> Result<Vec<ComparisonResult>, InferenceError> {
    if p.algorithms.len() < 2 {
        return Err(InferenceError::TooFewAlgorithms { got: p.algorithms.len() });
    }
    let pairs = algorithm_pairs(p.algorithms.len());
    let mut tests = Vec::with_capacity(pairs.len());
    for &pair in &pairs {
        tests.push(permutation_test(p, cfg, pair)?);
    }
    Ok(summarize_comparisons(p, cfg, &pairs, &tests))
}
