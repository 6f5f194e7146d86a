//! The end-to-end analysis: per-task metrics, normalization, time-frame
//! collapsing, rankings, bootstrap confidence intervals, and pairwise
//! permutation tests, assembled into one report document.
//!
//! Per-run and per-cell computability problems (a one-point run, a cell with
//! a single rollout policy, an empty time frame) become notes, not errors:
//! dropping one run must not abort an analysis of hundreds. Errors are
//! reserved for structural problems such as incomparable evaluation grids
//! within a tested pair. Resampling loops run on a thread pool but collect
//! in iteration order, so the report is byte-identical for any thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use reliability_core::config::AnalysisConfig;
use reliability_core::data::Dataset;
use reliability_core::inference::{
    self, ComparisonResult, InferenceError, MetricInstance, RankCi,
};
use reliability_core::metrics::{self, MetricError, MetricResult, PerformanceInput};
use reliability_core::ranking::{build_rank_table, RankError, RankTable};
use thiserror::Error;

use crate::ingest::validate_dataset;
use crate::report::{ReportDocument, TOOL_VERSION};

/// A stage failure that aborts the analysis.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("normalization stage failed: {0}")]
    Normalization(#[source] MetricError),
    #[error("inference stage failed for {instance}: {source}")]
    Inference {
        instance: MetricInstance,
        #[source]
        source: InferenceError,
    },
    #[error("ranking stage failed for {instance}: {source}")]
    Ranking {
        instance: MetricInstance,
        #[source]
        source: RankError,
    },
}

fn skip_note(
    metric: &str,
    algorithm: &str,
    task: &str,
    run: Option<&str>,
    reason: &dyn core::fmt::Display,
) -> String {
    match run {
        Some(run) => format!("{metric}: {algorithm}/{task} run {run}: skipped ({reason})"),
        None => format!("{metric}: {algorithm}/{task}: skipped ({reason})"),
    }
}

/// Computes every metric on every cell it is defined for, collapses per-step
/// series into the selected time frames, and normalizes the values. Returns
/// the rows plus notes explaining anything skipped.
pub fn compute_metrics(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
) -> Result<(Vec<MetricResult>, Vec<String>), PipelineError> {
    let mut notes: Vec<String> = Vec::new();
    let mut raw: Vec<MetricResult> = Vec::new();
    let algorithms = dataset.algorithms();

    // Median performance is measured on final training scores, unless some
    // algorithm never trained on the task: then every algorithm on that task
    // is measured on its pooled rollout scores instead, keeping the
    // comparison within one kind of evidence.
    let median_perf_from_rollouts: BTreeMap<String, bool> = dataset
        .tasks()
        .into_iter()
        .map(|task| {
            let all_trained =
                algorithms.iter().all(|a| dataset.curves_for(a, &task).is_some());
            (task, !all_trained)
        })
        .collect();

    // Collapses one per-step series, noting empty frames, and keeps only the
    // selected ones.
    let collapse = |metric: &str,
                        algorithm: &str,
                        task: &str,
                        run: Option<&str>,
                        series: &[MetricResult],
                        raw: &mut Vec<MetricResult>,
                        notes: &mut Vec<String>| {
        match metrics::collapse_timeframes(series, cfg) {
            Ok(collapsed) => {
                for frame in &collapsed.empty_frames {
                    notes.push(match run {
                        Some(run) => format!(
                            "{metric}: {algorithm}/{task} run {run}: time frame {frame} has no values and was omitted"
                        ),
                        None => format!(
                            "{metric}: {algorithm}/{task}: time frame {frame} has no values and was omitted"
                        ),
                    });
                }
                raw.extend(
                    collapsed
                        .results
                        .into_iter()
                        .filter(|r| r.timeframe.is_some_and(|f| cfg.frame_selected(f))),
                );
            }
            Err(e) => notes.push(skip_note(metric, algorithm, task, run, &e)),
        }
    };

    for (key, curves) in dataset.curve_groups() {
        let (algorithm, task) = (key.0.as_str(), key.1.as_str());
        for curve in curves {
            match metrics::dispersion_across_time(curve, cfg) {
                Ok(series) => {
                    collapse("DT", algorithm, task, Some(&curve.run), &series, &mut raw, &mut notes)
                }
                Err(e) => notes.push(skip_note("DT", algorithm, task, Some(&curve.run), &e)),
            }
            match metrics::short_term_risk(curve, cfg) {
                Ok(r) => raw.push(r),
                Err(e) => notes.push(skip_note("SRT", algorithm, task, Some(&curve.run), &e)),
            }
            match metrics::long_term_risk(curve, cfg) {
                Ok(r) => raw.push(r),
                Err(e) => notes.push(skip_note("LRT", algorithm, task, Some(&curve.run), &e)),
            }
        }
        match metrics::dispersion_across_runs(curves, cfg) {
            Ok(series) => collapse("DR", algorithm, task, None, &series, &mut raw, &mut notes),
            Err(e) => notes.push(skip_note("DR", algorithm, task, None, &e)),
        }
        match metrics::risk_across_runs(curves, cfg) {
            Ok(r) => raw.push(r),
            Err(e) => notes.push(skip_note("RR", algorithm, task, None, &e)),
        }
        if !median_perf_from_rollouts[task] {
            match metrics::median_performance(PerformanceInput::Curves(curves), cfg, None) {
                Ok(r) => raw.push(r),
                Err(e) => notes.push(skip_note("MEDIAN_PERF", algorithm, task, None, &e)),
            }
        }
    }

    for (key, sets) in dataset.rollout_groups() {
        let (algorithm, task) = (key.0.as_str(), key.1.as_str());
        match metrics::dispersion_fixed_policy(sets) {
            Ok(r) => raw.push(r),
            Err(e) => notes.push(skip_note("DF", algorithm, task, None, &e)),
        }
        match metrics::risk_fixed_policy(sets, cfg) {
            Ok(r) => raw.push(r),
            Err(e) => notes.push(skip_note("RF", algorithm, task, None, &e)),
        }
        if median_perf_from_rollouts[task] {
            match metrics::median_performance(PerformanceInput::Rollouts(sets), cfg, None) {
                Ok(r) => raw.push(r),
                Err(e) => notes.push(skip_note("MEDIAN_PERF", algorithm, task, None, &e)),
            }
        }
    }

    // Dividing by a frozen per-cell constant commutes with the per-frame
    // median, so normalizing the collapsed values equals collapsing
    // normalized ones.
    let ctx = metrics::normalization_context(dataset, cfg).map_err(PipelineError::Normalization)?;
    let normalized = metrics::normalize_metrics(raw, &ctx, cfg.normalization)
        .map_err(PipelineError::Normalization)?;
    notes.extend(normalized.notes);
    Ok((normalized.results, notes))
}

/// Rankings and resampling results for every metric instance.
#[derive(Debug, Clone, Default)]
pub struct InferenceOutput {
    pub rank_tables: Vec<RankTable>,
    pub cis: Vec<RankCi>,
    pub comparisons: Vec<ComparisonResult>,
    pub notes: Vec<String>,
}

/// Ranks the algorithms per metric instance, bootstraps rank confidence
/// intervals, and permutation-tests every algorithm pair. Instances with no
/// usable task are skipped with a note; with fewer than two algorithms the
/// whole stage is skipped.
pub fn run_inference(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
) -> Result<InferenceOutput, PipelineError> {
    inference_pass(dataset, cfg, true, true)
}

/// Just the rank tables (no resampling).
pub fn compute_rank_tables(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
) -> Result<(Vec<RankTable>, Vec<String>), PipelineError> {
    let out = inference_pass(dataset, cfg, false, false)?;
    Ok((out.rank_tables, out.notes))
}

/// Just the corrected pairwise comparisons (no bootstrap).
pub fn compute_comparisons(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
) -> Result<(Vec<ComparisonResult>, Vec<String>), PipelineError> {
    let out = inference_pass(dataset, cfg, false, true)?;
    Ok((out.comparisons, out.notes))
}

fn inference_pass(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
    bootstrap: bool,
    compare: bool,
) -> Result<InferenceOutput, PipelineError> {
    let mut out = InferenceOutput::default();
    if dataset.algorithms().len() < 2 {
        out.notes.push(String::from(
            "fewer than two algorithms: rankings, confidence intervals, and comparisons skipped",
        ));
        return Ok(out);
    }

    for instance in inference::metric_instances(cfg) {
        let prepared = match inference::prepare(dataset, cfg, instance) {
            Ok(p) => p,
            Err(InferenceError::NoUsableTasks { .. }) => {
                out.notes.push(format!(
                    "{instance}: skipped (no task has a defined value for every algorithm)"
                ));
                continue;
            }
            Err(source) => return Err(PipelineError::Inference { instance, source }),
        };
        out.notes.extend(prepared.warnings.iter().cloned());

        let mut values: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (t, task) in prepared.tasks.iter().enumerate() {
            for (a, algorithm) in prepared.algorithms.iter().enumerate() {
                values
                    .entry(algorithm.clone())
                    .or_default()
                    .insert(task.clone(), prepared.observed_values[t][a]);
            }
        }
        out.rank_tables.push(
            build_rank_table(instance.metric_id, instance.timeframe, &values)
                .map_err(|source| PipelineError::Ranking { instance, source })?,
        );

        if bootstrap {
            let per_iteration: Vec<Vec<f64>> = (0..cfg.num_bootstraps)
                .into_par_iter()
                .map(|i| inference::bootstrap_iteration(&prepared, cfg, u64::from(i)))
                .collect();
            let mut samples =
                vec![Vec::with_capacity(per_iteration.len()); prepared.algorithms.len()];
            for ranks in per_iteration {
                for (a, rank) in ranks.into_iter().enumerate() {
                    samples[a].push(rank);
                }
            }
            out.cis.extend(inference::summarize_bootstrap(&prepared, cfg, samples));
        }

        if compare {
            let pairs = inference::algorithm_pairs(prepared.algorithms.len());
            let mut tests = Vec::with_capacity(pairs.len());
            for &pair in &pairs {
                inference::check_pair(&prepared, pair)
                    .map_err(|source| PipelineError::Inference { instance, source })?;
                let permuted: Vec<f64> = (0..cfg.num_permutations)
                    .into_par_iter()
                    .map(|i| inference::permutation_iteration(&prepared, cfg, pair, u64::from(i)))
                    .collect();
                let statistic =
                    prepared.observed_mean_ranks[pair.0] - prepared.observed_mean_ranks[pair.1];
                tests.push(inference::summarize_permutation(statistic, &permuted));
            }
            out.comparisons
                .extend(inference::summarize_comparisons(&prepared, cfg, &pairs, &tests));
        }
    }
    Ok(out)
}

/// Runs the full analysis and assembles the report. `notes` seeds the
/// document's notes (typically with parser warnings).
pub fn run_pipeline(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
    mut notes: Vec<String>,
) -> Result<ReportDocument, PipelineError> {
    let validation = validate_dataset(dataset);
    let (per_task_metrics, metric_notes) = compute_metrics(dataset, cfg)?;
    notes.extend(metric_notes);
    let inferred = run_inference(dataset, cfg)?;
    notes.extend(inferred.notes);
    Ok(ReportDocument {
        config_echo: cfg.clone(),
        validation,
        notes,
        per_task_metrics,
        rank_tables: inferred.rank_tables,
        cis: inferred.cis,
        comparisons: inferred.comparisons,
        tool_version: String::from(TOOL_VERSION),
    })
}
