//! CSV and JSON ingestion, canonical writers, and dataset validation.
//!
//! Two row schemas are accepted, with the exact headers
//! `algorithm,task,run,step,value` (training curves) and
//! `algorithm,task,run,rollout,value` (fixed-policy rollout scores). Files
//! are UTF-8 with `.` as the decimal separator; lines starting with `#` are
//! comments. A JSON mirror of each schema — an array of row objects with the
//! same field names — is accepted as well. Parsing is invariant to row
//! order: evaluation points sort by step and rollout scores by rollout
//! index, and scores keep full double precision, so writing parsed data back
//! out and re-parsing it reproduces the structures bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use reliability_core::data::{DataError, Dataset, EvaluationPoint, RolloutSet, TrainingCurve};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Required training-curve columns, in canonical order.
pub const TRAINING_COLUMNS: [&str; 5] = ["algorithm", "task", "run", "step", "value"];
/// Required rollout columns, in canonical order.
pub const ROLLOUT_COLUMNS: [&str; 5] = ["algorithm", "task", "run", "rollout", "value"];

/// One training-curve row, as written to and read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingRow {
    pub algorithm: String,
    pub task: String,
    pub run: String,
    pub step: u64,
    pub value: f64,
}

/// One rollout-score row, as written to and read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolloutRow {
    pub algorithm: String,
    pub task: String,
    pub run: String,
    pub rollout: u64,
    pub value: f64,
}

/// A rejected or unreadable input file.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: &'static str },
    #[error("{path} line {line}: column `{column}` has non-numeric value `{value}`")]
    BadNumber { path: String, line: u64, column: &'static str, value: String },
    #[error("{path}: duplicate step {step} for {algorithm}/{task} run {run}")]
    DuplicateStep { path: String, algorithm: String, task: String, run: String, step: u64 },
    #[error("{path}: duplicate rollout index {index} for {algorithm}/{task} run {run}")]
    DuplicateRollout { path: String, algorithm: String, task: String, run: String, index: u64 },
    #[error("{path}: {source}")]
    Data {
        path: String,
        #[source]
        source: DataError,
    },
    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("failed to write CSV: {0}")]
    WriteCsv(#[from] csv::Error),
    #[error("failed to write output: {0}")]
    WriteIo(#[from] io::Error),
}

/// Parsed records plus non-fatal observations (e.g. a header-only file).
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub warnings: Vec<String>,
}

fn display_path(path: &Path) -> String {
    path.display().to_string()
}

/// A schema-checked row before grouping; `index` is the `step` or
/// `rollout` column.
struct RawRow {
    algorithm: String,
    task: String,
    run: String,
    index: u64,
    value: f64,
}

fn read_rows<R: io::Read>(
    reader: R,
    origin: &str,
    columns: &[&'static str; 5],
) -> Result<Vec<RawRow>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|source| IngestError::Csv { path: origin.into(), source })?
        .clone();
    let mut idx = [0usize; 5];
    for (slot, column) in idx.iter_mut().zip(columns) {
        *slot = headers
            .iter()
            .position(|h| h == *column)
            .ok_or(IngestError::MissingColumn { path: origin.into(), column })?;
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| IngestError::Csv { path: origin.into(), source })?;
        let line = record.position().map_or(0, csv::Position::line);
        let field = |i: usize| record.get(idx[i]).unwrap_or_default();
        let index: u64 = field(3).parse().map_err(|_| IngestError::BadNumber {
            path: origin.into(),
            line,
            column: columns[3],
            value: field(3).into(),
        })?;
        let value: f64 = field(4).parse().map_err(|_| IngestError::BadNumber {
            path: origin.into(),
            line,
            column: columns[4],
            value: field(4).into(),
        })?;
        rows.push(RawRow {
            algorithm: field(0).into(),
            task: field(1).into(),
            run: field(2).into(),
            index,
            value,
        });
    }
    Ok(rows)
}

fn build_curves(rows: Vec<RawRow>, origin: &str) -> Result<Parsed<TrainingCurve>, IngestError> {
    let mut warnings = Vec::new();
    if rows.is_empty() {
        warnings.push(format!("{origin}: no data rows"));
    }
    let mut groups: BTreeMap<(String, String, String), Vec<(u64, f64)>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((row.algorithm, row.task, row.run))
            .or_default()
            .push((row.index, row.value));
    }
    let mut records = Vec::with_capacity(groups.len());
    for ((algorithm, task, run), mut points) in groups {
        points.sort_by_key(|&(step, _)| step);
        if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(IngestError::DuplicateStep {
                path: origin.into(),
                algorithm,
                task,
                run,
                step: w[0].0,
            });
        }
        let points = points
            .into_iter()
            .map(|(step, value)| EvaluationPoint { step, value })
            .collect();
        records.push(
            TrainingCurve::new(algorithm, task, run, points)
                .map_err(|source| IngestError::Data { path: origin.into(), source })?,
        );
    }
    Ok(Parsed { records, warnings })
}

fn build_rollouts(rows: Vec<RawRow>, origin: &str) -> Result<Parsed<RolloutSet>, IngestError> {
    let mut warnings = Vec::new();
    if rows.is_empty() {
        warnings.push(format!("{origin}: no data rows"));
    }
    let mut groups: BTreeMap<(String, String, String), Vec<(u64, f64)>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((row.algorithm, row.task, row.run))
            .or_default()
            .push((row.index, row.value));
    }
    let mut records = Vec::with_capacity(groups.len());
    for ((algorithm, task, run), mut scores) in groups {
        scores.sort_by_key(|&(index, _)| index);
        if let Some(w) = scores.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(IngestError::DuplicateRollout {
                path: origin.into(),
                algorithm,
                task,
                run,
                index: w[0].0,
            });
        }
        let scores = scores.into_iter().map(|(_, value)| value).collect();
        records.push(
            RolloutSet::new(algorithm, task, run, scores)
                .map_err(|source| IngestError::Data { path: origin.into(), source })?,
        );
    }
    Ok(Parsed { records, warnings })
}

/// Parses the canonical `algorithm,task,run,step,value` CSV into curves,
/// grouped by (algorithm, task, run) and sorted by step.
pub fn parse_training_csv(path: &Path) -> Result<Parsed<TrainingCurve>, IngestError> {
    let origin = display_path(path);
    let file =
        fs::File::open(path).map_err(|source| IngestError::Io { path: origin.clone(), source })?;
    parse_training_reader(file, &origin)
}

/// [`parse_training_csv`] over any reader; `origin` names the source in
/// errors.
pub fn parse_training_reader<R: io::Read>(
    reader: R,
    origin: &str,
) -> Result<Parsed<TrainingCurve>, IngestError> {
    build_curves(read_rows(reader, origin, &TRAINING_COLUMNS)?, origin)
}

/// Parses the canonical `algorithm,task,run,rollout,value` CSV into rollout
/// sets grouped by (algorithm, task, run).
pub fn parse_rollout_csv(path: &Path) -> Result<Parsed<RolloutSet>, IngestError> {
    let origin = display_path(path);
    let file =
        fs::File::open(path).map_err(|source| IngestError::Io { path: origin.clone(), source })?;
    parse_rollout_reader(file, &origin)
}

/// [`parse_rollout_csv`] over any reader.
pub fn parse_rollout_reader<R: io::Read>(
    reader: R,
    origin: &str,
) -> Result<Parsed<RolloutSet>, IngestError> {
    build_rollouts(read_rows(reader, origin, &ROLLOUT_COLUMNS)?, origin)
}

/// Parses the JSON mirror of the training schema: an array of objects with
/// the same five field names as the CSV columns.
pub fn parse_training_json(path: &Path) -> Result<Parsed<TrainingCurve>, IngestError> {
    let origin = display_path(path);
    let text =
        fs::read_to_string(path).map_err(|source| IngestError::Io { path: origin.clone(), source })?;
    let rows: Vec<TrainingRow> = serde_json::from_str(&text)
        .map_err(|source| IngestError::Json { path: origin.clone(), source })?;
    let rows = rows
        .into_iter()
        .map(|r| RawRow {
            algorithm: r.algorithm,
            task: r.task,
            run: r.run,
            index: r.step,
            value: r.value,
        })
        .collect();
    build_curves(rows, &origin)
}

/// Parses the JSON mirror of the rollout schema.
pub fn parse_rollout_json(path: &Path) -> Result<Parsed<RolloutSet>, IngestError> {
    let origin = display_path(path);
    let text =
        fs::read_to_string(path).map_err(|source| IngestError::Io { path: origin.clone(), source })?;
    let rows: Vec<RolloutRow> = serde_json::from_str(&text)
        .map_err(|source| IngestError::Json { path: origin.clone(), source })?;
    let rows = rows
        .into_iter()
        .map(|r| RawRow {
            algorithm: r.algorithm,
            task: r.task,
            run: r.run,
            index: r.rollout,
            value: r.value,
        })
        .collect();
    build_rollouts(rows, &origin)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Loads training curves from CSV or (by `.json` extension) the JSON mirror.
pub fn load_training(path: &Path) -> Result<Parsed<TrainingCurve>, IngestError> {
    if is_json(path) {
        parse_training_json(path)
    } else {
        parse_training_csv(path)
    }
}

/// Loads rollout sets from CSV or (by `.json` extension) the JSON mirror.
pub fn load_rollouts(path: &Path) -> Result<Parsed<RolloutSet>, IngestError> {
    if is_json(path) {
        parse_rollout_json(path)
    } else {
        parse_rollout_csv(path)
    }
}

/// Writes curves in the canonical training CSV schema. Scores print in the
/// shortest form that parses back to the identical double.
pub fn write_training_csv<W: io::Write>(
    curves: &[TrainingCurve],
    writer: W,
) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for curve in curves {
        for point in &curve.points {
            wtr.serialize(TrainingRow {
                algorithm: curve.algorithm.clone(),
                task: curve.task.clone(),
                run: curve.run.clone(),
                step: point.step,
                value: point.value,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Writes rollout sets in the canonical rollout CSV schema, indexing each
/// set's scores 0..n.
pub fn write_rollout_csv<W: io::Write>(
    sets: &[RolloutSet],
    writer: W,
) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for set in sets {
        for (rollout, &value) in set.scores.iter().enumerate() {
            wtr.serialize(RolloutRow {
                algorithm: set.algorithm.clone(),
                task: set.task.clone(),
                run: set.run.clone(),
                rollout: rollout as u64,
                value,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Health report for one (algorithm, task) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algorithm: String,
    pub task: String,
    /// Training runs with curves.
    pub num_runs: usize,
    /// Policies with rollout scores.
    pub num_rollout_sets: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_step: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<u64>,
    /// All of the cell's runs share one evaluation-step grid.
    pub uniform_grid: bool,
}

/// Dataset health report: per-cell coverage, grid uniformity, and whether
/// long-term risk values are comparable across algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub cells: Vec<CellSummary>,
    /// Within every task, all curves (across algorithms and runs) share one
    /// evaluation-step grid.
    pub uniform_grids: bool,
    /// Every curve is evaluated at the same constant step interval. Drawdown
    /// depth depends on how often a curve is sampled, so long-term risk is
    /// only comparable across algorithms when this holds.
    pub lrt_comparable: bool,
    /// The shared evaluation interval when `lrt_comparable`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation_interval: Option<u64>,
    pub warnings: Vec<String>,
}

/// Checks coverage and grid health. Always returns a summary; problems are
/// reported as flags and warnings, not errors.
pub fn validate_dataset(dataset: &Dataset) -> ValidationSummary {
    let mut warnings = Vec::new();
    let mut keys: Vec<(String, String)> = dataset
        .curve_groups()
        .map(|(k, _)| k.clone())
        .chain(dataset.rollout_groups().map(|(k, _)| k.clone()))
        .collect();
    keys.sort();
    keys.dedup();

    let mut cells = Vec::with_capacity(keys.len());
    for (algorithm, task) in keys {
        let curves = dataset.curves_for(&algorithm, &task).unwrap_or(&[]);
        let sets = dataset.rollouts_for(&algorithm, &task).unwrap_or(&[]);
        let min_step = curves.iter().map(|c| c.points[0].step).min();
        let max_step = curves.iter().filter_map(|c| c.points.last().map(|p| p.step)).max();
        let uniform_grid = curves
            .windows(2)
            .all(|w| grids_match(&w[0], &w[1]));
        if !uniform_grid {
            warnings.push(format!(
                "{algorithm}/{task}: runs do not share one evaluation grid"
            ));
        }
        if !curves.is_empty() && curves.len() < 2 {
            warnings.push(format!(
                "{algorithm}/{task}: single training run; across-run metrics (DR, RR) are undefined"
            ));
        }
        if !sets.is_empty() && sets.len() < 2 {
            warnings.push(format!(
                "{algorithm}/{task}: single rollout policy; fixed-policy metrics cannot be resampled"
            ));
        }
        for curve in curves {
            if curve.points.len() < 2 {
                warnings.push(format!(
                    "{algorithm}/{task}: run {} has fewer than 2 evaluation points; it only contributes a final performance",
                    curve.run
                ));
            }
        }
        cells.push(CellSummary {
            algorithm,
            task,
            num_runs: curves.len(),
            num_rollout_sets: sets.len(),
            min_step,
            max_step,
            uniform_grid,
        });
    }

    let uniform_grids = dataset.tasks().iter().all(|task| {
        let mut task_curves = dataset
            .algorithms()
            .into_iter()
            .filter_map(|a| dataset.curves_for(&a, task))
            .flatten();
        match task_curves.next() {
            None => true,
            Some(first) => task_curves.all(|c| grids_match(first, c)),
        }
    });

    let mut intervals = dataset.all_curves().flat_map(curve_intervals);
    let evaluation_interval = match intervals.next() {
        None => None,
        Some(first) => intervals.all(|d| d == first).then_some(first),
    };
    let lrt_comparable = evaluation_interval.is_some() || dataset.all_curves().next().is_none();
    if !lrt_comparable {
        warnings.push(String::from(
            "curves are not all evaluated at one step interval; LRT is not comparable across algorithms",
        ));
    }

    ValidationSummary { cells, uniform_grids, lrt_comparable, evaluation_interval, warnings }
}

fn grids_match(a: &TrainingCurve, b: &TrainingCurve) -> bool {
    a.points.len() == b.points.len()
        && a.points.iter().zip(&b.points).all(|(x, y)| x.step == y.step)
}

fn curve_intervals(curve: &TrainingCurve) -> impl Iterator<Item = u64> + '_ {
    curve.points.windows(2).map(|w| w[1].step - w[0].step)
}

/// Renders a validation summary as indented human-readable text (the JSON
/// form is a plain serialization of [`ValidationSummary`]).
pub fn summary_text(summary: &ValidationSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cells ({}):", summary.cells.len());
    for cell in &summary.cells {
        let steps = match (cell.min_step, cell.max_step) {
            (Some(lo), Some(hi)) => format!(", steps {lo}..{hi}"),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "  {}/{}: {} runs, {} rollout sets{}{}",
            cell.algorithm,
            cell.task,
            cell.num_runs,
            cell.num_rollout_sets,
            steps,
            if cell.uniform_grid { "" } else { ", NON-UNIFORM GRID" },
        );
    }
    let _ = writeln!(out, "uniform grids: {}", summary.uniform_grids);
    match summary.evaluation_interval {
        Some(d) => {
            let _ = writeln!(out, "lrt comparable: true (evaluation interval {d})");
        }
        None => {
            let _ = writeln!(out, "lrt comparable: {}", summary.lrt_comparable);
        }
    }
    for warning in &summary.warnings {
        let _ = writeln!(out, "warning: {warning}");
    }
    out
}
