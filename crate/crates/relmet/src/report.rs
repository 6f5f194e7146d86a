//! The analysis report document and its JSON / CSV-bundle emitters.
//!
//! A report bundles everything one analysis produced: the effective
//! configuration, the dataset validation summary, per-task metric values,
//! rank tables, bootstrap rank confidence intervals, and corrected pairwise
//! comparisons. JSON output is one pretty-printed document; the CSV bundle
//! splits the tabular parts into `metrics.csv`, `ranks.csv`, `cis.csv`, and
//! `comparisons.csv`. Both emitters are deterministic byte-for-byte: floats
//! print in shortest round-trip form and every collection has a fixed order.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use reliability_core::config::AnalysisConfig;
use reliability_core::inference::{ComparisonResult, RankCi};
use reliability_core::metrics::{MetricId, MetricResult};
use reliability_core::ranking::RankTable;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ValidationSummary;

/// Version string embedded in every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything one analysis run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    /// The configuration the numbers were computed with, defaults included.
    pub config_echo: AnalysisConfig,
    pub validation: ValidationSummary,
    /// Non-fatal observations: parser warnings, skipped metric instances,
    /// normalization fallbacks, excluded cells.
    pub notes: Vec<String>,
    /// Normalized, time-frame-collapsed metric values.
    pub per_task_metrics: Vec<MetricResult>,
    pub rank_tables: Vec<RankTable>,
    /// Bootstrap confidence intervals for mean ranks.
    pub cis: Vec<RankCi>,
    /// Pairwise permutation tests after multiple-comparison correction.
    pub comparisons: Vec<ComparisonResult>,
    pub tool_version: String,
}

/// A report that could not be rendered or written.
#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("cannot render JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Renders the document as pretty-printed JSON with a trailing newline.
pub fn render_json(doc: &ReportDocument) -> Result<String, ReportError> {
    Ok(serde_json::to_string_pretty(doc)? + "\n")
}

/// Writes `report.json` into `dir` and returns the paths written.
pub fn write_json(doc: &ReportDocument, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let path = dir.join("report.json");
    let text = render_json(doc)?;
    fs::write(&path, text)
        .map_err(|source| ReportError::Io { path: path.display().to_string(), source })?;
    Ok(vec![path])
}

#[derive(Serialize)]
struct MetricRow<'a> {
    metric_id: MetricId,
    algorithm: &'a str,
    task: &'a str,
    run: Option<&'a str>,
    timeframe: Option<u32>,
    value: f64,
    normalized: bool,
}

#[derive(Serialize)]
struct RankRow<'a> {
    metric_id: MetricId,
    timeframe: Option<u32>,
    algorithm: &'a str,
    task: &'a str,
    rank: f64,
    mean_rank: f64,
}

// The JSON forms of the CI and comparison types omit a `None` time frame;
// CSV rows need every column present, so they get explicit row structs.

#[derive(Serialize)]
struct CiRow<'a> {
    metric_id: MetricId,
    timeframe: Option<u32>,
    algorithm: &'a str,
    mean_rank: f64,
    ci_low: f64,
    ci_high: f64,
    num_bootstraps: u32,
}

#[derive(Serialize)]
struct ComparisonRow<'a> {
    metric_id: MetricId,
    timeframe: Option<u32>,
    algorithm_a: &'a str,
    algorithm_b: &'a str,
    statistic: f64,
    p_raw: f64,
    p_adjusted: f64,
    significant: bool,
    num_permutations: u32,
}

/// Writes a headed CSV file; `fill` appends the data rows.
pub(crate) fn csv_file(
    dir: &Path,
    name: &str,
    header: &[&str],
    fill: impl FnOnce(&mut csv::Writer<fs::File>) -> Result<(), csv::Error>,
) -> Result<PathBuf, ReportError> {
    let path = dir.join(name);
    let as_err = |source| ReportError::Csv { path: path.display().to_string(), source };
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&path)
        .map_err(as_err)?;
    wtr.write_record(header).map_err(as_err)?;
    fill(&mut wtr).map_err(as_err)?;
    wtr.flush()
        .map_err(|source| ReportError::Io { path: path.display().to_string(), source })?;
    Ok(path)
}

/// Writes `metrics.csv`, `ranks.csv`, `cis.csv`, and `comparisons.csv` into
/// `dir`. Files with no rows still carry their header line.
pub fn write_csv_bundle(doc: &ReportDocument, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::with_capacity(4);

    written.push(csv_file(
        dir,
        "metrics.csv",
        &["metric_id", "algorithm", "task", "run", "timeframe", "value", "normalized"],
        |wtr| {
            for r in &doc.per_task_metrics {
                wtr.serialize(MetricRow {
                    metric_id: r.metric_id,
                    algorithm: &r.algorithm,
                    task: &r.task,
                    run: r.run_id.as_deref(),
                    timeframe: r.timeframe,
                    value: r.value,
                    normalized: r.normalized,
                })?;
            }
            Ok(())
        },
    )?);

    written.push(csv_file(
        dir,
        "ranks.csv",
        &["metric_id", "timeframe", "algorithm", "task", "rank", "mean_rank"],
        |wtr| {
            for table in &doc.rank_tables {
                for entry in &table.entries {
                    for task in &table.tasks {
                        wtr.serialize(RankRow {
                            metric_id: table.metric_id,
                            timeframe: table.timeframe,
                            algorithm: &entry.algorithm,
                            task,
                            rank: entry.task_ranks[task],
                            mean_rank: entry.mean_rank,
                        })?;
                    }
                }
            }
            Ok(())
        },
    )?);

    written.push(csv_file(
        dir,
        "cis.csv",
        &["metric_id", "timeframe", "algorithm", "mean_rank", "ci_low", "ci_high", "num_bootstraps"],
        |wtr| {
            for ci in &doc.cis {
                wtr.serialize(CiRow {
                    metric_id: ci.metric_id,
                    timeframe: ci.timeframe,
                    algorithm: &ci.algorithm,
                    mean_rank: ci.mean_rank,
                    ci_low: ci.ci_low,
                    ci_high: ci.ci_high,
                    num_bootstraps: ci.num_bootstraps,
                })?;
            }
            Ok(())
        },
    )?);

    written.push(csv_file(
        dir,
        "comparisons.csv",
        &[
            "metric_id",
            "timeframe",
            "algorithm_a",
            "algorithm_b",
            "statistic",
            "p_raw",
            "p_adjusted",
            "significant",
            "num_permutations",
        ],
        |wtr| {
            for c in &doc.comparisons {
                wtr.serialize(ComparisonRow {
                    metric_id: c.metric_id,
                    timeframe: c.timeframe,
                    algorithm_a: &c.algorithm_a,
                    algorithm_b: &c.algorithm_b,
                    statistic: c.statistic,
                    p_raw: c.p_raw,
                    p_adjusted: c.p_adjusted,
                    significant: c.significant,
                    num_permutations: c.num_permutations,
                })?;
            }
            Ok(())
        },
    )?);

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use reliability_core::metrics::Orientation;
    use reliability_core::ranking::RankEntry;
    use std::collections::BTreeMap;

    fn sample_doc() -> ReportDocument {
        let table = RankTable {
            metric_id: MetricId::Srt,
            timeframe: None,
            tasks: vec![String::from("t0"), String::from("t1")],
            entries: vec![
                RankEntry {
                    algorithm: String::from("a"),
                    mean_rank: 1.25,
                    task_ranks: BTreeMap::from([
                        (String::from("t0"), 1.0),
                        (String::from("t1"), 1.5),
                    ]),
                },
                RankEntry {
                    algorithm: String::from("b"),
                    mean_rank: 1.75,
                    task_ranks: BTreeMap::from([
                        (String::from("t0"), 2.0),
                        (String::from("t1"), 1.5),
                    ]),
                },
            ],
        };
        ReportDocument {
            config_echo: AnalysisConfig::default(),
            validation: crate::ingest::ValidationSummary {
                cells: vec![],
                uniform_grids: true,
                lrt_comparable: true,
                evaluation_interval: Some(1000),
                warnings: vec![],
            },
            notes: vec![String::from("example note")],
            per_task_metrics: vec![MetricResult {
                metric_id: MetricId::Dt,
                algorithm: String::from("a"),
                task: String::from("t0"),
                run_id: Some(String::from("r0")),
                step: None,
                timeframe: Some(1),
                value: 0.125,
                normalized: true,
                unnormalizable: false,
                orientation: Orientation::LowerIsBetter,
            }],
            rank_tables: vec![table],
            cis: vec![RankCi {
                metric_id: MetricId::Srt,
                timeframe: None,
                algorithm: String::from("a"),
                mean_rank: 1.25,
                ci_low: 1.0,
                ci_high: 2.0,
                num_bootstraps: 1000,
            }],
            comparisons: vec![],
            tool_version: String::from(TOOL_VERSION),
        }
    }

    #[test]
    fn json_round_trips_and_orders_keys_stably() {
        let doc = sample_doc();
        let text = render_json(&doc).unwrap();
        let reparsed: ReportDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(reparsed, doc);
        // Stable top-level key order: configuration first, version last.
        let config_at = text.find("\"config_echo\"").unwrap();
        let version_at = text.find("\"tool_version\"").unwrap();
        assert!(config_at < version_at);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn csv_bundle_has_pinned_columns_and_headers_even_when_empty() {
        let doc = sample_doc();
        let dir = tempfile::tempdir().unwrap();
        let written = write_csv_bundle(&doc, dir.path()).unwrap();
        assert_eq!(written.len(), 4);

        let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        let mut lines = metrics.lines();
        assert_eq!(
            lines.next(),
            Some("metric_id,algorithm,task,run,timeframe,value,normalized")
        );
        assert_eq!(lines.next(), Some("DT,a,t0,r0,1,0.125,true"));

        let ranks = fs::read_to_string(dir.path().join("ranks.csv")).unwrap();
        assert!(ranks.starts_with("metric_id,timeframe,algorithm,task,rank,mean_rank\n"));
        assert!(ranks.contains("SRT,,a,t0,1.0,1.25"));
        assert_eq!(ranks.lines().count(), 1 + 4);

        let cis = fs::read_to_string(dir.path().join("cis.csv")).unwrap();
        assert!(cis.contains("SRT,,a,1.25,1.0,2.0,1000"));

        // No comparisons were run: the file still has its header.
        let comparisons = fs::read_to_string(dir.path().join("comparisons.csv")).unwrap();
        assert_eq!(
            comparisons.trim_end(),
            "metric_id,timeframe,algorithm_a,algorithm_b,statistic,p_raw,p_adjusted,significant,num_permutations"
        );
    }

    #[test]
    fn metric_rows_keep_full_float_precision() {
        let mut doc = sample_doc();
        doc.per_task_metrics[0].value = 0.1 + 0.2; // 0.30000000000000004
        let dir = tempfile::tempdir().unwrap();
        write_csv_bundle(&doc, dir.path()).unwrap();
        let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        let field = metrics.lines().nth(1).unwrap().split(',').nth(5).unwrap();
        assert_eq!(field.parse::<f64>().unwrap(), 0.1 + 0.2);
    }
}
