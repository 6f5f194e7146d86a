//! Plot-ready side tables derived from a report.
//!
//! For each metric instance this writes two small CSVs mirroring the usual
//! reliability figures: `rank_<METRIC>.csv` with one row per algorithm
//! (mean rank plus confidence-interval bounds, already sorted by rank) and
//! `significance_<METRIC>.csv`, a symmetric 0/1 matrix marking pairs whose
//! corrected difference is significant. Metrics reported per time frame get
//! one file pair per frame, suffixed `_frame<index>`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use reliability_core::inference::RankCi;
use reliability_core::metrics::MetricId;

use crate::report::{csv_file, ReportDocument, ReportError};

fn instance_slug(metric_id: MetricId, timeframe: Option<u32>) -> String {
    match timeframe {
        Some(frame) => format!("{}_frame{frame}", metric_id.as_str()),
        None => metric_id.as_str().to_string(),
    }
}

/// Writes the per-instance rank and significance tables into `dir`,
/// returning the paths written.
pub fn write_plot_data(doc: &ReportDocument, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut groups: Vec<((MetricId, Option<u32>), Vec<&RankCi>)> = Vec::new();
    for ci in &doc.cis {
        let key = (ci.metric_id, ci.timeframe);
        match groups.last_mut() {
            Some((last, cis)) if *last == key => cis.push(ci),
            _ => groups.push((key, vec![ci])),
        }
    }

    let mut written = Vec::new();
    for ((metric_id, timeframe), cis) in groups {
        let slug = instance_slug(metric_id, timeframe);

        let mut ranked = cis.clone();
        ranked.sort_by(|a, b| {
            a.mean_rank.total_cmp(&b.mean_rank).then_with(|| a.algorithm.cmp(&b.algorithm))
        });
        written.push(csv_file(
            dir,
            &format!("rank_{slug}.csv"),
            &["algorithm", "mean_rank", "ci_low", "ci_high"],
            |wtr| {
                for ci in &ranked {
                    wtr.write_record([
                        ci.algorithm.as_str(),
                        &ci.mean_rank.to_string(),
                        &ci.ci_low.to_string(),
                        &ci.ci_high.to_string(),
                    ])?;
                }
                Ok(())
            },
        )?);

        let algorithms: Vec<&str> = cis.iter().map(|ci| ci.algorithm.as_str()).collect();
        let mut significant: BTreeMap<(&str, &str), bool> = BTreeMap::new();
        for c in &doc.comparisons {
            if c.metric_id == metric_id && c.timeframe == timeframe {
                significant.insert((&c.algorithm_a, &c.algorithm_b), c.significant);
                significant.insert((&c.algorithm_b, &c.algorithm_a), c.significant);
            }
        }
        let mut header = vec!["algorithm"];
        header.extend(&algorithms);
        written.push(csv_file(
            dir,
            &format!("significance_{slug}.csv"),
            &header,
            |wtr| {
                for &row in &algorithms {
                    let mut record = vec![row.to_string()];
                    for &col in &algorithms {
                        let flag = significant.get(&(row, col)).copied().unwrap_or(false);
                        record.push(String::from(if flag { "1" } else { "0" }));
                    }
                    wtr.write_record(&record)?;
                }
                Ok(())
            },
        )?);
    }
    Ok(written)
}
