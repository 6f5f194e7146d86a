//! Cross-task algorithm rankings.
//!
//! Within each task the algorithms' metric values are converted to 1-based
//! ranks (rank 1 = best under the metric's orientation; exact ties share the
//! average of the positions they occupy), and an algorithm's overall score
//! for the metric is its mean rank across tasks. Mean ranks are the unit the
//! downstream confidence intervals and pairwise tests operate on.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{MetricId, Orientation};

/// Why a ranking could not be built.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankError {
    #[error("nothing to rank")]
    EmptyInput,
    #[error("algorithm {algorithm} has no value on task {task}; rankings need every algorithm on every task")]
    MissingValue { algorithm: String, task: String },
    #[error("algorithm {algorithm} has a non-finite value on task {task}")]
    NonFinite { algorithm: String, task: String },
}

/// Assigns 1-based ranks to `values` under `orientation`. Exact-value ties
/// receive the average of the positions they span, so rank sums always equal
/// n(n+1)/2.
pub fn assign_ranks(values: &[f64], orientation: Orientation) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    match orientation {
        Orientation::LowerIsBetter => {
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]))
        }
        Orientation::HigherIsBetter => {
            order.sort_by(|&a, &b| values[b].total_cmp(&values[a]))
        }
    }
    let mut ranks = alloc::vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i+1 ..= j+1 (1-based); their average is (i + j + 2) / 2.
        let shared = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Mean rank per algorithm from a task-major value matrix:
/// `values_by_task[t][a]` is algorithm `a`'s value on task `t`. Every row
/// must have the same length. This is the hot primitive the resampling
/// procedures re-rank with.
pub fn mean_ranks(values_by_task: &[Vec<f64>], orientation: Orientation) -> Vec<f64> {
    let Some(first) = values_by_task.first() else {
        return Vec::new();
    };
    let n = first.len();
    let mut sums = alloc::vec![0.0; n];
    for row in values_by_task {
        debug_assert_eq!(row.len(), n, "ragged rank matrix");
        for (sum, rank) in sums.iter_mut().zip(assign_ranks(row, orientation)) {
            *sum += rank;
        }
    }
    let tasks = values_by_task.len() as f64;
    for s in &mut sums {
        *s /= tasks;
    }
    sums
}

/// One algorithm's row in a [`RankTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub algorithm: String,
    /// Mean of the per-task ranks (1 = best).
    pub mean_rank: f64,
    /// Rank on each task that entered the mean.
    pub task_ranks: BTreeMap<String, f64>,
}

/// Ranking of all algorithms for one metric (and, for per-step metrics, one
/// time frame), sorted best-first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub metric_id: MetricId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeframe: Option<u32>,
    /// Tasks the ranking covers, sorted.
    pub tasks: Vec<String>,
    pub entries: Vec<RankEntry>,
}

/// Builds the rank table for one metric from per-algorithm, per-task values.
/// Every algorithm must carry a finite value on every task present anywhere
/// in the input.
pub fn build_rank_table(
    metric_id: MetricId,
    timeframe: Option<u32>,
    values: &BTreeMap<String, BTreeMap<String, f64>>,
) -> Result<RankTable, RankError> {
    if values.is_empty() {
        return Err(RankError::EmptyInput);
    }
    let algorithms: Vec<&String> = values.keys().collect();
    let mut tasks: Vec<&String> = values.values().flat_map(|m| m.keys()).collect();
    tasks.sort();
    tasks.dedup();
    if tasks.is_empty() {
        return Err(RankError::EmptyInput);
    }

    let orientation = metric_id.orientation();
    let mut task_ranks: BTreeMap<&String, Vec<f64>> = BTreeMap::new();
    for &task in &tasks {
        let mut row = Vec::with_capacity(algorithms.len());
        for &algorithm in &algorithms {
            let v = values[algorithm].get(task).ok_or_else(|| RankError::MissingValue {
                algorithm: algorithm.clone(),
                task: task.clone(),
            })?;
            if !v.is_finite() {
                return Err(RankError::NonFinite {
                    algorithm: algorithm.clone(),
                    task: task.clone(),
                });
            }
            row.push(*v);
        }
        task_ranks.insert(task, assign_ranks(&row, orientation));
    }

    let mut entries: Vec<RankEntry> = algorithms
        .iter()
        .enumerate()
        .map(|(i, &algorithm)| {
            let per_task: BTreeMap<String, f64> =
                task_ranks.iter().map(|(&task, ranks)| (task.clone(), ranks[i])).collect();
            let mean_rank = per_task.values().sum::<f64>() / per_task.len() as f64;
            RankEntry { algorithm: algorithm.clone(), mean_rank, task_ranks: per_task }
        })
        .collect();
    entries.sort_by(|a, b| {
        a.mean_rank.total_cmp(&b.mean_rank).then_with(|| a.algorithm.cmp(&b.algorithm))
    });

    Ok(RankTable {
        metric_id,
        timeframe,
        tasks: tasks.into_iter().cloned().collect(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn table(rows: &[(&str, &[(&str, f64)])]) -> BTreeMap<String, BTreeMap<String, f64>> {
        rows.iter()
            .map(|(algorithm, tasks)| {
                (
                    algorithm.to_string(),
                    tasks.iter().map(|&(t, v)| (t.to_string(), v)).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn ties_share_averaged_positions() {
        // {A: 1, B: 1, C: 2}, lower is better -> {1.5, 1.5, 3}.
        let ranks = assign_ranks(&[1.0, 1.0, 2.0], Orientation::LowerIsBetter);
        assert_eq!(ranks, vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn orientation_flips_rank_one() {
        let ranks = assign_ranks(&[1.0, 1.0, 2.0], Orientation::HigherIsBetter);
        assert_eq!(ranks, vec![2.5, 2.5, 1.0]);
    }

    #[test]
    fn rank_sums_are_preserved_under_ties() {
        let cases: [&[f64]; 4] = [
            &[3.0, 3.0, 3.0, 3.0],
            &[1.0, 2.0, 2.0, 9.0, 9.0],
            &[5.0],
            &[0.1, 0.2, 0.3],
        ];
        for values in cases {
            let n = values.len();
            let sum: f64 = assign_ranks(values, Orientation::LowerIsBetter).iter().sum();
            assert_eq!(sum, (n * (n + 1)) as f64 / 2.0);
        }
    }

    #[test]
    fn mean_ranks_averages_per_task_ranks() {
        // Task 0: a=1, b=2; task 1: a=2, b=1 -> both mean 1.5.
        let m = mean_ranks(
            &[vec![1.0, 5.0], vec![5.0, 1.0]],
            Orientation::LowerIsBetter,
        );
        assert_eq!(m, vec![1.5, 1.5]);
    }

    #[test]
    fn rank_table_sorts_best_first() {
        let values = table(&[
            ("a", &[("t1", 1.0), ("t2", 1.0)]),
            ("b", &[("t1", 2.0), ("t2", 2.0)]),
            ("c", &[("t1", 3.0), ("t2", 0.0)]),
        ]);
        let t = build_rank_table(MetricId::Dt, None, &values).unwrap();
        assert_eq!(t.tasks, vec!["t1".to_string(), "t2".to_string()]);
        // Per task: t1 ranks a=1, b=2, c=3; t2 ranks c=1, a=2, b=3.
        let names: Vec<&str> = t.entries.iter().map(|e| e.algorithm.as_str()).collect();
        assert_eq!(names, vec!["a", "c", "b"]);
        assert_eq!(t.entries[0].mean_rank, 1.5);
        assert_eq!(t.entries[1].mean_rank, 2.0);
        assert_eq!(t.entries[2].mean_rank, 2.5);
        assert_eq!(t.entries[0].task_ranks["t1"], 1.0);
        assert_eq!(t.entries[0].task_ranks["t2"], 2.0);
    }

    #[test]
    fn higher_is_better_metrics_rank_large_values_first() {
        let values = table(&[("a", &[("t", 0.9)]), ("b", &[("t", 0.1)])]);
        let t = build_rank_table(MetricId::Rr, None, &values).unwrap();
        assert_eq!(t.entries[0].algorithm, "a");
        assert_eq!(t.entries[0].mean_rank, 1.0);
    }

    #[test]
    fn missing_task_value_names_the_hole() {
        let values = table(&[("a", &[("t1", 1.0), ("t2", 1.0)]), ("b", &[("t1", 2.0)])]);
        let err = build_rank_table(MetricId::Dt, None, &values).unwrap_err();
        assert_eq!(
            err,
            RankError::MissingValue { algorithm: "b".to_string(), task: "t2".to_string() }
        );
    }

    #[test]
    fn equal_mean_ranks_break_ties_by_name() {
        let values = table(&[("z", &[("t", 1.0)]), ("a", &[("t", 1.0)])]);
        let t = build_rank_table(MetricId::Dt, None, &values).unwrap();
        assert_eq!(t.entries[0].algorithm, "a");
        assert_eq!(t.entries[0].mean_rank, t.entries[1].mean_rank);
    }
}
