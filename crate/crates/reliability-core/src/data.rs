//! Data model: evaluation curves, rollout score sets, and the dataset
//! container that groups them by (algorithm, task).
//!
//! Scores must be finite and evaluation steps strictly increasing; those
//! invariants are enforced at construction so the metric layer can assume
//! them. A curve may have a single point: such runs are unusable for
//! during-training metrics (which need differences) but still contribute a
//! final performance.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One evaluation: the environment step it was taken at and the score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationPoint {
    pub step: u64,
    pub value: f64,
}

/// Structurally invalid curve or rollout data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("curve {algorithm}/{task}/{run} has no evaluation points")]
    EmptyCurve { algorithm: String, task: String, run: String },
    #[error("curve {algorithm}/{task}/{run} has non-increasing steps at index {index}")]
    NonIncreasingSteps { algorithm: String, task: String, run: String, index: usize },
    #[error("curve {algorithm}/{task}/{run} has a non-finite score at step {step}")]
    NonFiniteScore { algorithm: String, task: String, run: String, step: u64 },
    #[error("rollout set {algorithm}/{task}/{run} has no scores")]
    EmptyRollouts { algorithm: String, task: String, run: String },
    #[error("rollout set {algorithm}/{task}/{run} has a non-finite score at index {index}")]
    NonFiniteRollout { algorithm: String, task: String, run: String, index: usize },
    #[error("duplicate training run {algorithm}/{task}/{run}")]
    DuplicateRun { algorithm: String, task: String, run: String },
    #[error("duplicate rollout set {algorithm}/{task}/{run}")]
    DuplicateRolloutSet { algorithm: String, task: String, run: String },
}

/// A single training run's evaluation curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub algorithm: String,
    pub task: String,
    pub run: String,
    pub points: Vec<EvaluationPoint>,
}

impl TrainingCurve {
    /// Builds a curve, requiring at least one point, strictly increasing
    /// steps, and finite scores.
    pub fn new(
        algorithm: String,
        task: String,
        run: String,
        points: Vec<EvaluationPoint>,
    ) -> Result<Self, DataError> {
        let curve = Self { algorithm, task, run, points };
        curve.check()?;
        Ok(curve)
    }

    fn check(&self) -> Result<(), DataError> {
        if self.points.is_empty() {
            return Err(DataError::EmptyCurve {
                algorithm: self.algorithm.clone(),
                task: self.task.clone(),
                run: self.run.clone(),
            });
        }
        for (index, pair) in self.points.windows(2).enumerate() {
            if pair[1].step <= pair[0].step {
                return Err(DataError::NonIncreasingSteps {
                    algorithm: self.algorithm.clone(),
                    task: self.task.clone(),
                    run: self.run.clone(),
                    index: index + 1,
                });
            }
        }
        if let Some(p) = self.points.iter().find(|p| !p.value.is_finite()) {
            return Err(DataError::NonFiniteScore {
                algorithm: self.algorithm.clone(),
                task: self.task.clone(),
                run: self.run.clone(),
                step: p.step,
            });
        }
        Ok(())
    }

    /// Scores in step order.
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Mean of the last `window` scores (clamped to the curve length).
    pub fn final_performance(&self, window: u32) -> f64 {
        let n = self.points.len();
        let w = (window.max(1) as usize).min(n);
        let tail = &self.points[n - w..];
        tail.iter().map(|p| p.value).sum::<f64>() / w as f64
    }
}

/// Scores from repeated rollouts of one fixed trained policy. `run` names the
/// training run whose final checkpoint produced the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSet {
    pub algorithm: String,
    pub task: String,
    pub run: String,
    pub scores: Vec<f64>,
}

impl RolloutSet {
    /// Builds a rollout set, requiring at least one finite score.
    pub fn new(
        algorithm: String,
        task: String,
        run: String,
        scores: Vec<f64>,
    ) -> Result<Self, DataError> {
        if scores.is_empty() {
            return Err(DataError::EmptyRollouts { algorithm, task, run });
        }
        if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
            return Err(DataError::NonFiniteRollout { algorithm, task, run, index });
        }
        Ok(Self { algorithm, task, run, scores })
    }
}

/// Everything loaded for one analysis, grouped by (algorithm, task) with
/// runs sorted by run id so iteration order is deterministic.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    curves: BTreeMap<(String, String), Vec<TrainingCurve>>,
    rollouts: BTreeMap<(String, String), Vec<RolloutSet>>,
}

impl Dataset {
    /// Groups curves and rollout sets, rejecting duplicate identities.
    pub fn new(curves: Vec<TrainingCurve>, rollouts: Vec<RolloutSet>) -> Result<Self, DataError> {
        let mut ds = Self::default();
        for curve in curves {
            curve.check()?;
            let group = ds
                .curves
                .entry((curve.algorithm.clone(), curve.task.clone()))
                .or_default();
            if group.iter().any(|c| c.run == curve.run) {
                return Err(DataError::DuplicateRun {
                    algorithm: curve.algorithm,
                    task: curve.task,
                    run: curve.run,
                });
            }
            group.push(curve);
        }
        for set in rollouts {
            let set = RolloutSet::new(set.algorithm, set.task, set.run, set.scores)?;
            let group = ds
                .rollouts
                .entry((set.algorithm.clone(), set.task.clone()))
                .or_default();
            if group.iter().any(|s| s.run == set.run) {
                return Err(DataError::DuplicateRolloutSet {
                    algorithm: set.algorithm,
                    task: set.task,
                    run: set.run,
                });
            }
            group.push(set);
        }
        for group in ds.curves.values_mut() {
            group.sort_by(|a, b| a.run.cmp(&b.run));
        }
        for group in ds.rollouts.values_mut() {
            group.sort_by(|a, b| a.run.cmp(&b.run));
        }
        Ok(ds)
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty() && self.rollouts.is_empty()
    }

    /// Sorted unique algorithm names across curves and rollouts.
    pub fn algorithms(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self
            .curves
            .keys()
            .map(|(a, _)| a)
            .chain(self.rollouts.keys().map(|(a, _)| a))
            .collect();
        set.into_iter().cloned().collect()
    }

    /// Sorted unique task names across curves and rollouts.
    pub fn tasks(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self
            .curves
            .keys()
            .map(|(_, t)| t)
            .chain(self.rollouts.keys().map(|(_, t)| t))
            .collect();
        set.into_iter().cloned().collect()
    }

    pub fn curves_for(&self, algorithm: &str, task: &str) -> Option<&[TrainingCurve]> {
        self.curves
            .get(&(String::from(algorithm), String::from(task)))
            .map(Vec::as_slice)
    }

    pub fn rollouts_for(&self, algorithm: &str, task: &str) -> Option<&[RolloutSet]> {
        self.rollouts
            .get(&(String::from(algorithm), String::from(task)))
            .map(Vec::as_slice)
    }

    /// Iterates curve groups in (algorithm, task) order.
    pub fn curve_groups(&self) -> impl Iterator<Item = (&(String, String), &[TrainingCurve])> {
        self.curves.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Iterates rollout groups in (algorithm, task) order.
    pub fn rollout_groups(&self) -> impl Iterator<Item = (&(String, String), &[RolloutSet])> {
        self.rollouts.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn all_curves(&self) -> impl Iterator<Item = &TrainingCurve> {
        self.curves.values().flatten()
    }

    pub fn all_rollouts(&self) -> impl Iterator<Item = &RolloutSet> {
        self.rollouts.values().flatten()
    }
}
