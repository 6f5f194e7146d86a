#![cfg_attr(not(test), no_std)]

//! Reliability analysis for reinforcement-learning training curves and
//! fixed-policy rollout scores.
//!
//! The crate quantifies *how reliably* an algorithm trains, separately from
//! *how well* it performs, using robust dispersion and tail-risk statistics:
//!
//! * [`robust_stats`] — percentiles, IQR, MAD, and empirical CVaR.
//! * [`timeseries`] — differencing, trailing-window IQR, low-pass filtering,
//!   and drawdown transforms of evaluation curves.
//! * [`metrics`] — the seven reliability metrics (DT, SRT, LRT, DR, RR, DF,
//!   RF) plus median performance, with normalization and time-frame collapse.
//! * [`ranking`] — per-task rankings (rank 1 = best) and mean ranks across
//!   tasks, with averaged ranks on ties.
//! * [`inference`] — bootstrap confidence intervals on mean ranks, pairwise
//!   permutation tests, and multiple-comparison corrections
//!   (Benjamini-Yekutieli, Holm-Bonferroni).
//! * [`synthgen`] — a deterministic synthetic curve/rollout generator with
//!   known ground-truth reliability orderings, for tests and demos.
//!
//! The crate is `no_std` (with `alloc`): it holds the pure computation, while
//! file formats, the CLI, and parallel drivers live in the companion `relmet`
//! crate. Every randomized routine derives its generator from an explicit
//! seed plus structural indices (run, iteration, task), so results are
//! bit-reproducible regardless of execution order or parallelism.

extern crate alloc;

pub mod config;
pub mod data;
pub mod inference;
pub mod metrics;
pub mod ranking;
pub mod robust_stats;
pub mod seeding;
pub mod synthgen;
pub mod timeseries;

pub use config::{AnalysisConfig, CorrectionMethod, NormalizationMode, WindowSpec, WindowUnit};
pub use data::{Dataset, EvaluationPoint, RolloutSet, TrainingCurve};
pub use metrics::{MetricId, MetricResult, Orientation};
pub use ranking::RankTable;
