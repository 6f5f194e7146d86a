//! Analysis configuration shared by every pipeline stage.
//!
//! All knobs that influence metric values or inference live here so that a
//! report can echo the complete recipe it was produced with. Defaults follow
//! the recommended disclosure set: 10,000 permutations, 1,000 bootstrap
//! resamples, significance 0.05 with Benjamini-Yekutieli correction, and
//! 3 time frames.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unit in which a sliding window is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowUnit {
    /// Window counts consecutive detrended evaluation samples.
    EvalPoints,
    /// Window spans a fixed number of environment steps.
    EnvSteps,
}

/// Sliding-window size together with its unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub size: u64,
    pub unit: WindowUnit,
}

/// Multiple-comparison correction applied to pairwise permutation tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMethod {
    /// Controls the false discovery rate under arbitrary dependence.
    BenjaminiYekutieli,
    /// Controls the family-wise error rate (step-down Bonferroni).
    HolmBonferroni,
}

/// How metric values are scaled before ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// During-training metrics divided by the median per-run performance
    /// range (95th percentile minus initial score); after-learning metrics
    /// divided by the median performance.
    MedianRange,
    /// Every normalizable metric divided by the median performance, for
    /// datasets where a performance range is unavailable or meaningless.
    MedianPerformance,
    /// Values pass through unscaled.
    None,
}

/// Complete set of analysis parameters.
///
/// `timeframe_select` is empty to report every time frame; otherwise it lists
/// the frame indices (0-based) to keep after collapsing per-step series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Trailing window for dispersion-across-time.
    pub window_size: WindowSpec,
    /// Centered moving-average width (odd, in evaluation points) applied
    /// before dispersion-across-runs.
    pub lowpass_window: u64,
    /// Tail fraction for every CVaR-based metric.
    pub cvar_alpha: f64,
    /// Number of contiguous equal spans the step range is collapsed into.
    pub num_timeframes: u32,
    /// Frame indices to report; empty means all frames.
    pub timeframe_select: alloc::vec::Vec<u32>,
    /// Bootstrap resamples behind each rank confidence interval.
    pub num_bootstraps: u32,
    /// Permutations per pairwise test.
    pub num_permutations: u32,
    /// Threshold applied to corrected p-values.
    pub significance_level: f64,
    pub correction: CorrectionMethod,
    /// Master seed; all resampling streams derive from it deterministically.
    pub rng_seed: u64,
    pub normalization: NormalizationMode,
    /// Number of trailing evaluation scores averaged into a run's final
    /// performance.
    pub final_perf_window: u32,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window_size: WindowSpec { size: 25, unit: WindowUnit::EvalPoints },
            lowpass_window: 25,
            cvar_alpha: 0.05,
            num_timeframes: 3,
            timeframe_select: alloc::vec::Vec::new(),
            num_bootstraps: 1_000,
            num_permutations: 10_000,
            significance_level: 0.05,
            correction: CorrectionMethod::BenjaminiYekutieli,
            rng_seed: 0,
            normalization: NormalizationMode::MedianRange,
            final_perf_window: 1,
        }
    }
}

/// A rejected configuration value, naming the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("window_size must be positive")]
    ZeroWindow,
    #[error("lowpass_window must be a positive odd integer, got {0}")]
    BadLowpassWindow(u64),
    #[error("cvar_alpha must lie in (0, 1), got {0}")]
    BadCvarAlpha(f64),
    #[error("num_timeframes must be positive")]
    ZeroTimeframes,
    #[error("timeframe_select entry {index} is out of range for {frames} time frames")]
    TimeframeOutOfRange { index: u32, frames: u32 },
    #[error("num_bootstraps must be positive")]
    ZeroBootstraps,
    #[error("num_permutations must be positive")]
    ZeroPermutations,
    #[error("significance_level must lie in (0, 1), got {0}")]
    BadSignificance(f64),
    #[error("final_perf_window must be positive")]
    ZeroFinalPerfWindow,
}

impl AnalysisConfig {
    /// Checks every field range; returns the first violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window_size.size == 0 {
            return Err(ConfigError::ZeroWindow);
        }
        if self.lowpass_window == 0 || self.lowpass_window % 2 == 0 {
            return Err(ConfigError::BadLowpassWindow(self.lowpass_window));
        }
        if !(self.cvar_alpha > 0.0 && self.cvar_alpha < 1.0) {
            return Err(ConfigError::BadCvarAlpha(self.cvar_alpha));
        }
        if self.num_timeframes == 0 {
            return Err(ConfigError::ZeroTimeframes);
        }
        if let Some(&index) = self
            .timeframe_select
            .iter()
            .find(|&&f| f >= self.num_timeframes)
        {
            return Err(ConfigError::TimeframeOutOfRange { index, frames: self.num_timeframes });
        }
        if self.num_bootstraps == 0 {
            return Err(ConfigError::ZeroBootstraps);
        }
        if self.num_permutations == 0 {
            return Err(ConfigError::ZeroPermutations);
        }
        if !(self.significance_level > 0.0 && self.significance_level < 1.0) {
            return Err(ConfigError::BadSignificance(self.significance_level));
        }
        if self.final_perf_window == 0 {
            return Err(ConfigError::ZeroFinalPerfWindow);
        }
        Ok(())
    }

    /// True when frame `index` should be reported under `timeframe_select`.
    pub fn frame_selected(&self, index: u32) -> bool {
        self.timeframe_select.is_empty() || self.timeframe_select.contains(&index)
    }
}
