//! Plain `key=value` analysis-configuration files.
//!
//! Keys are the analysis-configuration field names; `#` starts a comment and
//! blank lines are ignored. Values use the same spellings as the
//! command-line flags, so a file can be copied from a report's `config_echo`
//! line by line. `window_size` optionally carries a unit suffix
//! (`25:env_steps`); `timeframe_select` is a comma-separated list of frame
//! indices (empty selects every frame). Unknown keys are errors, not
//! warnings, so typos cannot silently fall back to defaults.

use std::fs;
use std::io;
use std::path::Path;

use reliability_core::config::{
    AnalysisConfig, CorrectionMethod, NormalizationMode, WindowUnit,
};
use thiserror::Error;

/// A rejected configuration file.
#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path} line {line}: expected `key=value`, got `{text}`")]
    Syntax { path: String, line: usize, text: String },
    #[error("{path} line {line}: unknown configuration key `{key}`")]
    UnknownKey { path: String, line: usize, key: String },
    #[error("{path} line {line}: invalid value `{value}` for `{key}`: {reason}")]
    BadValue { path: String, line: usize, key: String, value: String, reason: String },
}

/// Applies `key=value` lines from `path` on top of `cfg`. Range validation
/// is left to the caller so command-line overrides can still amend a file
/// value before the combined configuration is checked once.
pub fn apply_file(path: &Path, cfg: &mut AnalysisConfig) -> Result<(), ConfigFileError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path)
        .map_err(|source| ConfigFileError::Io { path: origin.clone(), source })?;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigFileError::Syntax {
                path: origin.clone(),
                line,
                text: content.into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        apply_pair(key, value, cfg).map_err(|reason| match reason {
            PairError::UnknownKey => ConfigFileError::UnknownKey {
                path: origin.clone(),
                line,
                key: key.into(),
            },
            PairError::BadValue(reason) => ConfigFileError::BadValue {
                path: origin.clone(),
                line,
                key: key.into(),
                value: value.into(),
                reason,
            },
        })?;
    }
    Ok(())
}

enum PairError {
    UnknownKey,
    BadValue(String),
}

impl From<String> for PairError {
    fn from(reason: String) -> Self {
        PairError::BadValue(reason)
    }
}

fn apply_pair(key: &str, value: &str, cfg: &mut AnalysisConfig) -> Result<(), PairError> {
    match key {
        "window_size" => {
            let (size, unit) = parse_window_size(value)?;
            cfg.window_size.size = size;
            if let Some(unit) = unit {
                cfg.window_size.unit = unit;
            }
        }
        "window_unit" => cfg.window_size.unit = parse_window_unit(value)?,
        "lowpass_window" => cfg.lowpass_window = parse_num(value, "a positive integer")?,
        "cvar_alpha" => cfg.cvar_alpha = parse_num(value, "a number in (0, 1)")?,
        "num_timeframes" => cfg.num_timeframes = parse_num(value, "a positive integer")?,
        "timeframe_select" => cfg.timeframe_select = parse_frame_list(value)?,
        "num_bootstraps" => cfg.num_bootstraps = parse_num(value, "a positive integer")?,
        "num_permutations" => cfg.num_permutations = parse_num(value, "a positive integer")?,
        "significance_level" => cfg.significance_level = parse_num(value, "a number in (0, 1)")?,
        "correction" => cfg.correction = parse_correction(value)?,
        "rng_seed" => cfg.rng_seed = parse_num(value, "an unsigned integer")?,
        "normalization" => cfg.normalization = parse_normalization(value)?,
        "final_perf_window" => cfg.final_perf_window = parse_num(value, "a positive integer")?,
        _ => return Err(PairError::UnknownKey),
    }
    Ok(())
}

fn parse_num<T: core::str::FromStr>(value: &str, expected: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("expected {expected}"))
}

/// Parses `25` or `25:env_steps` / `25 env_steps`.
pub fn parse_window_size(value: &str) -> Result<(u64, Option<WindowUnit>), String> {
    let mut parts = value.splitn(2, [':', ' ']);
    let size = parse_num(parts.next().unwrap_or(""), "a positive integer")?;
    let unit = match parts.next() {
        None => None,
        Some(unit) => Some(parse_window_unit(unit.trim())?),
    };
    Ok((size, unit))
}

/// Parses `eval_points` or `env_steps`.
pub fn parse_window_unit(value: &str) -> Result<WindowUnit, String> {
    match value {
        "eval_points" => Ok(WindowUnit::EvalPoints),
        "env_steps" => Ok(WindowUnit::EnvSteps),
        _ => Err(String::from("expected `eval_points` or `env_steps`")),
    }
}

/// Parses `benjamini_yekutieli` or `holm_bonferroni`.
pub fn parse_correction(value: &str) -> Result<CorrectionMethod, String> {
    match value {
        "benjamini_yekutieli" => Ok(CorrectionMethod::BenjaminiYekutieli),
        "holm_bonferroni" => Ok(CorrectionMethod::HolmBonferroni),
        _ => Err(String::from("expected `benjamini_yekutieli` or `holm_bonferroni`")),
    }
}

/// Parses `median_range`, `median_performance`, or `none`.
pub fn parse_normalization(value: &str) -> Result<NormalizationMode, String> {
    match value {
        "median_range" => Ok(NormalizationMode::MedianRange),
        "median_performance" => Ok(NormalizationMode::MedianPerformance),
        "none" => Ok(NormalizationMode::None),
        _ => Err(String::from("expected `median_range`, `median_performance`, or `none`")),
    }
}

/// Parses a comma-separated list of frame indices; empty selects all frames.
pub fn parse_frame_list(value: &str) -> Result<Vec<u32>, String> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|part| parse_num(part.trim(), "a comma-separated list of frame indices"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply_text(text: &str) -> Result<AnalysisConfig, ConfigFileError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("analysis.cfg");
        fs::write(&path, text).unwrap();
        let mut cfg = AnalysisConfig::default();
        apply_file(&path, &mut cfg)?;
        Ok(cfg)
    }

    #[test]
    fn values_override_defaults_and_comments_are_ignored() {
        let cfg = apply_text(
            "# resampling budget\n\
             num_bootstraps = 200\n\
             \n\
             cvar_alpha=0.1   # tail size\n\
             correction=holm_bonferroni\n\
             normalization=none\n\
             timeframe_select=0,2\n\
             window_size=50:env_steps\n",
        )
        .unwrap();
        assert_eq!(cfg.num_bootstraps, 200);
        assert_eq!(cfg.cvar_alpha, 0.1);
        assert_eq!(cfg.correction, CorrectionMethod::HolmBonferroni);
        assert_eq!(cfg.normalization, NormalizationMode::None);
        assert_eq!(cfg.timeframe_select, vec![0, 2]);
        assert_eq!(cfg.window_size.size, 50);
        assert_eq!(cfg.window_size.unit, WindowUnit::EnvSteps);
        // Untouched fields keep their defaults.
        assert_eq!(cfg.num_permutations, 10_000);
    }

    #[test]
    fn unknown_key_is_an_error_with_line_number() {
        let err = apply_text("num_bootstraps=200\nnum_bootstrap=100\n").unwrap_err();
        match err {
            ConfigFileError::UnknownKey { line, key, .. } => {
                assert_eq!(line, 2);
                assert_eq!(key, "num_bootstrap");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_values_name_key_and_expectation() {
        let err = apply_text("cvar_alpha=five\n").unwrap_err();
        match err {
            ConfigFileError::BadValue { key, value, reason, line, .. } => {
                assert_eq!(key, "cvar_alpha");
                assert_eq!(value, "five");
                assert_eq!(line, 1);
                assert!(reason.contains("(0, 1)"));
            }
            other => panic!("unexpected error {other:?}"),
        }
        let err = apply_text("correction=bonferroni\n").unwrap_err();
        assert!(matches!(err, ConfigFileError::BadValue { .. }));
    }

    #[test]
    fn missing_equals_is_a_syntax_error() {
        let err = apply_text("num_bootstraps 200\n").unwrap_err();
        assert!(matches!(err, ConfigFileError::Syntax { line: 1, .. }));
    }

    #[test]
    fn empty_frame_selection_selects_all() {
        let cfg = apply_text("timeframe_select=\n").unwrap();
        assert!(cfg.timeframe_select.is_empty());
    }

    #[test]
    fn window_size_accepts_bare_and_suffixed_forms() {
        assert_eq!(parse_window_size("25").unwrap(), (25, None));
        assert_eq!(
            parse_window_size("100 env_steps").unwrap(),
            (100, Some(WindowUnit::EnvSteps))
        );
        assert!(parse_window_size("25:steps").is_err());
    }
}
