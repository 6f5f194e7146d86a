//! `relmet` — reliability metrics for reinforcement-learning results.
//!
//! Subcommands: `validate` (dataset health), `metrics` (per-task values),
//! `rank` (cross-task rank tables), `compare` (pairwise permutation tests),
//! `report` (everything, as JSON or a CSV bundle), and `synth` (synthetic
//! curves with a known reliability profile). Exit codes: 0 on success, 2 for
//! input problems (unreadable or malformed files, bad configuration), 3 for
//! computation or output failures.

use std::fmt::Display;
use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relmet::{config_file, ingest, pipeline, plot_data, report};
use reliability_core::config::AnalysisConfig;
use reliability_core::data::Dataset;
use reliability_core::synthgen::{self, ProcessKind, SynthSpec};

#[derive(Parser)]
#[command(
    name = "relmet",
    version,
    about = "Reliability metrics for reinforcement-learning results"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check input files and summarize dataset health.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        /// Print a human-readable summary instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Compute normalized, time-frame-collapsed metric values per task.
    Metrics {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Rank algorithms per metric across tasks.
    Rank {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Permutation-test every algorithm pair per metric, with correction.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Worker threads for resampling (default: all cores). The output
        /// does not depend on this.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        jobs: Option<u32>,
    },
    /// Full analysis: metrics, rank tables, bootstrap CIs, comparisons.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; without it the JSON report prints to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also write per-metric rank and significance tables (needs --out).
        #[arg(long)]
        plot_data: bool,
        /// Worker threads for resampling (default: all cores). The output
        /// does not depend on this.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        jobs: Option<u32>,
    },
    /// Generate synthetic training curves with a known reliability profile.
    Synth(SynthArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Training curves: CSV `algorithm,task,run,step,value` (or a .json
    /// mirror).
    #[arg(long)]
    train: Option<PathBuf>,
    /// Rollout scores: CSV `algorithm,task,run,rollout,value` (or a .json
    /// mirror).
    #[arg(long)]
    rollouts: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key=value` configuration file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trailing window size for DT (meaning set by --window-unit).
    #[arg(long)]
    window_size: Option<u64>,
    /// eval_points or env_steps.
    #[arg(long, value_parser = config_file::parse_window_unit)]
    window_unit: Option<reliability_core::config::WindowUnit>,
    /// Odd number of evaluation points in the DR smoothing filter.
    #[arg(long)]
    lowpass_window: Option<u64>,
    /// Tail fraction for CVaR-based metrics, in (0, 1).
    #[arg(long)]
    cvar_alpha: Option<f64>,
    /// Number of contiguous time frames DT and DR collapse into.
    #[arg(long)]
    num_timeframes: Option<u32>,
    /// Comma-separated frame indices to report (default: all).
    #[arg(long)]
    timeframe_select: Option<String>,
    #[arg(long)]
    num_bootstraps: Option<u32>,
    #[arg(long)]
    num_permutations: Option<u32>,
    /// Significance level applied to corrected p-values, in (0, 1).
    #[arg(long)]
    significance_level: Option<f64>,
    /// benjamini_yekutieli or holm_bonferroni.
    #[arg(long, value_parser = config_file::parse_correction)]
    correction: Option<reliability_core::config::CorrectionMethod>,
    #[arg(long)]
    rng_seed: Option<u64>,
    /// median_range, median_performance, or none.
    #[arg(long, value_parser = config_file::parse_normalization)]
    normalization: Option<reliability_core::config::NormalizationMode>,
    /// Evaluation points averaged into a run's final performance.
    #[arg(long)]
    final_perf_window: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// One report.json document.
    Json,
    /// metrics.csv, ranks.csv, cis.csv, and comparisons.csv.
    #[value(name = "csv_bundle", alias = "csv-bundle")]
    CsvBundle,
}

#[derive(Args)]
struct SynthArgs {
    /// Algorithm name stamped on the curves.
    #[arg(long)]
    algorithm: String,
    /// Task name stamped on the curves.
    #[arg(long)]
    task: String,
    /// Trend value at step 0.
    #[arg(long, default_value_t = 0.0)]
    intercept: f64,
    /// Trend increase per environment step.
    #[arg(long, default_value_t = 0.0)]
    slope: f64,
    /// Standard deviation of the Gaussian noise term.
    #[arg(long, default_value_t = 1.0)]
    noise_sigma: f64,
    /// Size of a transient performance drop when one fires.
    #[arg(long, default_value_t = 0.0)]
    drop_magnitude: f64,
    /// Per-point probability of a transient drop, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    drop_probability: f64,
    /// difference_stationary (shocks persist) or trend_stationary (shocks
    /// revert to the trend).
    #[arg(long, default_value = "difference_stationary", value_parser = parse_process)]
    process: ProcessKind,
    #[arg(long, default_value_t = 10)]
    num_runs: u32,
    /// Evaluation points per run.
    #[arg(long, default_value_t = 100)]
    num_points: u32,
    /// Environment steps between consecutive evaluations.
    #[arg(long, default_value_t = 1000)]
    step_interval: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_process(value: &str) -> Result<ProcessKind, String> {
    match value {
        "difference_stationary" => Ok(ProcessKind::DifferenceStationary),
        "trend_stationary" => Ok(ProcessKind::TrendStationary),
        _ => Err(String::from("expected `difference_stationary` or `trend_stationary`")),
    }
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    /// Unreadable or malformed input, bad configuration: exit code 2.
    fn input(err: impl Display) -> Self {
        CliError { message: err.to_string(), code: 2 }
    }

    /// Computation or output failure: exit code 3.
    fn compute(err: impl Display) -> Self {
        CliError { message: err.to_string(), code: 3 }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn load_dataset(input: &InputArgs) -> Result<(Dataset, Vec<String>), CliError> {
    if input.train.is_none() && input.rollouts.is_none() {
        return Err(CliError::input("provide --train and/or --rollouts"));
    }
    let mut warnings = Vec::new();
    let mut curves = Vec::new();
    let mut sets = Vec::new();
    if let Some(path) = &input.train {
        let parsed = ingest::load_training(path).map_err(CliError::input)?;
        warnings.extend(parsed.warnings);
        curves = parsed.records;
    }
    if let Some(path) = &input.rollouts {
        let parsed = ingest::load_rollouts(path).map_err(CliError::input)?;
        warnings.extend(parsed.warnings);
        sets = parsed.records;
    }
    let dataset = Dataset::new(curves, sets).map_err(CliError::input)?;
    Ok((dataset, warnings))
}

fn resolve_config(args: &ConfigArgs) -> Result<AnalysisConfig, CliError> {
    let mut cfg = AnalysisConfig::default();
    if let Some(path) = &args.config {
        config_file::apply_file(path, &mut cfg).map_err(CliError::input)?;
    }
    if let Some(v) = args.window_size {
        cfg.window_size.size = v;
    }
    if let Some(v) = args.window_unit {
        cfg.window_size.unit = v;
    }
    if let Some(v) = args.lowpass_window {
        cfg.lowpass_window = v;
    }
    if let Some(v) = args.cvar_alpha {
        cfg.cvar_alpha = v;
    }
    if let Some(v) = args.num_timeframes {
        cfg.num_timeframes = v;
    }
    if let Some(v) = &args.timeframe_select {
        cfg.timeframe_select = config_file::parse_frame_list(v)
            .map_err(|reason| CliError::input(format!("--timeframe-select: {reason}")))?;
    }
    if let Some(v) = args.num_bootstraps {
        cfg.num_bootstraps = v;
    }
    if let Some(v) = args.num_permutations {
        cfg.num_permutations = v;
    }
    if let Some(v) = args.significance_level {
        cfg.significance_level = v;
    }
    if let Some(v) = args.correction {
        cfg.correction = v;
    }
    if let Some(v) = args.rng_seed {
        cfg.rng_seed = v;
    }
    if let Some(v) = args.normalization {
        cfg.normalization = v;
    }
    if let Some(v) = args.final_perf_window {
        cfg.final_perf_window = v;
    }
    cfg.validate().map_err(CliError::input)?;
    Ok(cfg)
}

/// Runs `f` on a pool of `jobs` threads (shared default pool when `None`).
fn with_pool<T: Send>(
    jobs: Option<u32>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(CliError::compute)?;
            Ok(pool.install(f))
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::compute)?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { input, text } => {
            let (dataset, warnings) = load_dataset(&input)?;
            let mut summary = ingest::validate_dataset(&dataset);
            summary.warnings.splice(0..0, warnings);
            if text {
                print!("{}", ingest::summary_text(&summary));
                Ok(())
            } else {
                print_json(&summary)
            }
        }
        Command::Metrics { input, config } => {
            let (dataset, warnings) = load_dataset(&input)?;
            let cfg = resolve_config(&config)?;
            let (results, mut notes) =
                pipeline::compute_metrics(&dataset, &cfg).map_err(CliError::compute)?;
            notes.splice(0..0, warnings);
            print_json(&serde_json::json!({ "per_task_metrics": results, "notes": notes }))
        }
        Command::Rank { input, config } => {
            let (dataset, warnings) = load_dataset(&input)?;
            let cfg = resolve_config(&config)?;
            let (tables, mut notes) =
                pipeline::compute_rank_tables(&dataset, &cfg).map_err(CliError::compute)?;
            notes.splice(0..0, warnings);
            print_json(&serde_json::json!({ "rank_tables": tables, "notes": notes }))
        }
        Command::Compare { input, config, jobs } => {
            let (dataset, warnings) = load_dataset(&input)?;
            let cfg = resolve_config(&config)?;
            let (comparisons, mut notes) =
                with_pool(jobs, || pipeline::compute_comparisons(&dataset, &cfg))?
                    .map_err(CliError::compute)?;
            notes.splice(0..0, warnings);
            print_json(&serde_json::json!({ "comparisons": comparisons, "notes": notes }))
        }
        Command::Report { input, config, out, format, plot_data: plot, jobs } => {
            let (dataset, warnings) = load_dataset(&input)?;
            let cfg = resolve_config(&config)?;
            if plot && out.is_none() {
                return Err(CliError::input("--plot-data requires --out"));
            }
            if matches!(format, Format::CsvBundle) && out.is_none() {
                return Err(CliError::input("--format csv_bundle requires --out"));
            }
            let doc = with_pool(jobs, || pipeline::run_pipeline(&dataset, &cfg, warnings))?
                .map_err(CliError::compute)?;
            match &out {
                None => {
                    print!("{}", report::render_json(&doc).map_err(CliError::compute)?);
                }
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(|e| {
                        CliError::compute(format!("cannot create {}: {e}", dir.display()))
                    })?;
                    let mut written = match format {
                        Format::Json => report::write_json(&doc, dir),
                        Format::CsvBundle => report::write_csv_bundle(&doc, dir),
                    }
                    .map_err(CliError::compute)?;
                    if plot {
                        written.extend(
                            plot_data::write_plot_data(&doc, dir).map_err(CliError::compute)?,
                        );
                    }
                    for path in written {
                        eprintln!("wrote {}", path.display());
                    }
                }
            }
            Ok(())
        }
        Command::Synth(args) => {
            let spec = SynthSpec {
                algorithm: args.algorithm,
                task: args.task,
                intercept: args.intercept,
                slope: args.slope,
                noise_sigma: args.noise_sigma,
                drop_magnitude: args.drop_magnitude,
                drop_probability: args.drop_probability,
                process: args.process,
                num_runs: args.num_runs,
                num_points: args.num_points,
                step_interval: args.step_interval,
                seed: args.seed,
            };
            let curves = synthgen::generate_curves(&spec).map_err(CliError::input)?;
            match &args.out {
                None => ingest::write_training_csv(&curves, io::stdout().lock())
                    .map_err(CliError::compute)?,
                Some(path) => {
                    let file = fs::File::create(path).map_err(|e| {
                        CliError::compute(format!("cannot create {}: {e}", path.display()))
                    })?;
                    ingest::write_training_csv(&curves, file).map_err(CliError::compute)?;
                }
            }
            Ok(())
        }
    }
}
