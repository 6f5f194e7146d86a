//! Regenerates the synthetic dataset bundled under `tests/data/`: three
//! algorithm profiles (steady, volatile, spiky) on two tasks, with training
//! curves and fixed-policy rollout scores. Fully seeded, so rerunning this
//! always reproduces the committed files byte for byte.
//!
//! ```text
//! cargo run -p relmet --example make_synthetic_dataset
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use relmet::ingest::{write_rollout_csv, write_training_csv};
use reliability_core::data::{RolloutSet, TrainingCurve};
use reliability_core::synthgen::{generate_curves, generate_rollouts, ProcessKind, SynthSpec};

struct Profile {
    name: &'static str,
    noise_sigma: f64,
    drop_magnitude: f64,
    drop_probability: f64,
    rollout_sigma: f64,
}

struct Task {
    name: &'static str,
    intercept: f64,
    slope: f64,
}

const PROFILES: [Profile; 3] = [
    Profile {
        name: "steady",
        noise_sigma: 0.8,
        drop_magnitude: 0.0,
        drop_probability: 0.0,
        rollout_sigma: 1.0,
    },
    Profile {
        name: "volatile",
        noise_sigma: 6.0,
        drop_magnitude: 0.0,
        drop_probability: 0.0,
        rollout_sigma: 8.0,
    },
    Profile {
        name: "spiky",
        noise_sigma: 0.8,
        drop_magnitude: 25.0,
        drop_probability: 0.04,
        rollout_sigma: 1.5,
    },
];

const TASKS: [Task; 2] = [
    Task { name: "env-a", intercept: 0.0, slope: 0.002 },
    Task { name: "env-b", intercept: 10.0, slope: 0.0008 },
];

const NUM_RUNS: u32 = 5;
const NUM_POINTS: u32 = 60;
const STEP_INTERVAL: u64 = 500;
const POLICIES: u32 = 3;
const ROLLOUTS_PER_POLICY: u32 = 20;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    std::fs::create_dir_all(&dir).expect("create tests/data");

    let mut curves: Vec<TrainingCurve> = Vec::new();
    let mut rollouts: Vec<RolloutSet> = Vec::new();
    for (pi, profile) in PROFILES.iter().enumerate() {
        for (ti, task) in TASKS.iter().enumerate() {
            let seed = 9_000 + (pi as u64) * 10 + ti as u64;
            let spec = SynthSpec {
                algorithm: profile.name.into(),
                task: task.name.into(),
                intercept: task.intercept,
                slope: task.slope,
                noise_sigma: profile.noise_sigma,
                drop_magnitude: profile.drop_magnitude,
                drop_probability: profile.drop_probability,
                process: ProcessKind::TrendStationary,
                num_runs: NUM_RUNS,
                num_points: NUM_POINTS,
                step_interval: STEP_INTERVAL,
                seed,
            };
            curves.extend(generate_curves(&spec).expect("valid curve spec"));

            let final_step = u64::from(NUM_POINTS - 1) * STEP_INTERVAL;
            let mean = task.intercept + task.slope * final_step as f64;
            for policy in 0..POLICIES {
                rollouts.push(
                    generate_rollouts(
                        profile.name,
                        task.name,
                        &format!("policy{policy}"),
                        mean,
                        profile.rollout_sigma,
                        ROLLOUTS_PER_POLICY,
                        seed * 100 + u64::from(policy),
                    )
                    .expect("valid rollout spec"),
                );
            }
        }
    }

    let train_path = dir.join("synthetic_train.csv");
    let rollout_path = dir.join("synthetic_rollouts.csv");
    write_training_csv(&curves, BufWriter::new(File::create(&train_path).unwrap())).unwrap();
    write_rollout_csv(&rollouts, BufWriter::new(File::create(&rollout_path).unwrap())).unwrap();
    println!("wrote {} ({} curves)", train_path.display(), curves.len());
    println!("wrote {} ({} rollout sets)", rollout_path.display(), rollouts.len());
}
