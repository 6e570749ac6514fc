//! Acquisition-speed benchmark.
//!
//! A run trains a fresh learner on one grammar until its token accuracy
//! reaches a target. Ratios compare each grammar's step count to concat's
//! under the same run seed.

pub mod acquire;
pub mod learner;
pub mod report;

use thiserror::Error;

pub use acquire::{
    acquisition_ratios, fixed_step_accuracy, train_for, train_until, Acquisition, AcquisitionConfig,
    AcquisitionResult, FixedStepResult, RunSeeds, SeedRun, Task,
};
pub use learner::{AccuracySource, Direction, Hashtable, Learner, LearnerSpec, NeuralLearner};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("concat did not reach the target for seed {seed} within {steps} steps")]
    ConcatDidNotConverge { seed: u64, steps: u64 },
    #[error(transparent)]
    Grammar(#[from] icy_core::GrammarError),
    #[error(transparent)]
    Neural(#[from] icy_neural::NeuralError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// Mean and `1.96 * s / sqrt(n)` with the sample standard deviation; the
/// interval is 0 for a single value.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

/// Work pool sized by `ICY_THREADS` (all cores when unset or invalid).
pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("ICY_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}
