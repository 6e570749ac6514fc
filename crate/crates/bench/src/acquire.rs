use std::time::Instant;

use icy_core::rng::{derive_seed, stream, Stream};
use icy_core::{generate_grammar, Geometry, Grammar, GrammarKind};
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::learner::{AccuracySource, Direction, Learner, LearnerSpec};
use crate::{mean_ci95, BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub acc_tgt: f64,
    pub cap_ratio: f64,
    pub batch_size: usize,
    /// Steps between accuracy evaluations.
    pub eval_interval: u64,
    /// Pairs per evaluation; the full table when it is smaller.
    pub eval_sample: usize,
    pub max_steps_absolute: u64,
    pub seeds: Vec<u64>,
    /// Keep per-evaluation accuracy curves in the results.
    pub record_curves: bool,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig {
            acc_tgt: 0.8,
            cap_ratio: 20.0,
            batch_size: 128,
            eval_interval: 10,
            eval_sample: 2048,
            max_steps_absolute: 200_000,
            seeds: (0..5).collect(),
            record_curves: false,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.acc_tgt >= 0.0 && self.acc_tgt <= 1.0) {
            return Err(BenchError::Config(format!("acc_tgt {} outside [0, 1]", self.acc_tgt)));
        }
        if self.cap_ratio.is_nan() || self.cap_ratio <= 1.0 {
            return Err(BenchError::Config(format!("cap_ratio {} must exceed 1", self.cap_ratio)));
        }
        if self.batch_size == 0 || self.eval_interval == 0 || self.eval_sample == 0 {
            return Err(BenchError::Config(
                "batch_size, eval_interval and eval_sample must be positive".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Config("no seeds".into()));
        }
        Ok(())
    }
}

/// Seeds of one paired run, all derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub grammar: u64,
    pub model: u64,
    pub batch: u64,
    pub eval: u64,
}

impl RunSeeds {
    pub fn derive(run_seed: u64) -> Self {
        RunSeeds {
            grammar: derive_seed(run_seed, "grammar"),
            model: derive_seed(run_seed, "model"),
            batch: derive_seed(run_seed, "batch"),
            eval: derive_seed(run_seed, "eval"),
        }
    }
}

/// Training pairs in one direction.
#[derive(Debug, Clone)]
pub struct Task {
    pub inputs: Vec<Vec<usize>>,
    pub targets: Vec<Vec<usize>>,
}

impl Task {
    pub fn from_grammar(grammar: &Grammar, direction: Direction) -> Task {
        let objects: Vec<Vec<usize>> = (0..grammar.len()).map(|n| grammar.object(n).0).collect();
        let messages: Vec<Vec<usize>> = (0..grammar.len()).map(|n| grammar.message(n).to_vec()).collect();
        match direction {
            Direction::Sender => Task {
                inputs: objects,
                targets: messages,
            },
            Direction::Receiver => Task {
                inputs: messages,
                targets: objects,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn select(&self, rows: &[usize]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        (
            rows.iter().map(|&r| self.inputs[r].clone()).collect(),
            rows.iter().map(|&r| self.targets[r].clone()).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    pub steps: u64,
    pub reached: bool,
    /// `(step, accuracy)` at each evaluation, when recorded.
    pub curve: Vec<(u64, f64)>,
    pub final_accuracy: f64,
}

struct Evaluator<'a> {
    task: &'a Task,
    sample: usize,
    rng: ChaCha8Rng,
}

impl Evaluator<'_> {
    fn accuracy(&mut self, learner: &dyn Learner) -> Result<f64> {
        let n = self.task.len();
        if n <= self.sample {
            return learner.evaluate(&self.task.inputs, &self.task.targets);
        }
        let rows = index::sample(&mut self.rng, n, self.sample).into_vec();
        let (x, y) = self.task.select(&rows);
        learner.evaluate(&x, &y)
    }
}

/// Trains until the evaluated token accuracy reaches `acc_tgt` or `max_steps`
/// steps have run. With `stop_early = false` it always runs `max_steps`.
pub fn train_for(
    learner: &mut dyn Learner,
    task: &Task,
    cfg: &AcquisitionConfig,
    seeds: RunSeeds,
    max_steps: u64,
    stop_early: bool,
) -> Result<Acquisition> {
    let mut batch_rng = stream(seeds.batch, Stream::BatchOrder);
    let mut eval = Evaluator {
        task,
        sample: cfg.eval_sample,
        rng: stream(seeds.eval, Stream::Evaluation),
    };
    let mut curve = Vec::new();
    let mut acc = eval.accuracy(learner)?;
    if cfg.record_curves {
        curve.push((0, acc));
    }
    if stop_early && acc >= cfg.acc_tgt {
        return Ok(Acquisition {
            steps: 0,
            reached: true,
            curve,
            final_accuracy: acc,
        });
    }
    for step in 1..=max_steps {
        let rows: Vec<usize> = (0..cfg.batch_size).map(|_| batch_rng.random_range(0..task.len())).collect();
        let (x, y) = task.select(&rows);
        let batch_acc = learner.train_step(&x, &y)?;
        if step % cfg.eval_interval != 0 && step != max_steps {
            continue;
        }
        acc = match learner.accuracy_source() {
            AccuracySource::EvalSample => eval.accuracy(learner)?,
            AccuracySource::TrainingBatch => batch_acc,
        };
        if cfg.record_curves {
            curve.push((step, acc));
        }
        if stop_early && acc >= cfg.acc_tgt {
            return Ok(Acquisition {
                steps: step,
                reached: true,
                curve,
                final_accuracy: acc,
            });
        }
    }
    Ok(Acquisition {
        steps: max_steps,
        reached: !stop_early || acc >= cfg.acc_tgt,
        curve,
        final_accuracy: acc,
    })
}

/// Steps to reach `acc_tgt` on `grammar`, at most `max_steps`.
pub fn train_until(
    learner: &mut dyn Learner,
    grammar: &Grammar,
    direction: Direction,
    cfg: &AcquisitionConfig,
    seeds: RunSeeds,
    max_steps: u64,
) -> Result<Acquisition> {
    let task = Task::from_grammar(grammar, direction);
    train_for(learner, &task, cfg, seeds, max_steps, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub steps: u64,
    pub ratio: f64,
    pub capped: bool,
    pub wall_seconds: f64,
    pub curve: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionResult {
    pub kind: GrammarKind,
    pub arch: String,
    pub params: Option<usize>,
    pub geometry: Geometry,
    pub runs: Vec<SeedRun>,
    pub mean: f64,
    pub ci95: f64,
}

impl AcquisitionResult {
    pub fn all_capped(&self) -> bool {
        !self.runs.is_empty() && self.runs.iter().all(|r| r.capped)
    }
}

struct RunOutcome {
    acquisition: Acquisition,
    params: Option<usize>,
    wall_seconds: f64,
}

fn run_one(
    spec: &LearnerSpec,
    kind: GrammarKind,
    geometry: Geometry,
    cfg: &AcquisitionConfig,
    run_seed: u64,
    max_steps: u64,
    stop_early: bool,
) -> Result<RunOutcome> {
    let start = Instant::now();
    let seeds = RunSeeds::derive(run_seed);
    let grammar = generate_grammar(kind, geometry, seeds.grammar)?;
    let mut learner = spec.build(geometry, seeds.model)?;
    let task = Task::from_grammar(&grammar, spec.direction());
    let acquisition = train_for(learner.as_mut(), &task, cfg, seeds, max_steps, stop_early)?;
    Ok(RunOutcome {
        acquisition,
        params: learner.param_count(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Concat step counts per seed, the ratio denominators.
fn concat_denominators(
    spec: &LearnerSpec,
    geometry: Geometry,
    cfg: &AcquisitionConfig,
) -> Result<Vec<RunOutcome>> {
    let outcomes: Vec<RunOutcome> = cfg
        .seeds
        .par_iter()
        .map(|&s| run_one(spec, GrammarKind::Concat, geometry, cfg, s, cfg.max_steps_absolute, true))
        .collect::<Result<_>>()?;
    for (o, &seed) in outcomes.iter().zip(&cfg.seeds) {
        if !o.acquisition.reached {
            return Err(BenchError::ConcatDidNotConverge {
                seed,
                steps: o.acquisition.steps,
            });
        }
    }
    Ok(outcomes)
}

/// `b = N(G) / N(concat)` per seed with paired seeds; runs are capped at
/// `cap_ratio * N(concat)` steps and then report `b = cap_ratio`.
pub fn acquisition_ratios(
    spec: &LearnerSpec,
    kinds: &[GrammarKind],
    geometry: Geometry,
    cfg: &AcquisitionConfig,
) -> Result<Vec<AcquisitionResult>> {
    cfg.validate()?;
    let denominators = concat_denominators(spec, geometry, cfg)?;
    let params = denominators.first().and_then(|o| o.params);
    let mut results = Vec::new();
    let concat_runs: Vec<SeedRun> = denominators
        .iter()
        .zip(&cfg.seeds)
        .map(|(o, &seed)| SeedRun {
            seed,
            steps: o.acquisition.steps,
            ratio: 1.0,
            capped: false,
            wall_seconds: o.wall_seconds,
            curve: o.acquisition.curve.clone(),
        })
        .collect();
    if kinds.contains(&GrammarKind::Concat) {
        results.push(summarize(GrammarKind::Concat, spec, params, geometry, concat_runs));
    }
    let jobs: Vec<(GrammarKind, usize)> = kinds
        .iter()
        .filter(|&&k| k != GrammarKind::Concat)
        .flat_map(|&k| (0..cfg.seeds.len()).map(move |i| (k, i)))
        .collect();
    let runs: Vec<(GrammarKind, SeedRun)> = jobs
        .par_iter()
        .map(|&(kind, i)| {
            let seed = cfg.seeds[i];
            let denom = denominators[i].acquisition.steps.max(1);
            let cap_steps = ((cfg.cap_ratio * denom as f64).floor() as u64).min(cfg.max_steps_absolute);
            let o = run_one(spec, kind, geometry, cfg, seed, cap_steps, true)?;
            let capped = !o.acquisition.reached;
            let ratio = if capped {
                cfg.cap_ratio
            } else {
                (o.acquisition.steps as f64 / denom as f64).min(cfg.cap_ratio)
            };
            Ok((
                kind,
                SeedRun {
                    seed,
                    steps: o.acquisition.steps,
                    ratio,
                    capped,
                    wall_seconds: o.wall_seconds,
                    curve: o.acquisition.curve,
                },
            ))
        })
        .collect::<Result<_>>()?;
    for &kind in kinds.iter().filter(|&&k| k != GrammarKind::Concat) {
        let kind_runs = runs.iter().filter(|(k, _)| *k == kind).map(|(_, r)| r.clone()).collect();
        results.push(summarize(kind, spec, params, geometry, kind_runs));
    }
    Ok(results)
}

fn summarize(
    kind: GrammarKind,
    spec: &LearnerSpec,
    params: Option<usize>,
    geometry: Geometry,
    runs: Vec<SeedRun>,
) -> AcquisitionResult {
    let ratios: Vec<f64> = runs.iter().map(|r| r.ratio).collect();
    let (mean, ci95) = mean_ci95(&ratios);
    AcquisitionResult {
        kind,
        arch: spec.label(),
        params,
        geometry,
        runs,
        mean,
        ci95,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedStepResult {
    pub kind: GrammarKind,
    pub arch: String,
    pub params: Option<usize>,
    pub seeds: Vec<u64>,
    /// Concat steps per seed; every kind trains this long.
    pub steps: Vec<u64>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub ci95: f64,
}

/// Trains concat to `acc_tgt`, then every kind for the same number of steps,
/// and reports the final evaluated accuracy.
pub fn fixed_step_accuracy(
    spec: &LearnerSpec,
    kinds: &[GrammarKind],
    geometry: Geometry,
    cfg: &AcquisitionConfig,
) -> Result<Vec<FixedStepResult>> {
    cfg.validate()?;
    let denominators = concat_denominators(spec, geometry, cfg)?;
    let params = denominators.first().and_then(|o| o.params);
    let steps: Vec<u64> = denominators.iter().map(|o| o.acquisition.steps).collect();
    let jobs: Vec<(GrammarKind, usize)> = kinds
        .iter()
        .flat_map(|&k| (0..cfg.seeds.len()).map(move |i| (k, i)))
        .collect();
    let accs: Vec<f64> = jobs
        .par_iter()
        .map(|&(kind, i)| {
            let o = run_one(spec, kind, geometry, cfg, cfg.seeds[i], steps[i], false)?;
            Ok(o.acquisition.final_accuracy)
        })
        .collect::<Result<_>>()?;
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let a: Vec<f64> = accs[k * cfg.seeds.len()..(k + 1) * cfg.seeds.len()].to_vec();
            let (mean, ci95) = mean_ci95(&a);
            FixedStepResult {
                kind,
                arch: spec.label(),
                params,
                seeds: cfg.seeds.clone(),
                steps: steps.clone(),
                accuracies: a,
                mean,
                ci95,
            }
        })
        .collect())
}
