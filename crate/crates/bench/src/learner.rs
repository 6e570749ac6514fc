use std::collections::HashMap;
use std::fmt;

use icy_core::Geometry;
use icy_neural::{Arch, CellKind, Model, ModelConfig, Role, TrainConfig, Trainer};
use serde::{Deserialize, Serialize};

use crate::Result;

/// Where convergence accuracy comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccuracySource {
    /// A fresh seeded evaluation sample.
    EvalSample,
    /// The training batch, scored before the learner sees it.
    TrainingBatch,
}

pub trait Learner: Send {
    /// One update on a batch; returns the batch token accuracy.
    fn train_step(&mut self, inputs: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<f64>;

    /// Token accuracy without updating.
    fn evaluate(&self, inputs: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<f64>;

    fn accuracy_source(&self) -> AccuracySource {
        AccuracySource::EvalSample
    }

    fn param_count(&self) -> Option<usize>;
}

/// Exact-recall table. Unseen inputs predict all zeros.
#[derive(Debug, Clone, Default)]
pub struct Hashtable {
    store: HashMap<Vec<usize>, Vec<usize>>,
}

impl Hashtable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn predict(&self, input: &[usize], width: usize) -> Vec<usize> {
        self.store.get(input).cloned().unwrap_or_else(|| vec![0; width])
    }

    fn accuracy(&self, inputs: &[Vec<usize>], targets: &[Vec<usize>]) -> f64 {
        let (mut hit, mut total) = (0usize, 0usize);
        for (x, t) in inputs.iter().zip(targets) {
            let p = self.predict(x, t.len());
            hit += p.iter().zip(t).filter(|(a, b)| a == b).count();
            total += t.len();
        }
        hit as f64 / total.max(1) as f64
    }
}

impl Learner for Hashtable {
    fn train_step(&mut self, inputs: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<f64> {
        let acc = self.accuracy(inputs, targets);
        for (x, t) in inputs.iter().zip(targets) {
            self.store.insert(x.clone(), t.clone());
        }
        Ok(acc)
    }

    fn evaluate(&self, inputs: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<f64> {
        Ok(self.accuracy(inputs, targets))
    }

    fn accuracy_source(&self) -> AccuracySource {
        AccuracySource::TrainingBatch
    }

    fn param_count(&self) -> Option<usize> {
        None
    }
}

pub struct NeuralLearner {
    pub trainer: Trainer,
}

impl Learner for NeuralLearner {
    fn train_step(&mut self, inputs: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<f64> {
        Ok(self.trainer.train_step(inputs, targets)?.accuracy)
    }

    fn evaluate(&self, inputs: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<f64> {
        Ok(self.trainer.evaluate(inputs, targets)?.1)
    }

    fn param_count(&self) -> Option<usize> {
        Some(self.trainer.model.param_count())
    }
}

/// Recipe for a fresh learner per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LearnerSpec {
    Hashtable {
        direction: Direction,
    },
    Neural {
        arch: Arch,
        emb_size: usize,
        layers: usize,
        inner_rnn: CellKind,
        dropout: f64,
        train: TrainConfig,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// object -> message
    Sender,
    /// message -> object
    Receiver,
}

impl From<Role> for Direction {
    fn from(r: Role) -> Self {
        match r {
            Role::Sender => Direction::Sender,
            Role::Receiver => Direction::Receiver,
        }
    }
}

impl LearnerSpec {
    pub fn hashtable() -> Self {
        LearnerSpec::Hashtable {
            direction: Direction::Sender,
        }
    }

    /// Neural spec with the default hyperparameters for `arch`.
    pub fn neural(arch: Arch) -> Self {
        let base = ModelConfig::new(arch, Geometry::small(), 0);
        LearnerSpec::Neural {
            arch,
            emb_size: base.emb_size,
            layers: base.layers,
            inner_rnn: base.inner_rnn,
            dropout: base.dropout,
            train: TrainConfig::default(),
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            LearnerSpec::Hashtable { direction } => *direction,
            LearnerSpec::Neural { arch, .. } => arch.role().into(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LearnerSpec::Hashtable { .. } => "hashtable".to_string(),
            LearnerSpec::Neural { arch, inner_rnn, .. } => match arch {
                Arch::HusendA | Arch::HusendZ | Arch::RecvHu => format!("{arch}:{inner_rnn}"),
                _ => arch.to_string(),
            },
        }
    }

    pub fn model_config(&self, geometry: Geometry, seed: u64) -> Option<ModelConfig> {
        match self {
            LearnerSpec::Hashtable { .. } => None,
            LearnerSpec::Neural {
                arch,
                emb_size,
                layers,
                inner_rnn,
                dropout,
                ..
            } => Some(ModelConfig {
                arch: *arch,
                geometry,
                emb_size: *emb_size,
                layers: *layers,
                inner_rnn: *inner_rnn,
                dropout: *dropout,
                seed,
            }),
        }
    }

    pub fn build(&self, geometry: Geometry, seed: u64) -> Result<Box<dyn Learner>> {
        match (self, self.model_config(geometry, seed)) {
            (LearnerSpec::Neural { train, .. }, Some(cfg)) => Ok(Box::new(NeuralLearner {
                trainer: Trainer::new(Model::new(cfg)?, *train),
            })),
            _ => Ok(Box::new(Hashtable::new())),
        }
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
