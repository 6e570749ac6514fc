use icy_autograd::{clip_global_norm, Adam, Graph, Mat};
use icy_core::rng::{stream, Stream};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{ForwardOptions, Model};
use crate::{NeuralError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            clip_norm: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub accuracy: f64,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
}

/// Mean cross-entropy and token accuracy of logit groups against targets
/// (`targets[row][group]`). Ties in the argmax go to the lowest class.
/// Group totals are added in sorted order, so reordering the groups leaves
/// the loss bitwise unchanged.
pub fn loss_and_accuracy(groups: &[Mat], targets: &[Vec<usize>]) -> Result<(f64, f64)> {
    let Some(first) = groups.first() else {
        return Err(NeuralError::Input("no logit groups".into()));
    };
    let rows = first.rows;
    if targets.len() != rows || targets.iter().any(|t| t.len() != groups.len()) {
        return Err(NeuralError::Input(format!(
            "targets must be {rows} rows of {} entries",
            groups.len()
        )));
    }
    let mut totals = Vec::with_capacity(groups.len());
    let mut correct = 0usize;
    for (k, m) in groups.iter().enumerate() {
        let mut loss = 0.0;
        if m.rows != rows {
            return Err(NeuralError::Input(format!("group {k} has {} rows, expected {rows}", m.rows)));
        }
        for (r, t) in targets.iter().enumerate() {
            let row = m.row(r);
            let target = t[k];
            if target >= row.len() {
                return Err(NeuralError::Input(format!("target {target} out of range in group {k}")));
            }
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + row.iter().map(|x| (x - mx).exp()).sum::<f64>().ln();
            loss += lse - row[target];
            if m.argmax_row(r, row.len()) == target {
                correct += 1;
            }
        }
        totals.push(loss);
    }
    totals.sort_by(f64::total_cmp);
    let n = (rows * groups.len()) as f64;
    Ok((totals.iter().sum::<f64>() / n, correct as f64 / n))
}

/// A model with its optimizer state.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: Model,
    pub config: TrainConfig,
    opt: Adam,
    dropout_rng: ChaCha8Rng,
    steps: u64,
}

impl Trainer {
    pub fn new(model: Model, config: TrainConfig) -> Self {
        let dropout_rng = stream(model.config.seed, Stream::Dropout);
        Trainer {
            model,
            config,
            opt: Adam::new(config.learning_rate),
            dropout_rng,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One forward/backward pass, global-norm clip and Adam update.
    pub fn train_step(&mut self, inputs: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<StepStats> {
        let mut g = Graph::new();
        let vars = self.model.register(&mut g);
        let opts = ForwardOptions {
            dropout_rng: Some(&mut self.dropout_rng),
            zero_feedback: false,
        };
        let groups = self.model.forward(&mut g, &vars, inputs, opts)?;
        self.model.check_targets(targets)?;
        let values: Vec<Mat> = groups.iter().map(|&v| g.value(v).clone()).collect();
        let (_, accuracy) = loss_and_accuracy(&values, targets)?;
        let loss_var = crate::model::group_cross_entropy(&mut g, &groups, targets);
        let loss = g.value(loss_var).item();
        if !loss.is_finite() {
            return Err(NeuralError::Training { step: self.steps, loss });
        }
        let mut grads = g.backward(loss_var).params(&self.model.shapes());
        let grad_norm = clip_global_norm(&mut grads, self.config.clip_norm);
        self.opt.step(&mut self.model.params, &grads);
        self.steps += 1;
        Ok(StepStats {
            loss,
            accuracy,
            grad_norm,
        })
    }

    /// Eval-mode loss and token accuracy.
    pub fn evaluate(&self, inputs: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<(f64, f64)> {
        let groups = self.model.predict(inputs)?;
        loss_and_accuracy(&groups, targets)
    }
}
