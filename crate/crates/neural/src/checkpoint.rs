use std::fs;
use std::path::Path;

use icy_autograd::Mat;
use icy_core::rng::RNG_ID;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::model::Model;
use crate::{NeuralError, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedTensor {
    pub name: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub rng_id: String,
    pub config: ModelConfig,
    /// Optimizer steps taken when saved.
    pub steps: u64,
    pub params: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn of(model: &Model, steps: u64) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            rng_id: RNG_ID.to_string(),
            config: model.config.clone(),
            steps,
            params: model
                .names()
                .iter()
                .zip(&model.params)
                .map(|(name, m)| NamedTensor {
                    name: name.clone(),
                    shape: [m.rows, m.cols],
                    values: m.data.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds the model, checking names and shapes against the architecture.
    pub fn into_model(self) -> Result<Model> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(NeuralError::Checkpoint(format!(
                "format_version {} (expected {CHECKPOINT_VERSION})",
                self.format_version
            )));
        }
        let fresh = Model::new(self.config.clone())?;
        if fresh.names().len() != self.params.len() {
            return Err(NeuralError::Checkpoint(format!(
                "{} tensors, architecture has {}",
                self.params.len(),
                fresh.names().len()
            )));
        }
        let mut params = Vec::with_capacity(self.params.len());
        for (t, (name, m)) in self.params.into_iter().zip(fresh.names().iter().zip(&fresh.params)) {
            if &t.name != name || t.shape != [m.rows, m.cols] || t.values.len() != m.len() {
                return Err(NeuralError::Checkpoint(format!(
                    "tensor `{}` {:?} does not match `{name}` {:?}",
                    t.name,
                    t.shape,
                    m.shape()
                )));
            }
            params.push(Mat::from_vec(m.rows, m.cols, t.values));
        }
        Ok(Model::from_parts(self.config, fresh.names().to_vec(), params))
    }
}

pub fn save_checkpoint(model: &Model, steps: u64, path: &Path) -> Result<()> {
    let json = serde_json::to_string(&Checkpoint::of(model, steps))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, u64)> {
    let ck: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
    let steps = ck.steps;
    Ok((ck.into_model()?, steps))
}
