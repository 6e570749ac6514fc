//! Sender and receiver models for supervised grammar acquisition.
//!
//! Senders map objects to `c_len` groups of `V` symbol logits; receivers map
//! messages to `n_att` groups of `n_val` attribute logits. All models build
//! their forward pass on an [`icy_autograd::Graph`].

mod cell;
pub mod checkpoint;
pub mod config;
pub mod gradcheck;
pub mod model;
pub mod train;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, NamedTensor};
pub use config::{Arch, CellKind, ModelConfig, Role};
pub use gradcheck::{gradcheck_model, GRADCHECK_TOLERANCE};
pub use model::{group_cross_entropy, ForwardOptions, HuTrace, Model};
pub use train::{loss_and_accuracy, StepStats, TrainConfig, Trainer};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("non-finite loss {loss} at step {step}")]
    Training { step: u64, loss: f64 },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NeuralError>;
