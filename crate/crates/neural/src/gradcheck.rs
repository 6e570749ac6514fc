//! Finite-difference checks of whole models on random batches.

use icy_autograd::{check_gradients, Fault, GradCheckOptions, GradCheckReport};
use icy_core::Geometry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelConfig, Role};
use crate::model::{ForwardOptions, Model};
use crate::Result;

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Geometry small enough to perturb every parameter quickly.
pub fn tiny_geometry() -> Geometry {
    Geometry::new(2, 3, 4, 3).expect("valid")
}

/// Random `(inputs, targets)` rows matching the model's role.
pub fn random_batch(model: &Model, rows: usize, seed: u64) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let geo = model.config.geometry;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize, bound: usize| -> Vec<usize> { (0..len).map(|_| rng.random_range(0..bound)).collect() };
    let objects: Vec<Vec<usize>> = (0..rows).map(|_| draw(geo.n_att, geo.n_val)).collect();
    let messages: Vec<Vec<usize>> = (0..rows).map(|_| draw(geo.c_len, geo.vocab_size)).collect();
    match model.role() {
        Role::Sender => (objects, messages),
        Role::Receiver => (messages, objects),
    }
}

/// Check the training loss of a fresh model on 3 random rows.
pub fn gradcheck_model(cfg: ModelConfig, entries_per_param: usize, fault: Option<Fault>) -> Result<GradCheckReport> {
    let model = Model::new(cfg)?;
    let (inputs, targets) = random_batch(&model, 3, 7);
    model.check_inputs(&inputs)?;
    model.check_targets(&targets)?;
    Ok(check_gradients(
        &model.params,
        |g, vars| {
            model
                .loss(g, vars, &inputs, &targets, ForwardOptions::default())
                .expect("validated batch")
        },
        &GradCheckOptions {
            max_entries_per_param: entries_per_param,
            fault,
            ..GradCheckOptions::default()
        },
    ))
}
