use icy_autograd::{check_gradients, GradCheckOptions};
use icy_core::Geometry;
use icy_neural::{Arch, CellKind, ForwardOptions, Model, ModelConfig, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;

fn batch(model: &Model, rows: usize, seed: u64) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
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

fn max_error(cfg: ModelConfig) -> f64 {
    let model = Model::new(cfg).unwrap();
    let (inputs, targets) = batch(&model, 3, 7);
    let report = check_gradients(
        &model.params,
        |g, vars| {
            model
                .loss(g, vars, &inputs, &targets, ForwardOptions::default())
                .unwrap()
        },
        &GradCheckOptions {
            max_entries_per_param: 12,
            ..GradCheckOptions::default()
        },
    );
    report.max_rel_error
}

fn tiny() -> Geometry {
    Geometry::new(2, 3, 4, 3).unwrap()
}

#[test]
fn every_architecture_passes_finite_differences() {
    for arch in Arch::ALL {
        let err = max_error(ModelConfig::new(arch, tiny(), 3).with_emb_size(8));
        assert!(err < TOL, "{arch}: {err}");
    }
}

#[test]
fn hu_models_pass_with_every_inner_cell() {
    for arch in [Arch::HusendA, Arch::HusendZ, Arch::RecvHu] {
        for cell in [CellKind::Gru, CellKind::Lstm] {
            let err = max_error(ModelConfig::new(arch, tiny(), 4).with_emb_size(8).with_inner_rnn(cell));
            assert!(err < TOL, "{arch}:{cell}: {err}");
        }
    }
}

#[test]
fn stacked_receivers_pass() {
    for arch in [Arch::RecvGru, Arch::RecvLstm] {
        let mut cfg = ModelConfig::new(arch, tiny(), 5).with_emb_size(8);
        cfg.layers = 2;
        let err = max_error(cfg);
        assert!(err < TOL, "{arch} 2 layers: {err}");
    }
}

#[test]
fn corrupted_backward_is_detected_through_a_model() {
    let model = Model::new(ModelConfig::new(Arch::RnnA, tiny(), 3).with_emb_size(8)).unwrap();
    let (inputs, targets) = batch(&model, 3, 7);
    let report = check_gradients(
        &model.params,
        |g, vars| {
            model
                .loss(g, vars, &inputs, &targets, ForwardOptions::default())
                .unwrap()
        },
        &GradCheckOptions {
            max_entries_per_param: 12,
            fault: Some(icy_autograd::Fault::TanhBackward),
            ..GradCheckOptions::default()
        },
    );
    assert!(!report.passes(TOL), "{report:?}");
}
