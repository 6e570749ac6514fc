use icy_core::Geometry;
use icy_neural::{Arch, CellKind, Model, ModelConfig};

/// Closed-form parameter count, written out per architecture.
fn expected(cfg: &ModelConfig) -> usize {
    let g = cfg.geometry;
    let d = cfg.emb_size;
    let v1 = g.vocab_size + 1;
    let n_in = g.n_att * g.n_val;
    let n_out = n_in;
    let cell = |kind: CellKind, input: usize| kind.gates() * (input * d + d * d + 2 * d);
    let out_layer = d * v1 + v1;
    let in_proj = v1 * d + d;
    let stop = d + 1;
    match cfg.arch {
        Arch::Fc1l => n_in * g.c_len * v1 + g.c_len * v1,
        Arch::Fc2l => n_in * d + d + d * g.c_len * v1 + g.c_len * v1,
        Arch::RnnZ | Arch::GruZ | Arch::LstmZ => {
            n_in * d + cfg.layers * cell(cfg.arch.fixed_cell().unwrap(), d) + out_layer
        }
        Arch::RnnA | Arch::GruA | Arch::LstmA | Arch::Lstm2A => {
            n_in * d + in_proj + cfg.layers * cell(cfg.arch.fixed_cell().unwrap(), d) + out_layer
        }
        Arch::HusendZ => n_in * d + 2 * cell(cfg.inner_rnn, 1) + stop + out_layer,
        Arch::HusendA => {
            n_in * d + cell(cfg.inner_rnn, 1) + in_proj + cell(cfg.inner_rnn, d) + stop + out_layer
        }
        Arch::RecvFc2l => g.vocab_size * d + g.c_len * d * n_out + n_out,
        Arch::RecvRnn | Arch::RecvGru | Arch::RecvLstm => {
            g.vocab_size * d + cfg.layers * cell(cfg.arch.fixed_cell().unwrap(), d) + d * n_out + n_out
        }
        Arch::RecvHu => g.vocab_size * d + 2 * cell(cfg.inner_rnn, d) + stop + d * n_out + n_out,
    }
}

fn count(arch: Arch, emb: usize) -> usize {
    Model::new(ModelConfig::new(arch, Geometry::paper(), 0).with_emb_size(emb))
        .unwrap()
        .param_count()
}

#[test]
fn counts_match_closed_form_for_every_arch() {
    for geo in [Geometry::paper(), Geometry::small(), Geometry::reduced()] {
        for arch in Arch::ALL {
            for cell in [CellKind::Rnn, CellKind::Gru, CellKind::Lstm] {
                for emb in [8, 128] {
                    let cfg = ModelConfig::new(arch, geo, 1).with_emb_size(emb).with_inner_rnn(cell);
                    let m = Model::new(cfg.clone()).unwrap();
                    assert_eq!(m.param_count(), expected(&cfg), "{arch} {cell} d={emb}");
                }
            }
        }
    }
}

#[test]
fn counts_match_reference_models() {
    assert_eq!(count(Arch::Fc1l, 128), 5100);
    assert_eq!(count(Arch::Fc2l, 128), 19428);
    assert_eq!(count(Arch::Fc2l, 1280), 193380);
    assert_eq!(count(Arch::LstmA, 128), 139909);
    assert_eq!(count(Arch::LstmZ, 128), 139141);
    assert_eq!(count(Arch::LstmA, 1280), 13195525);
    assert_eq!(count(Arch::Lstm2A, 128), 272005);
    assert_eq!(count(Arch::RnnA, 128), 40837);
    assert_eq!(count(Arch::RnnZ, 128), 40069);
    assert_eq!(count(Arch::GruA, 128), 106885);
    assert_eq!(count(Arch::GruZ, 128), 106117);
    assert_eq!(count(Arch::HusendZ, 128), 40710);
}

#[test]
fn autoregressive_and_zero_differ_by_the_input_projection() {
    let v1 = Geometry::paper().vocab_size + 1;
    assert_eq!(count(Arch::LstmA, 128) - count(Arch::LstmZ, 128), v1 * 128 + 128);
}
