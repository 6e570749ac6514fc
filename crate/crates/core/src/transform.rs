//! Per-message encoders for each grammar kind.
//!
//! These are the building blocks [`crate::grammar::generate_grammar`] applies
//! tablewide; each is a pure function of its stored parameters.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{Geometry, Message, ObjectVec};
use crate::lexicon::Lexicon;
use crate::rng::{indexed, Stream};

/// Minimum `|det P|` accepted for a projection kernel.
pub const MIN_ABS_DET: f64 = 1e-6;

/// Layout tag for `vec(m_onehot)`: index `position * |V| + symbol`.
pub const VEC_LAYOUT: &str = "position-major";

/// `message = w[0][o0] ++ w[1][o1] ++ ...`
pub fn encode_concat(lexicon: &Lexicon, object: &ObjectVec) -> Message {
    Message(lexicon.words_of(object).flatten().copied().collect())
}

/// `out[k] = base[perm[k]]`.
pub fn encode_perm(perm: &[usize], base: &Message) -> Message {
    assert_eq!(perm.len(), base.0.len(), "permutation length must equal c_len");
    Message(perm.iter().map(|&p| base.0[p]).collect())
}

/// Square real matrix of side `c_len * |V|` acting on vectorized one-hot messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionKernel {
    pub side: usize,
    /// Row-major entries.
    pub entries: Vec<f64>,
}

impl ProjectionKernel {
    pub fn identity(side: usize) -> Self {
        Self::diagonal(&vec![1.0; side])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let side = diag.len();
        let mut entries = vec![0.0; side * side];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * side + i] = d;
        }
        ProjectionKernel { side, entries }
    }

    /// I.i.d. standard normal entries from the projection stream, attempt `attempt`.
    pub fn sample_gaussian(side: usize, seed: u64, attempt: u64) -> Self {
        let mut rng = indexed(seed, Stream::Projection, attempt, 0);
        let entries = (0..side * side)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        ProjectionKernel { side, entries }
    }

    pub fn abs_determinant(&self) -> f64 {
        DMatrix::from_row_slice(self.side, self.side, &self.entries)
            .determinant()
            .abs()
    }

    pub fn is_nonsingular(&self) -> bool {
        let d = self.abs_determinant();
        d.is_finite() && d >= MIN_ABS_DET
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.side + col]
    }
}

/// `argmax_V vec^-1(P vec(onehot(m)))`, ties to the lowest symbol.
pub fn encode_proj(kernel: &ProjectionKernel, base: &Message, vocab_size: usize) -> Message {
    let c_len = base.0.len();
    assert_eq!(kernel.side, c_len * vocab_size, "kernel side must be c_len*|V|");
    // P * onehot only picks the columns of the active symbols.
    let active: Vec<usize> = base
        .0
        .iter()
        .enumerate()
        .map(|(j, &s)| j * vocab_size + s)
        .collect();
    let out = (0..c_len)
        .map(|k| {
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for v in 0..vocab_size {
                let row = k * vocab_size + v;
                let val: f64 = active.iter().map(|&col| kernel.at(row, col)).sum();
                if val > best_val {
                    best_val = val;
                    best = v;
                }
            }
            best
        })
        .collect();
    Message(out)
}

/// Cumulative modular sum, `r[0] = m[0]`, `r[j] = (r[j-1] + m[j]) mod |V|`.
pub fn encode_rot(base: &Message, vocab_size: usize) -> Message {
    let mut acc = 0;
    Message(
        base.0
            .iter()
            .map(|&s| {
                acc = (acc + s) % vocab_size;
                acc
            })
            .collect(),
    )
}

/// Exact inverse of [`encode_rot`].
pub fn decode_rot(rot: &Message, vocab_size: usize) -> Message {
    let mut prev = 0;
    Message(
        rot.0
            .iter()
            .map(|&r| {
                let s = (r + vocab_size - prev) % vocab_size;
                prev = r;
                s
            })
            .collect(),
    )
}

/// Concatenate the object's words in the order `order` (block `k` holds the
/// word of attribute `order[k]`).
pub fn encode_ordered(lexicon: &Lexicon, order: &[usize], object: &ObjectVec) -> Message {
    Message(
        order
            .iter()
            .flat_map(|&i| lexicon.word(i, object.0[i]).iter().copied())
            .collect(),
    )
}

/// Word order chosen by the value of attribute `key_attr`.
pub fn encode_shufdet(
    lexicon: &Lexicon,
    order_table: &[Vec<usize>],
    key_attr: usize,
    object: &ObjectVec,
) -> Message {
    encode_ordered(lexicon, &order_table[object.0[key_attr]], object)
}

/// Word order stored per object.
pub fn encode_shuf(lexicon: &Lexicon, per_object_order: &[usize], object: &ObjectVec) -> Message {
    encode_ordered(lexicon, per_object_order, object)
}

/// Stride (in 32-bit words) reserved per holistic draw attempt.
const HOL_STRIDE: u128 = 1 << 12;

/// Candidate holistic message for `object_index`, rejection attempt `attempt`.
/// Random access: independent of every other index.
pub fn encode_hol(geometry: &Geometry, seed: u64, object_index: usize, attempt: u64) -> Message {
    let mut rng = indexed(
        seed,
        Stream::Holistic,
        object_index as u64,
        attempt as u128 * HOL_STRIDE,
    );
    Message(
        (0..geometry.c_len)
            .map(|_| rng.random_range(0..geometry.vocab_size))
            .collect(),
    )
}
