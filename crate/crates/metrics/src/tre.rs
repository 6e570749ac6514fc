//! TRE7: how well "concatenate per-attribute sub-messages, then apply one
//! learned permutation" reconstructs the table.

use icy_autograd::{Adam, Graph, Mat, Var};
use icy_core::rng::{stream, Stream};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{MetricError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub sinkhorn_iters: usize,
    pub temperature: f64,
    /// Objects per optimizer step; the full table when it is smaller.
    pub batch_size: usize,
    /// Extra runs from fresh initializations; the lowest final loss is kept.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for TreConfig {
    fn default() -> Self {
        TreConfig {
            steps: 2000,
            learning_rate: 0.05,
            sinkhorn_iters: 10,
            temperature: 1.0,
            batch_size: 256,
            restarts: 1,
            seed: 0,
        }
    }
}

const INIT_SCALE: f64 = 0.1;
const EVAL_CHUNK: usize = 4096;

struct Model<'a> {
    corpus: &'a Corpus,
    n_val: usize,
    c_w: usize,
    cfg: &'a TreConfig,
}

impl Model<'_> {
    /// Mean per-position cross-entropy (nats) over `rows`.
    fn loss(&self, g: &mut Graph, params: &[Var], rows: &[usize]) -> Var {
        let v = self.corpus.vocab_size;
        let c_len = self.corpus.c_len;
        let b = rows.len();

        let words = g.softmax_rows(params[0]);
        let mut idx = Vec::with_capacity(c_len * b * v);
        for p in 0..c_len {
            let attr = p / self.c_w;
            for &n in rows {
                let value = self.corpus.object(n)[attr];
                let row = (attr * self.n_val + value) * self.c_w + p % self.c_w;
                idx.extend((0..v).map(|s| row * v + s));
            }
        }
        let concat = g.gather(words, idx, c_len, b * v);

        let scaled = g.scale(params[1], 1.0 / self.cfg.temperature);
        let mut perm = g.exp(scaled);
        for _ in 0..self.cfg.sinkhorn_iters {
            perm = g.normalize_cols(perm);
            perm = g.normalize_rows(perm);
        }
        let out = g.matmul(perm, concat);

        let mut target = Vec::with_capacity(c_len * b);
        for p in 0..c_len {
            for (k, &n) in rows.iter().enumerate() {
                target.push(p * b * v + k * v + self.corpus.message(n)[p]);
            }
        }
        let picked = g.gather(out, target, 1, c_len * b);
        let logp = g.ln(picked);
        let m = g.mean(logp);
        g.neg(m)
    }

    fn eval(&self, params: &[Mat], rows: &[usize]) -> f64 {
        let mut g = Graph::new();
        let vars: Vec<Var> = params.iter().enumerate().map(|(i, p)| g.param(i, p)).collect();
        let l = self.loss(&mut g, &vars, rows);
        g.value(l).item()
    }

    fn fit(&self, rng: &mut impl Rng) -> f64 {
        let corpus = self.corpus;
        let cfg = self.cfg;
        let n = corpus.len();
        let word_rows = corpus.n_att * self.n_val * self.c_w;
        let mut params = vec![
            Mat::uniform(word_rows, corpus.vocab_size, INIT_SCALE, rng),
            Mat::uniform(corpus.c_len, corpus.c_len, INIT_SCALE, rng),
        ];
        let shapes: Vec<_> = params.iter().map(Mat::shape).collect();
        let mut opt = Adam::new(cfg.learning_rate);
        let all: Vec<usize> = (0..n).collect();
        for _ in 0..cfg.steps {
            let batch: Vec<usize> = if n <= cfg.batch_size {
                all.clone()
            } else {
                (0..cfg.batch_size).map(|_| rng.random_range(0..n)).collect()
            };
            let mut g = Graph::new();
            let vars: Vec<Var> = params.iter().enumerate().map(|(i, p)| g.param(i, p)).collect();
            let l = self.loss(&mut g, &vars, &batch);
            let grads = g.backward(l).params(&shapes);
            opt.step(&mut params, &grads);
        }
        let mut total = 0.0;
        for chunk in all.chunks(EVAL_CHUNK) {
            total += self.eval(&params, chunk) * chunk.len() as f64;
        }
        total / n as f64
    }
}

/// Returns the final mean per-position cross-entropy over the full table.
pub fn tre7(corpus: &Corpus, cfg: &TreConfig) -> Result<f64> {
    if !corpus.c_len.is_multiple_of(corpus.n_att) {
        return Err(MetricError::Domain(format!(
            "c_len {} is not a multiple of n_att {}",
            corpus.c_len, corpus.n_att
        )));
    }
    let n = corpus.len();
    let n_val = (0..n).flat_map(|r| corpus.object(r).to_vec()).max().unwrap_or(0) + 1;
    let model = Model {
        corpus,
        n_val,
        c_w: corpus.c_len / corpus.n_att,
        cfg,
    };
    let mut rng = stream(cfg.seed, Stream::Tre);
    let mut best = f64::INFINITY;
    for _ in 0..=cfg.restarts {
        best = best.min(model.fit(&mut rng));
    }
    Ok(best)
}
