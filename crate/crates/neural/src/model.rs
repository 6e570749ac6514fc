//! Sender and receiver architectures.
//!
//! Sender output layers carry one reserved column per position beyond the
//! vocabulary (an end-of-message slot in the reference setup). It is never a
//! target and is masked out before the softmax, so losses and accuracies are
//! over the `V` real symbols while parameter counts match the reference
//! models.

use std::collections::HashMap;

use icy_autograd::{Graph, Mat, Var};
use icy_core::rng::{stream, Stream};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cell::{CellParams, State};
use crate::config::{Arch, CellKind, ModelConfig, Role};
use crate::{NeuralError, Result};

/// Per-call forward options.
#[derive(Default)]
pub struct ForwardOptions<'a> {
    /// Dropout masks are drawn from this stream; `None` runs in eval mode.
    pub dropout_rng: Option<&'a mut ChaCha8Rng>,
    /// Feed zeros instead of the previous step's output distribution.
    pub zero_feedback: bool,
}

/// Internal HU states per step, for inspection.
#[derive(Debug, Clone)]
pub struct HuTrace {
    pub lower: Vec<Mat>,
    pub upper: Vec<Mat>,
    pub stop: Vec<Mat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    names: Vec<String>,
    index: HashMap<String, usize>,
    pub params: Vec<Mat>,
}

struct Init {
    names: Vec<String>,
    params: Vec<Mat>,
    rng: ChaCha8Rng,
}

impl Init {
    fn push(&mut self, name: String, m: Mat) -> usize {
        self.names.push(name);
        self.params.push(m);
        self.params.len() - 1
    }

    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` with `fan_in = rows`.
    fn weight(&mut self, name: &str, rows: usize, cols: usize) -> usize {
        let m = Mat::uniform(rows, cols, 1.0 / (rows as f64).sqrt(), &mut self.rng);
        self.push(name.to_string(), m)
    }

    fn bias(&mut self, name: &str, cols: usize) -> usize {
        self.push(name.to_string(), Mat::zeros(1, cols))
    }

    /// Lookup tables have fan-in 1.
    fn embedding(&mut self, name: &str, rows: usize, cols: usize) -> usize {
        let m = Mat::uniform(rows, cols, 1.0, &mut self.rng);
        self.push(name.to_string(), m)
    }

    fn cell(&mut self, prefix: &str, kind: CellKind, input: usize, hidden: usize) -> CellParams {
        let width = kind.gates() * hidden;
        CellParams {
            kind,
            hidden,
            w_ih: self.weight(&format!("{prefix}.w_ih"), input, width),
            b_ih: self.bias(&format!("{prefix}.b_ih"), width),
            w_hh: self.weight(&format!("{prefix}.w_hh"), hidden, width),
            b_hh: self.bias(&format!("{prefix}.b_hh"), width),
        }
    }
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Model> {
        config.validate()?;
        let geo = config.geometry;
        let d = config.emb_size;
        let v_out = geo.vocab_size + 1;
        let n_in = geo.n_att * geo.n_val;
        let n_out = geo.n_att * geo.n_val;
        let mut init = Init {
            names: Vec::new(),
            params: Vec::new(),
            rng: stream(config.seed, Stream::ModelInit),
        };
        match config.arch {
            Arch::Fc1l => {
                init.embedding("emb", n_in, geo.c_len * v_out);
                init.bias("emb.b", geo.c_len * v_out);
            }
            Arch::Fc2l => {
                init.embedding("emb", n_in, d);
                init.bias("emb.b", d);
                init.weight("out.w", d, geo.c_len * v_out);
                init.bias("out.b", geo.c_len * v_out);
            }
            Arch::RnnA | Arch::RnnZ | Arch::GruA | Arch::GruZ | Arch::LstmA | Arch::LstmZ | Arch::Lstm2A => {
                let kind = config.arch.fixed_cell().expect("recurrent arch");
                init.embedding("emb", n_in, d);
                if config.arch.autoregressive() {
                    init.weight("in.w", v_out, d);
                    init.bias("in.b", d);
                }
                for l in 0..config.layers {
                    init.cell(&format!("cell{l}"), kind, d, d);
                }
                init.weight("out.w", d, v_out);
                init.bias("out.b", v_out);
            }
            Arch::HusendA | Arch::HusendZ => {
                let kind = config.inner_rnn;
                init.embedding("emb", n_in, d);
                // zero inputs are one-wide
                init.cell("word", kind, 1, d);
                if config.arch == Arch::HusendA {
                    init.weight("in.w", v_out, d);
                    init.bias("in.b", d);
                    init.cell("token", kind, d, d);
                } else {
                    init.cell("token", kind, 1, d);
                }
                init.weight("stop.w", d, 1);
                init.bias("stop.b", 1);
                init.weight("out.w", d, v_out);
                init.bias("out.b", v_out);
            }
            Arch::RecvFc2l => {
                init.embedding("emb", geo.vocab_size, d);
                init.weight("out.w", geo.c_len * d, n_out);
                init.bias("out.b", n_out);
            }
            Arch::RecvRnn | Arch::RecvGru | Arch::RecvLstm => {
                let kind = config.arch.fixed_cell().expect("recurrent arch");
                init.embedding("emb", geo.vocab_size, d);
                for l in 0..config.layers {
                    init.cell(&format!("cell{l}"), kind, d, d);
                }
                init.weight("out.w", d, n_out);
                init.bias("out.b", n_out);
            }
            Arch::RecvHu => {
                let kind = config.inner_rnn;
                init.embedding("emb", geo.vocab_size, d);
                init.cell("lower", kind, d, d);
                init.cell("upper", kind, d, d);
                init.weight("stop.w", d, 1);
                init.bias("stop.b", 1);
                init.weight("out.w", d, n_out);
                init.bias("out.b", n_out);
            }
        }
        Ok(Model::from_parts(config, init.names, init.params))
    }

    pub(crate) fn from_parts(config: ModelConfig, names: Vec<String>, params: Vec<Mat>) -> Model {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Model {
            config,
            names,
            index,
            params,
        }
    }

    pub fn role(&self) -> Role {
        self.config.arch.role()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Mat::len).sum()
    }

    pub fn param(&self, name: &str) -> Option<&Mat> {
        self.index.get(name).map(|&i| &self.params[i])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Mat> {
        self.index.get(name).map(|&i| &mut self.params[i])
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.params.iter().map(Mat::shape).collect()
    }

    /// Groups per row of the output: `c_len` for senders, `n_att` for receivers.
    pub fn groups(&self) -> usize {
        match self.role() {
            Role::Sender => self.config.geometry.c_len,
            Role::Receiver => self.config.geometry.n_att,
        }
    }

    /// Classes per group: `V` for senders, `n_val` for receivers.
    pub fn classes(&self) -> usize {
        match self.role() {
            Role::Sender => self.config.geometry.vocab_size,
            Role::Receiver => self.config.geometry.n_val,
        }
    }

    /// Registers every parameter on `g`, in order.
    pub fn register(&self, g: &mut Graph) -> Vec<Var> {
        self.params.iter().enumerate().map(|(i, p)| g.param(i, p)).collect()
    }

    fn idx(&self, name: &str) -> usize {
        self.index[name]
    }

    fn cell(&self, prefix: &str, kind: CellKind) -> CellParams {
        CellParams {
            kind,
            hidden: self.config.emb_size,
            w_ih: self.idx(&format!("{prefix}.w_ih")),
            b_ih: self.idx(&format!("{prefix}.b_ih")),
            w_hh: self.idx(&format!("{prefix}.w_hh")),
            b_hh: self.idx(&format!("{prefix}.b_hh")),
        }
    }

    /// Checks inputs against the role: objects for senders, messages for receivers.
    pub fn check_inputs(&self, inputs: &[Vec<usize>]) -> Result<()> {
        let geo = &self.config.geometry;
        let (len, bound, what) = match self.role() {
            Role::Sender => (geo.n_att, geo.n_val, "object"),
            Role::Receiver => (geo.c_len, geo.vocab_size, "message"),
        };
        for (r, row) in inputs.iter().enumerate() {
            if row.len() != len {
                return Err(NeuralError::Input(format!(
                    "{what} {r} has length {}, expected {len}",
                    row.len()
                )));
            }
            if let Some(&x) = row.iter().find(|&&x| x >= bound) {
                return Err(NeuralError::Input(format!("{what} {r}: value {x} out of range 0..{bound}")));
            }
        }
        Ok(())
    }

    /// Checks targets: messages for senders, objects for receivers.
    pub fn check_targets(&self, targets: &[Vec<usize>]) -> Result<()> {
        let (groups, classes) = (self.groups(), self.classes());
        for (r, row) in targets.iter().enumerate() {
            if row.len() != groups || row.iter().any(|&x| x >= classes) {
                return Err(NeuralError::Input(format!(
                    "target {r} must have {groups} entries below {classes}"
                )));
            }
        }
        Ok(())
    }

    fn object_rows(&self, objects: &[Vec<usize>]) -> Vec<Vec<usize>> {
        let n_val = self.config.geometry.n_val;
        objects
            .iter()
            .map(|o| o.iter().enumerate().map(|(i, &v)| i * n_val + v).collect())
            .collect()
    }

    /// Sum of the per-attribute embedding rows (before any bias).
    pub fn embed_object(&self, objects: &[Vec<usize>]) -> Result<Mat> {
        if self.role() != Role::Sender {
            return Err(NeuralError::Config(format!("{} is not a sender", self.config.arch)));
        }
        self.check_inputs(objects)?;
        let mut g = Graph::new();
        let table = g.constant(self.params[self.idx("emb")].clone());
        let e = g.embed_sum(table, self.object_rows(objects));
        Ok(g.value(e).clone())
    }

    /// Logit groups (`batch x classes` each) built on `g` from registered `vars`.
    pub fn forward(
        &self,
        g: &mut Graph,
        vars: &[Var],
        inputs: &[Vec<usize>],
        opts: ForwardOptions<'_>,
    ) -> Result<Vec<Var>> {
        self.check_inputs(inputs)?;
        let mut fwd = Forward {
            model: self,
            g,
            vars,
            opts,
            trace: None,
        };
        Ok(fwd.run(inputs))
    }

    /// Mean cross-entropy over groups and rows.
    pub fn loss(
        &self,
        g: &mut Graph,
        vars: &[Var],
        inputs: &[Vec<usize>],
        targets: &[Vec<usize>],
        opts: ForwardOptions<'_>,
    ) -> Result<Var> {
        self.check_targets(targets)?;
        if inputs.len() != targets.len() {
            return Err(NeuralError::Input(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let groups = self.forward(g, vars, inputs, opts)?;
        Ok(group_cross_entropy(g, &groups, targets))
    }

    /// Eval-mode logits as values.
    pub fn predict(&self, inputs: &[Vec<usize>]) -> Result<Vec<Mat>> {
        let mut g = Graph::new();
        let vars = self.register(&mut g);
        let groups = self.forward(&mut g, &vars, inputs, ForwardOptions::default())?;
        Ok(groups.into_iter().map(|v| g.value(v).clone()).collect())
    }

    /// Per-step lower/upper hidden states and stopness of an HU model.
    pub fn hu_trace(&self, inputs: &[Vec<usize>]) -> Result<HuTrace> {
        if !matches!(self.config.arch, Arch::HusendA | Arch::HusendZ | Arch::RecvHu) {
            return Err(NeuralError::Config(format!("{} is not an HU model", self.config.arch)));
        }
        self.check_inputs(inputs)?;
        let mut g = Graph::new();
        let vars = self.register(&mut g);
        let mut fwd = Forward {
            model: self,
            g: &mut g,
            vars: &vars,
            opts: ForwardOptions::default(),
            trace: Some(Vec::new()),
        };
        fwd.run(inputs);
        let steps = fwd.trace.take().unwrap_or_default();
        let val = |v: Var| g.value(v).clone();
        Ok(HuTrace {
            lower: steps.iter().map(|s| val(s.0)).collect(),
            upper: steps.iter().map(|s| val(s.1)).collect(),
            stop: steps.iter().map(|s| val(s.2)).collect(),
        })
    }
}

/// Mean over groups of the per-group mean cross-entropy.
pub fn group_cross_entropy(g: &mut Graph, groups: &[Var], targets: &[Vec<usize>]) -> Var {
    let mut total: Option<Var> = None;
    for (k, &logits) in groups.iter().enumerate() {
        let ce = g.cross_entropy(logits, targets.iter().map(|t| t[k]).collect());
        total = Some(match total {
            Some(t) => g.add(t, ce),
            None => ce,
        });
    }
    let total = total.expect("at least one group");
    g.scale(total, 1.0 / groups.len() as f64)
}

struct Forward<'a, 'g> {
    model: &'a Model,
    g: &'g mut Graph,
    vars: &'a [Var],
    opts: ForwardOptions<'a>,
    trace: Option<Vec<(Var, Var, Var)>>,
}

impl Forward<'_, '_> {
    fn p(&self, name: &str) -> Var {
        self.vars[self.model.idx(name)]
    }

    fn linear(&mut self, x: Var, prefix: &str) -> Var {
        let w = self.p(&format!("{prefix}.w"));
        let b = self.p(&format!("{prefix}.b"));
        let y = self.g.matmul(x, w);
        self.g.add_row(y, b)
    }

    fn dropout(&mut self, x: Var) -> Var {
        let p = self.model.config.dropout;
        let Some(rng) = self.opts.dropout_rng.as_deref_mut() else {
            return x;
        };
        if p == 0.0 {
            return x;
        }
        let (r, c) = self.g.value(x).shape();
        let keep = 1.0 / (1.0 - p);
        let data = (0..r * c)
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let mask = self.g.constant(Mat::from_vec(r, c, data));
        self.g.mul(x, mask)
    }

    fn zeros(&mut self, r: usize, c: usize) -> Var {
        self.g.constant(Mat::zeros(r, c))
    }

    /// Real-symbol logits of a sender output row block, dropping the reserved slot.
    fn symbol_logits(&mut self, full: Var, offset: usize) -> Var {
        let v = self.model.config.geometry.vocab_size;
        self.g.slice_cols(full, offset, offset + v)
    }

    /// Previous-step distribution padded with a zero reserved slot.
    fn feedback(&mut self, logits: Var, batch: usize) -> Var {
        let v = self.model.config.geometry.vocab_size;
        if self.opts.zero_feedback {
            return self.zeros(batch, v + 1);
        }
        let probs = self.g.softmax_rows(logits);
        let pad = self.zeros(batch, 1);
        self.g.concat_cols(&[probs, pad])
    }

    fn run(&mut self, inputs: &[Vec<usize>]) -> Vec<Var> {
        match self.model.config.arch {
            Arch::Fc1l | Arch::Fc2l => self.mlp_sender(inputs),
            Arch::RnnA | Arch::RnnZ | Arch::GruA | Arch::GruZ | Arch::LstmA | Arch::LstmZ | Arch::Lstm2A => {
                self.rnn_sender(inputs)
            }
            Arch::HusendA | Arch::HusendZ => self.hu_sender(inputs),
            Arch::RecvFc2l => self.mlp_receiver(inputs),
            Arch::RecvRnn | Arch::RecvGru | Arch::RecvLstm => self.rnn_receiver(inputs),
            Arch::RecvHu => self.hu_receiver(inputs),
        }
    }

    fn embed(&mut self, inputs: &[Vec<usize>]) -> Var {
        let table = self.p("emb");
        self.g.embed_sum(table, self.model.object_rows(inputs))
    }

    fn mlp_sender(&mut self, inputs: &[Vec<usize>]) -> Vec<Var> {
        let geo = self.model.config.geometry;
        let e = self.embed(inputs);
        let b = self.p("emb.b");
        let e = self.g.add_row(e, b);
        let full = if self.model.config.arch == Arch::Fc2l {
            let e = self.dropout(e);
            let h = self.g.tanh(e);
            self.linear(h, "out")
        } else {
            e
        };
        (0..geo.c_len)
            .map(|p| self.symbol_logits(full, p * (geo.vocab_size + 1)))
            .collect()
    }

    fn rnn_sender(&mut self, inputs: &[Vec<usize>]) -> Vec<Var> {
        let cfg = &self.model.config;
        let (geo, batch) = (cfg.geometry, inputs.len());
        let kind = cfg.arch.fixed_cell().expect("recurrent arch");
        let autoreg = cfg.arch.autoregressive();
        let cells: Vec<CellParams> = (0..cfg.layers)
            .map(|l| self.model.cell(&format!("cell{l}"), kind))
            .collect();
        let e = self.embed(inputs);
        let e = self.dropout(e);
        // every layer starts from the object embedding
        let mut states: Vec<State> = cells
            .iter()
            .map(|_| State::from_hidden(self.g, kind, e))
            .collect();
        let mut prev = self.zeros(batch, geo.vocab_size + 1);
        let mut out = Vec::with_capacity(geo.c_len);
        for _ in 0..geo.c_len {
            let mut x = autoreg.then(|| self.linear(prev, "in"));
            for (cell, state) in cells.iter().zip(states.iter_mut()) {
                *state = cell.step(self.g, self.vars, x, *state);
                x = Some(state.h);
            }
            let top = states.last().expect("at least one layer").h;
            let full = self.linear(top, "out");
            let logits = self.symbol_logits(full, 0);
            if autoreg {
                prev = self.feedback(logits, batch);
            }
            out.push(logits);
        }
        out
    }

    fn hu_sender(&mut self, inputs: &[Vec<usize>]) -> Vec<Var> {
        let cfg = &self.model.config;
        let (geo, batch, d) = (cfg.geometry, inputs.len(), cfg.emb_size);
        let kind = cfg.inner_rnn;
        let autoreg = cfg.arch.autoregressive();
        let word = self.model.cell("word", kind);
        let token = self.model.cell("token", kind);
        let e = self.embed(inputs);
        let e = self.dropout(e);
        let mut lower = State::from_hidden(self.g, kind, e);
        let mut upper = State::zeros(self.g, kind, batch, d);
        // s_0 = 1: the first step always loads a word
        let mut stop: Option<Var> = None;
        let mut prev = self.zeros(batch, geo.vocab_size + 1);
        let mut out = Vec::with_capacity(geo.c_len);
        for _ in 0..geo.c_len {
            let stepped = word.step(self.g, self.vars, None, lower);
            let base = match stop {
                None => {
                    lower = stepped;
                    lower
                }
                Some(s) => {
                    lower = State::mix(self.g, lower, stepped, s);
                    State::mix(self.g, upper, lower, s)
                }
            };
            let x = autoreg.then(|| self.linear(prev, "in"));
            upper = token.step(self.g, self.vars, x, base);
            let s_logit = self.linear(upper.h, "stop");
            let s = self.g.sigmoid(s_logit);
            stop = Some(s);
            let full = self.linear(upper.h, "out");
            let logits = self.symbol_logits(full, 0);
            if autoreg {
                prev = self.feedback(logits, batch);
            }
            if let Some(t) = self.trace.as_mut() {
                t.push((lower.h, upper.h, s));
            }
            out.push(logits);
        }
        out
    }

    fn token_embeddings(&mut self, inputs: &[Vec<usize>]) -> Vec<Var> {
        let c_len = self.model.config.geometry.c_len;
        let table = self.p("emb");
        (0..c_len)
            .map(|t| self.g.embed_sum(table, inputs.iter().map(|m| vec![m[t]]).collect()))
            .collect()
    }

    fn split_attributes(&mut self, logits: Var) -> Vec<Var> {
        let geo = self.model.config.geometry;
        (0..geo.n_att)
            .map(|i| self.g.slice_cols(logits, i * geo.n_val, (i + 1) * geo.n_val))
            .collect()
    }

    fn mlp_receiver(&mut self, inputs: &[Vec<usize>]) -> Vec<Var> {
        let emb = self.token_embeddings(inputs);
        let e = self.g.concat_cols(&emb);
        let e = self.dropout(e);
        let h = self.g.tanh(e);
        let logits = self.linear(h, "out");
        self.split_attributes(logits)
    }

    fn rnn_receiver(&mut self, inputs: &[Vec<usize>]) -> Vec<Var> {
        let cfg = &self.model.config;
        let (batch, d) = (inputs.len(), cfg.emb_size);
        let kind = cfg.arch.fixed_cell().expect("recurrent arch");
        let cells: Vec<CellParams> = (0..cfg.layers)
            .map(|l| self.model.cell(&format!("cell{l}"), kind))
            .collect();
        let mut states: Vec<State> = cells
            .iter()
            .map(|_| State::zeros(self.g, kind, batch, d))
            .collect();
        for x in self.token_embeddings(inputs) {
            let mut x = x;
            for (cell, state) in cells.iter().zip(states.iter_mut()) {
                *state = cell.step(self.g, self.vars, Some(x), *state);
                x = state.h;
            }
        }
        let top = states.last().expect("at least one layer").h;
        let top = self.dropout(top);
        let logits = self.linear(top, "out");
        self.split_attributes(logits)
    }

    fn hu_receiver(&mut self, inputs: &[Vec<usize>]) -> Vec<Var> {
        let cfg = &self.model.config;
        let (batch, d, kind) = (inputs.len(), cfg.emb_size, cfg.inner_rnn);
        let lower_cell = self.model.cell("lower", kind);
        let upper_cell = self.model.cell("upper", kind);
        let mut lower = State::zeros(self.g, kind, batch, d);
        let mut upper = State::zeros(self.g, kind, batch, d);
        for x in self.token_embeddings(inputs) {
            lower = lower_cell.step(self.g, self.vars, Some(x), lower);
            let s_logit = self.linear(lower.h, "stop");
            let s = self.g.sigmoid(s_logit);
            let stepped = upper_cell.step(self.g, self.vars, Some(lower.h), upper);
            upper = State::mix(self.g, upper, stepped, s);
            if let Some(t) = self.trace.as_mut() {
                t.push((lower.h, upper.h, s));
            }
        }
        let top = self.dropout(upper.h);
        let logits = self.linear(top, "out");
        self.split_attributes(logits)
    }
}
