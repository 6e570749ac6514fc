//! Recurrent cells as graph fragments. Weights are stored input-major
//! (`x · W`), gates fused along columns in PyTorch order.

use icy_autograd::{Graph, Mat, Var};

use crate::config::CellKind;

/// Parameter indices for one cell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellParams {
    pub kind: CellKind,
    pub hidden: usize,
    pub w_ih: usize,
    pub b_ih: usize,
    pub w_hh: usize,
    pub b_hh: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct State {
    pub h: Var,
    /// Cell memory; LSTM only.
    pub c: Option<Var>,
}

impl State {
    pub fn zeros(g: &mut Graph, kind: CellKind, batch: usize, hidden: usize) -> State {
        let h = g.constant(Mat::zeros(batch, hidden));
        State::from_hidden(g, kind, h)
    }

    /// Hidden state `h` with zero cell memory.
    pub fn from_hidden(g: &mut Graph, kind: CellKind, h: Var) -> State {
        let c = (kind == CellKind::Lstm).then(|| {
            let (r, cols) = g.value(h).shape();
            g.constant(Mat::zeros(r, cols))
        });
        State { h, c }
    }

    /// `(1 - s) * a + s * b` per row, `s` a `batch x 1` gate.
    pub fn mix(g: &mut Graph, a: State, b: State, s: Var) -> State {
        let keep = g.one_minus(s);
        let blend = |g: &mut Graph, x: Var, y: Var| {
            let x = g.mul_col(x, keep);
            let y = g.mul_col(y, s);
            g.add(x, y)
        };
        let h = blend(g, a.h, b.h);
        let c = match (a.c, b.c) {
            (Some(x), Some(y)) => Some(blend(g, x, y)),
            _ => None,
        };
        State { h, c }
    }
}

impl CellParams {
    /// One step. `x = None` is an all-zero input, which leaves only the input bias.
    pub fn step(&self, g: &mut Graph, vars: &[Var], x: Option<Var>, state: State) -> State {
        let d = self.hidden;
        let batch = g.value(state.h).rows;
        let pre_x = match x {
            Some(x) => g.matmul(x, vars[self.w_ih]),
            None => g.constant(Mat::zeros(batch, self.kind.gates() * d)),
        };
        let pre_x = g.add_row(pre_x, vars[self.b_ih]);
        let pre_h = g.matmul(state.h, vars[self.w_hh]);
        let pre_h = g.add_row(pre_h, vars[self.b_hh]);
        match self.kind {
            CellKind::Rnn => {
                let s = g.add(pre_x, pre_h);
                State { h: g.tanh(s), c: None }
            }
            CellKind::Lstm => {
                let s = g.add(pre_x, pre_h);
                let gate = |g: &mut Graph, k: usize| g.slice_cols(s, k * d, (k + 1) * d);
                let (i, f, c_hat, o) = (gate(g, 0), gate(g, 1), gate(g, 2), gate(g, 3));
                let i = g.sigmoid(i);
                let f = g.sigmoid(f);
                let c_hat = g.tanh(c_hat);
                let o = g.sigmoid(o);
                let c_prev = state.c.expect("LSTM state carries a cell");
                let kept = g.mul(f, c_prev);
                let written = g.mul(i, c_hat);
                let c = g.add(kept, written);
                let tc = g.tanh(c);
                State { h: g.mul(o, tc), c: Some(c) }
            }
            CellKind::Gru => {
                let gx = |g: &mut Graph, k: usize| g.slice_cols(pre_x, k * d, (k + 1) * d);
                let gh = |g: &mut Graph, k: usize| g.slice_cols(pre_h, k * d, (k + 1) * d);
                let (xr, xz, xn) = (gx(g, 0), gx(g, 1), gx(g, 2));
                let (hr, hz, hn) = (gh(g, 0), gh(g, 1), gh(g, 2));
                let r = g.add(xr, hr);
                let r = g.sigmoid(r);
                let z = g.add(xz, hz);
                let z = g.sigmoid(z);
                let rn = g.mul(r, hn);
                let n = g.add(xn, rn);
                let n = g.tanh(n);
                // h' = (1 - z) n + z h = n + z (h - n)
                let diff = g.sub(state.h, n);
                let zd = g.mul(z, diff);
                State { h: g.add(n, zd), c: None }
            }
        }
    }
}
