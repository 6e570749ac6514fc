use crate::mat::{gemm, Mat};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Deliberate backward-rule corruption for negative-control tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// `tanh` backward uses `1 - y` instead of `1 - y^2`.
    TanhBackward,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    OneMinus(Var),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    Ln(Var),
    SoftmaxRows(Var),
    NormalizeRows(Var),
    NormalizeCols(Var),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    EmbedSum(Var, Vec<Vec<usize>>),
    Gather(Var, Vec<usize>),
    Sum(Var),
    Mean(Var),
    CrossEntropy(Var, Vec<usize>, Mat),
}

struct Node {
    value: Mat,
    op: Op,
}

/// A single forward pass recorded for reverse-mode differentiation.
pub struct Graph {
    nodes: Vec<Node>,
    fault: Option<Fault>,
}

/// Gradients of one backward pass, indexed by node.
pub struct Gradients {
    grads: Vec<Option<Mat>>,
    params: Vec<(usize, Var)>,
}

impl Gradients {
    pub fn of(&self, v: Var) -> Option<&Mat> {
        self.grads[v.0].as_ref()
    }

    /// Gradients for parameters `0..n`, zero-filled for unused ones.
    pub fn params(&self, shapes: &[(usize, usize)]) -> Vec<Mat> {
        let mut out: Vec<Mat> = shapes.iter().map(|&(r, c)| Mat::zeros(r, c)).collect();
        for &(idx, var) in &self.params {
            if let Some(g) = &self.grads[var.0] {
                out[idx].add_assign(g);
            }
        }
        out
    }
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            fault: None,
        }
    }

    pub fn with_fault(fault: Fault) -> Self {
        Graph {
            nodes: Vec::new(),
            fault: Some(fault),
        }
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A constant input (no gradient flows anywhere from it).
    pub fn constant(&mut self, value: Mat) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Trainable parameter number `index`.
    pub fn param(&mut self, index: usize, value: &Mat) -> Var {
        self.push(value.clone(), Op::Param(index))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let mut out = Mat::zeros(av.rows, bv.cols);
        gemm(1.0, av, false, bv, false, 0.0, &mut out);
        self.push(out, Op::MatMul(a, b))
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Mat {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape(), "elementwise shape mismatch");
        Mat::from_vec(
            av.rows,
            av.cols,
            av.data.iter().zip(&bv.data).map(|(&x, &y)| f(x, y)).collect(),
        )
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip(a, b, |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip(a, b, |x, y| x - y);
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip(a, b, |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    /// `a[r, c] + bias[0, c]`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(bias));
        assert_eq!((bv.rows, bv.cols), (1, av.cols), "bias must be 1x{}", av.cols);
        let mut out = av.clone();
        for r in 0..out.rows {
            for (x, b) in out.row_mut(r).iter_mut().zip(&bv.data) {
                *x += b;
            }
        }
        self.push(out, Op::AddRow(a, bias))
    }

    /// `a[r, c] * gate[r, 0]`.
    pub fn mul_col(&mut self, a: Var, gate: Var) -> Var {
        let (av, gv) = (self.value(a), self.value(gate));
        assert_eq!((gv.rows, gv.cols), (av.rows, 1), "gate must be {}x1", av.rows);
        let mut out = av.clone();
        for r in 0..out.rows {
            let g = gv.data[r];
            out.row_mut(r).iter_mut().for_each(|x| *x *= g);
        }
        self.push(out, Op::MulCol(a, gate))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    /// `1 - a`.
    pub fn one_minus(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| 1.0 - x);
        self.push(v, Op::OneMinus(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::exp);
        self.push(v, Op::Exp(a))
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::ln);
        self.push(v, Op::Ln(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for r in 0..v.rows {
            softmax_in_place(v.row_mut(r));
        }
        self.push(v, Op::SoftmaxRows(a))
    }

    /// Divide each row by its sum.
    pub fn normalize_rows(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for r in 0..v.rows {
            let s: f64 = v.row(r).iter().sum();
            v.row_mut(r).iter_mut().for_each(|x| *x /= s);
        }
        self.push(v, Op::NormalizeRows(a))
    }

    /// Divide each column by its sum.
    pub fn normalize_cols(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        let sums = col_sums(&v);
        for r in 0..v.rows {
            for (x, s) in v.row_mut(r).iter_mut().zip(&sums) {
                *x /= s;
            }
        }
        self.push(v, Op::NormalizeCols(a))
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let av = self.value(a);
        assert!(start <= end && end <= av.cols, "slice {start}..{end} of {} cols", av.cols);
        let mut out = Mat::zeros(av.rows, end - start);
        for r in 0..av.rows {
            out.row_mut(r).copy_from_slice(&av.row(r)[start..end]);
        }
        self.push(out, Op::SliceCols(a, start))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut out = Mat::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let pv = self.value(p);
            assert_eq!(pv.rows, rows, "concat_cols row mismatch");
            for r in 0..rows {
                out.row_mut(r)[off..off + pv.cols].copy_from_slice(pv.row(r));
            }
            off += pv.cols;
        }
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    /// Row `r` of the output is the sum of `table` rows `indices[r]`.
    pub fn embed_sum(&mut self, table: Var, indices: Vec<Vec<usize>>) -> Var {
        let tv = self.value(table);
        let mut out = Mat::zeros(indices.len(), tv.cols);
        for (r, idx) in indices.iter().enumerate() {
            let row = out.row_mut(r);
            for &i in idx {
                for (o, t) in row.iter_mut().zip(tv.row(i)) {
                    *o += t;
                }
            }
        }
        self.push(out, Op::EmbedSum(table, indices))
    }

    /// `out.data[i] = a.data[index[i]]`, shaped `rows x cols`.
    pub fn gather(&mut self, a: Var, index: Vec<usize>, rows: usize, cols: usize) -> Var {
        assert_eq!(index.len(), rows * cols, "gather index length");
        let av = self.value(a);
        let data = index.iter().map(|&i| av.data[i]).collect();
        self.push(Mat::from_vec(rows, cols, data), Op::Gather(a, index))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.value(a).sum();
        self.push(Mat::scalar(v), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let v = av.sum() / av.len() as f64;
        self.push(Mat::scalar(v), Op::Mean(a))
    }

    /// Mean over rows of `-ln softmax(logits[r])[targets[r]]`.
    pub fn cross_entropy(&mut self, logits: Var, targets: Vec<usize>) -> Var {
        let lv = self.value(logits);
        assert_eq!(targets.len(), lv.rows, "one target per row");
        let mut probs = lv.clone();
        let mut loss = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            let row = lv.row(r);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            loss += lse - row[t];
            softmax_in_place(probs.row_mut(r));
        }
        let v = loss / targets.len() as f64;
        self.push(Mat::scalar(v), Op::CrossEntropy(logits, targets, probs))
    }

    /// Reverse pass from a 1x1 output.
    pub fn backward(&self, out: Var) -> Gradients {
        assert_eq!(self.value(out).len(), 1, "backward from a non-scalar");
        let n = out.0 + 1;
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(Mat::scalar(1.0));
        let mut params = Vec::new();
        for i in (0..n).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            self.propagate(&node.op, &node.value, &g, &mut grads);
            if let Op::Param(idx) = node.op {
                params.push((idx, Var(i)));
            }
            grads[i] = Some(g);
        }
        Gradients { grads, params }
    }

    fn propagate(&self, op: &Op, y: &Mat, g: &Mat, grads: &mut [Option<Mat>]) {
        let acc = |grads: &mut [Option<Mat>], v: Var, d: Mat| match &mut grads[v.0] {
            Some(e) => e.add_assign(&d),
            slot @ None => *slot = Some(d),
        };
        match op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let mut da = Mat::zeros(av.rows, av.cols);
                gemm(1.0, g, false, bv, true, 0.0, &mut da);
                let mut db = Mat::zeros(bv.rows, bv.cols);
                gemm(1.0, av, true, g, false, 0.0, &mut db);
                acc(grads, *a, da);
                acc(grads, *b, db);
            }
            Op::Add(a, b) => {
                acc(grads, *a, g.clone());
                acc(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(grads, *a, g.clone());
                acc(grads, *b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                acc(grads, *a, elementwise(g, bv, |x, y| x * y));
                acc(grads, *b, elementwise(g, av, |x, y| x * y));
            }
            Op::AddRow(a, bias) => {
                acc(grads, *a, g.clone());
                acc(grads, *bias, Mat::from_vec(1, g.cols, col_sums(g)));
            }
            Op::MulCol(a, gate) => {
                let (av, gv) = (self.value(*a), self.value(*gate));
                let mut da = g.clone();
                let mut dg = Mat::zeros(gv.rows, 1);
                for r in 0..g.rows {
                    let s = gv.data[r];
                    da.row_mut(r).iter_mut().for_each(|x| *x *= s);
                    dg.data[r] = g.row(r).iter().zip(av.row(r)).map(|(x, y)| x * y).sum();
                }
                acc(grads, *a, da);
                acc(grads, *gate, dg);
            }
            Op::Scale(a, s) => acc(grads, *a, g.map(|x| x * s)),
            Op::OneMinus(a) => acc(grads, *a, g.map(|x| -x)),
            Op::Tanh(a) => {
                let d = match self.fault {
                    Some(Fault::TanhBackward) => elementwise(g, y, |gi, yi| gi * (1.0 - yi)),
                    None => elementwise(g, y, |gi, yi| gi * (1.0 - yi * yi)),
                };
                acc(grads, *a, d);
            }
            Op::Sigmoid(a) => acc(grads, *a, elementwise(g, y, |gi, yi| gi * yi * (1.0 - yi))),
            Op::Exp(a) => acc(grads, *a, elementwise(g, y, |gi, yi| gi * yi)),
            Op::Ln(a) => acc(grads, *a, elementwise(g, self.value(*a), |gi, xi| gi / xi)),
            Op::SoftmaxRows(a) => {
                let mut d = Mat::zeros(y.rows, y.cols);
                for r in 0..y.rows {
                    let dot: f64 = g.row(r).iter().zip(y.row(r)).map(|(x, p)| x * p).sum();
                    for ((o, gi), yi) in d.row_mut(r).iter_mut().zip(g.row(r)).zip(y.row(r)) {
                        *o = yi * (gi - dot);
                    }
                }
                acc(grads, *a, d);
            }
            Op::NormalizeRows(a) => {
                let x = self.value(*a);
                let mut d = Mat::zeros(y.rows, y.cols);
                for r in 0..y.rows {
                    let s: f64 = x.row(r).iter().sum();
                    let dot: f64 = g.row(r).iter().zip(y.row(r)).map(|(p, q)| p * q).sum();
                    for (o, gi) in d.row_mut(r).iter_mut().zip(g.row(r)) {
                        *o = (gi - dot) / s;
                    }
                }
                acc(grads, *a, d);
            }
            Op::NormalizeCols(a) => {
                let x = self.value(*a);
                let sums = col_sums(x);
                let mut dots = vec![0.0; y.cols];
                for r in 0..y.rows {
                    for ((d, gi), yi) in dots.iter_mut().zip(g.row(r)).zip(y.row(r)) {
                        *d += gi * yi;
                    }
                }
                let mut d = Mat::zeros(y.rows, y.cols);
                for r in 0..y.rows {
                    for (c, (o, gi)) in d.row_mut(r).iter_mut().zip(g.row(r)).enumerate() {
                        *o = (gi - dots[c]) / sums[c];
                    }
                }
                acc(grads, *a, d);
            }
            Op::SliceCols(a, start) => {
                let av = self.value(*a);
                let mut d = Mat::zeros(av.rows, av.cols);
                for r in 0..g.rows {
                    d.row_mut(r)[*start..*start + g.cols].copy_from_slice(g.row(r));
                }
                acc(grads, *a, d);
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let cols = self.value(p).cols;
                    let mut d = Mat::zeros(g.rows, cols);
                    for r in 0..g.rows {
                        d.row_mut(r).copy_from_slice(&g.row(r)[off..off + cols]);
                    }
                    off += cols;
                    acc(grads, p, d);
                }
            }
            Op::EmbedSum(table, indices) => {
                let tv = self.value(*table);
                let mut d = Mat::zeros(tv.rows, tv.cols);
                for (r, idx) in indices.iter().enumerate() {
                    for &i in idx {
                        for (o, gi) in d.row_mut(i).iter_mut().zip(g.row(r)) {
                            *o += gi;
                        }
                    }
                }
                acc(grads, *table, d);
            }
            Op::Gather(a, index) => {
                let av = self.value(*a);
                let mut d = Mat::zeros(av.rows, av.cols);
                for (&i, gi) in index.iter().zip(&g.data) {
                    d.data[i] += gi;
                }
                acc(grads, *a, d);
            }
            Op::Sum(a) => {
                let av = self.value(*a);
                acc(grads, *a, Mat::filled(av.rows, av.cols, g.item()));
            }
            Op::Mean(a) => {
                let av = self.value(*a);
                acc(grads, *a, Mat::filled(av.rows, av.cols, g.item() / av.len() as f64));
            }
            Op::CrossEntropy(logits, targets, probs) => {
                let scale = g.item() / targets.len() as f64;
                let mut d = probs.clone();
                for (r, &t) in targets.iter().enumerate() {
                    *d.at_mut(r, t) -= 1.0;
                }
                d.data.iter_mut().for_each(|x| *x *= scale);
                acc(grads, *logits, d);
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_in_place(row: &mut [f64]) {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in row.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    row.iter_mut().for_each(|x| *x /= s);
}

fn col_sums(m: &Mat) -> Vec<f64> {
    let mut sums = vec![0.0; m.cols];
    for r in 0..m.rows {
        for (s, x) in sums.iter_mut().zip(m.row(r)) {
            *s += x;
        }
    }
    sums
}

fn elementwise(a: &Mat, b: &Mat, f: impl Fn(f64, f64) -> f64) -> Mat {
    Mat::from_vec(
        a.rows,
        a.cols,
        a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    )
}
