//! Recorded-operation reverse-mode differentiation over [`Tensor`]s.
//!
//! A [`Tape`] is append-only: every operation pushes a node whose inputs
//! already exist, so node ids are a topological order and [`Tape::backward`]
//! simply walks them in reverse.

use std::cell::{Ref, RefCell};
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::tensor::{matmul_nt_into, matmul_tn_into, Tensor};

/// Index list shared between tape nodes without copying.
pub type Indices = Rc<[usize]>;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddRow(usize, usize),
    MulCol(usize, usize),
    Scale(usize, f64),
    ConcatRows(Vec<usize>),
    Gather(usize, Indices),
    ScatterAdd(usize, Indices),
    SumRows(usize),
    SumAll(usize),
    Reshape(usize),
    LeakyRelu(usize, f64),
    Sigmoid(usize),
    Exp(usize),
    Log(usize),
    Clamp(usize, f64, f64),
    Softmax(usize, Indices),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.shape())
    }
}

/// Gradient buffers indexed by tape node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient with respect to `var`, or `None` when `var` does not reach the root.
    pub fn wrt(&self, var: Var<'_>) -> Option<&Tensor> {
        self.grads.get(var.id).and_then(|g| g.as_ref())
    }

    /// Gradient with respect to `var`, zero-filled when unreachable.
    pub fn wrt_or_zero(&self, var: Var<'_>) -> Tensor {
        match self.wrt(var) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = var.shape();
                Tensor::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records a trainable leaf.
    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// Records a leaf that never receives gradient.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, false)
    }

    fn push(&self, value: Tensor, op: Op, needs_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn needs(&self, ids: &[usize]) -> bool {
        let nodes = self.nodes.borrow();
        ids.iter().any(|&i| nodes[i].needs_grad)
    }

    /// Reverse pass from a `1 × 1` root.
    pub fn backward(&self, root: Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let shape = nodes[root.id].value.shape();
        if shape != (1, 1) {
            return Err(Error::NonScalarRoot(shape));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; nodes.len()];
        grads[root.id] = Some(Tensor::scalar(1.0));

        for id in (0..=root.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if node.needs_grad {
                propagate(&nodes, id, &g, &mut grads);
            }
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: usize, delta: Tensor) {
    match &mut grads[id] {
        Some(g) => {
            for (a, b) in g.data_mut().iter_mut().zip(delta.data()) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(delta),
    }
}

fn propagate(nodes: &[Node], id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
    let node = &nodes[id];
    let val = |i: usize| &nodes[i].value;
    let wants = |i: usize| nodes[i].needs_grad;
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (a, b) = (*a, *b);
            if wants(a) {
                let (r, c) = val(a).shape();
                let mut ga = Tensor::zeros(r, c);
                matmul_nt_into(g, val(b), &mut ga);
                accumulate(grads, a, ga);
            }
            if wants(b) {
                let (r, c) = val(b).shape();
                let mut gb = Tensor::zeros(r, c);
                matmul_tn_into(val(a), g, &mut gb);
                accumulate(grads, b, gb);
            }
        }
        Op::Add(a, b) => {
            if wants(*a) {
                accumulate(grads, *a, g.clone());
            }
            if wants(*b) {
                accumulate(grads, *b, g.clone());
            }
        }
        Op::Sub(a, b) => {
            if wants(*a) {
                accumulate(grads, *a, g.clone());
            }
            if wants(*b) {
                accumulate(grads, *b, g.map(|v| -v));
            }
        }
        Op::Mul(a, b) => {
            let (a, b) = (*a, *b);
            if wants(a) {
                accumulate(grads, a, hadamard(g, val(b)));
            }
            if wants(b) {
                accumulate(grads, b, hadamard(g, val(a)));
            }
        }
        Op::AddRow(a, row) => {
            if wants(*a) {
                accumulate(grads, *a, g.clone());
            }
            if wants(*row) {
                let mut gr = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (o, v) in gr.data_mut().iter_mut().zip(g.row_slice(r)) {
                        *o += v;
                    }
                }
                accumulate(grads, *row, gr);
            }
        }
        Op::MulCol(a, col) => {
            let (a, col) = (*a, *col);
            let av = val(a);
            let cv = val(col);
            if wants(a) {
                let mut ga = g.clone();
                for r in 0..ga.rows() {
                    let s = cv.data()[r];
                    ga.row_slice_mut(r).iter_mut().for_each(|v| *v *= s);
                }
                accumulate(grads, a, ga);
            }
            if wants(col) {
                let mut gc = Tensor::zeros(cv.rows(), 1);
                for r in 0..av.rows() {
                    gc.data_mut()[r] = av
                        .row_slice(r)
                        .iter()
                        .zip(g.row_slice(r))
                        .map(|(x, y)| x * y)
                        .sum();
                }
                accumulate(grads, col, gc);
            }
        }
        Op::Scale(a, s) => {
            if wants(*a) {
                let s = *s;
                accumulate(grads, *a, g.map(|v| v * s));
            }
        }
        Op::ConcatRows(parts) => {
            let mut offset = 0;
            for &p in parts {
                let (r, c) = val(p).shape();
                if wants(p) {
                    let slice = g.data()[offset * c..(offset + r) * c].to_vec();
                    accumulate(grads, p, Tensor::from_vec(r, c, slice).expect("shape"));
                }
                offset += r;
            }
        }
        Op::Gather(a, idx) => {
            if wants(*a) {
                let (r, c) = val(*a).shape();
                let mut ga = Tensor::zeros(r, c);
                for (k, &src) in idx.iter().enumerate() {
                    for (o, v) in ga.row_slice_mut(src).iter_mut().zip(g.row_slice(k)) {
                        *o += v;
                    }
                }
                accumulate(grads, *a, ga);
            }
        }
        Op::ScatterAdd(a, idx) => {
            if wants(*a) {
                let (r, c) = val(*a).shape();
                let mut ga = Tensor::zeros(r, c);
                for (k, &dst) in idx.iter().enumerate() {
                    ga.row_slice_mut(k).copy_from_slice(g.row_slice(dst));
                }
                accumulate(grads, *a, ga);
            }
        }
        Op::SumRows(a) => {
            if wants(*a) {
                let (r, c) = val(*a).shape();
                let mut ga = Tensor::zeros(r, c);
                for i in 0..r {
                    let gi = g.data()[i];
                    ga.row_slice_mut(i).iter_mut().for_each(|v| *v = gi);
                }
                accumulate(grads, *a, ga);
            }
        }
        Op::SumAll(a) => {
            if wants(*a) {
                let (r, c) = val(*a).shape();
                accumulate(grads, *a, Tensor::filled(r, c, g.item()));
            }
        }
        Op::Reshape(a) => {
            if wants(*a) {
                let (r, c) = val(*a).shape();
                accumulate(grads, *a, g.clone().reshape(r, c).expect("shape"));
            }
        }
        Op::LeakyRelu(a, slope) => {
            if wants(*a) {
                let slope = *slope;
                let x = val(*a);
                let ga = zip_map(g, x, |gv, xv| if xv >= 0.0 { gv } else { gv * slope });
                accumulate(grads, *a, ga);
            }
        }
        Op::Sigmoid(a) => {
            if wants(*a) {
                let y = &node.value;
                accumulate(grads, *a, zip_map(g, y, |gv, yv| gv * yv * (1.0 - yv)));
            }
        }
        Op::Exp(a) => {
            if wants(*a) {
                accumulate(grads, *a, zip_map(g, &node.value, |gv, yv| gv * yv));
            }
        }
        Op::Log(a) => {
            if wants(*a) {
                accumulate(grads, *a, zip_map(g, val(*a), |gv, xv| gv / xv));
            }
        }
        Op::Clamp(a, lo, hi) => {
            if wants(*a) {
                let (lo, hi) = (*lo, *hi);
                let ga = zip_map(g, val(*a), |gv, xv| if xv < lo || xv > hi { 0.0 } else { gv });
                accumulate(grads, *a, ga);
            }
        }
        Op::Softmax(a, offsets) => {
            if wants(*a) {
                let y = node.value.data();
                let gd = g.data();
                let mut ga = Tensor::zeros(y.len(), 1);
                for w in offsets.windows(2) {
                    let (s, e) = (w[0], w[1]);
                    let dot: f64 = (s..e).map(|i| y[i] * gd[i]).sum();
                    for i in s..e {
                        ga.data_mut()[i] = y[i] * (gd[i] - dot);
                    }
                }
                accumulate(grads, *a, ga);
            }
        }
    }
}

fn hadamard(a: &Tensor, b: &Tensor) -> Tensor {
    zip_map(a, b, |x, y| x * y)
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::from_vec(a.rows(), a.cols(), data).expect("shape")
}

pub fn leaky_relu_scalar(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Group-wise softmax over contiguous segments `offsets[g]..offsets[g + 1]`,
/// stabilised by subtracting each group's maximum.
pub fn segment_softmax(scores: &[f64], offsets: &[usize]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; scores.len()];
    for (g, w) in offsets.windows(2).enumerate() {
        let (s, e) = (w[0], w[1]);
        if s >= e {
            return Err(Error::EmptyGroup(g));
        }
        let max = scores[s..e].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for i in s..e {
            out[i] = (scores[i] - max).exp();
            total += out[i];
        }
        for v in &mut out[s..e] {
            *v /= total;
        }
    }
    Ok(out)
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.nodes.borrow()[self.id].value.shape()
    }

    /// Borrow of the recorded value.
    pub fn value(&self) -> Ref<'t, Tensor> {
        Ref::map(self.tape.nodes.borrow(), |n| &n[self.id].value)
    }

    fn unary(self, op: Op, value: Tensor) -> Var<'t> {
        let needs = self.tape.needs(&[self.id]);
        self.tape.push(value, op, needs)
    }

    fn binary(self, other: Var<'t>, op: Op, value: Tensor) -> Var<'t> {
        let needs = self.tape.needs(&[self.id, other.id]);
        self.tape.push(value, op, needs)
    }

    fn same_shape(&self, other: &Var<'t>, op: &'static str) -> Result<()> {
        let (l, r) = (self.shape(), other.shape());
        if l != r {
            return Err(Error::ShapeMismatch {
                op,
                left: l,
                right: r,
            });
        }
        Ok(())
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        let value = self.value().matmul(&other.value())?;
        Ok(self.binary(other, Op::MatMul(self.id, other.id), value))
    }

    // Fallible on shape mismatch, so not `std::ops::Add`.
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_shape(&other, "add")?;
        let value = zip_map(&self.value(), &other.value(), |a, b| a + b);
        Ok(self.binary(other, Op::Add(self.id, other.id), value))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_shape(&other, "sub")?;
        let value = zip_map(&self.value(), &other.value(), |a, b| a - b);
        Ok(self.binary(other, Op::Sub(self.id, other.id), value))
    }

    pub fn elementwise_mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_shape(&other, "elementwise_mul")?;
        let value = hadamard(&self.value(), &other.value());
        Ok(self.binary(other, Op::Mul(self.id, other.id), value))
    }

    /// Adds a `1 × c` row to every row.
    pub fn add_row(self, row: Var<'t>) -> Result<Var<'t>> {
        let (r, c) = self.shape();
        if row.shape() != (1, c) {
            return Err(Error::ShapeMismatch {
                op: "add_row",
                left: (r, c),
                right: row.shape(),
            });
        }
        let mut value = self.value().clone();
        {
            let rv = row.value();
            for i in 0..r {
                for (o, b) in value.row_slice_mut(i).iter_mut().zip(rv.data()) {
                    *o += b;
                }
            }
        }
        Ok(self.binary(row, Op::AddRow(self.id, row.id), value))
    }

    /// Scales row `i` by `col[i]`.
    pub fn mul_col(self, col: Var<'t>) -> Result<Var<'t>> {
        let (r, c) = self.shape();
        if col.shape() != (r, 1) {
            return Err(Error::ShapeMismatch {
                op: "mul_col",
                left: (r, c),
                right: col.shape(),
            });
        }
        let mut value = self.value().clone();
        {
            let cv = col.value();
            for i in 0..r {
                let s = cv.data()[i];
                value.row_slice_mut(i).iter_mut().for_each(|v| *v *= s);
            }
        }
        Ok(self.binary(col, Op::MulCol(self.id, col.id), value))
    }

    pub fn scale(self, s: f64) -> Var<'t> {
        let value = self.value().map(|v| v * s);
        self.unary(Op::Scale(self.id, s), value)
    }

    /// Stacks row blocks vertically; all parts must share a column count.
    pub fn concat_rows(parts: &[Var<'t>]) -> Result<Var<'t>> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Config("concat_rows of zero tensors".into()))?;
        let tape = first.tape;
        let cols = first.shape().1;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let v = p.value();
            if v.cols() != cols {
                return Err(Error::ShapeMismatch {
                    op: "concat_rows",
                    left: first.shape(),
                    right: v.shape(),
                });
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
        }
        let ids: Vec<usize> = parts.iter().map(|p| p.id).collect();
        let needs = tape.needs(&ids);
        Ok(tape.push(Tensor::from_vec(rows, cols, data)?, Op::ConcatRows(ids), needs))
    }

    /// Output row `k` is input row `idx[k]`.
    pub fn gather_rows(self, idx: &Indices) -> Result<Var<'t>> {
        let value = {
            let src = self.value();
            let (r, c) = src.shape();
            let mut data = Vec::with_capacity(idx.len() * c);
            for &i in idx.iter() {
                if i >= r {
                    return Err(Error::OutOfRange(format!("gather row {i} of {r}")));
                }
                data.extend_from_slice(src.row_slice(i));
            }
            Tensor::from_vec(idx.len(), c, data)?
        };
        Ok(self.unary(Op::Gather(self.id, idx.clone()), value))
    }

    /// Output row `idx[k]` accumulates input row `k`; output has `rows` rows.
    pub fn scatter_add_rows(self, idx: &Indices, rows: usize) -> Result<Var<'t>> {
        let value = {
            let src = self.value();
            if src.rows() != idx.len() {
                return Err(Error::ShapeMismatch {
                    op: "scatter_add_rows",
                    left: src.shape(),
                    right: (idx.len(), 1),
                });
            }
            let mut out = Tensor::zeros(rows, src.cols());
            for (k, &d) in idx.iter().enumerate() {
                if d >= rows {
                    return Err(Error::OutOfRange(format!("scatter row {d} of {rows}")));
                }
                for (o, v) in out.row_slice_mut(d).iter_mut().zip(src.row_slice(k)) {
                    *o += v;
                }
            }
            out
        };
        Ok(self.unary(Op::ScatterAdd(self.id, idx.clone()), value))
    }

    /// Row-wise sum, `n × c → n × 1`.
    pub fn sum_rows(self) -> Var<'t> {
        let value = {
            let v = self.value();
            let sums = (0..v.rows()).map(|i| v.row_slice(i).iter().sum()).collect::<Vec<f64>>();
            Tensor::column(&sums)
        };
        self.unary(Op::SumRows(self.id), value)
    }

    pub fn sum(self) -> Var<'t> {
        let value = Tensor::scalar(self.value().sum());
        self.unary(Op::SumAll(self.id), value)
    }

    pub fn reshape(self, rows: usize, cols: usize) -> Result<Var<'t>> {
        let value = self.value().clone().reshape(rows, cols)?;
        Ok(self.unary(Op::Reshape(self.id), value))
    }

    /// Elementwise leaky ReLU; the derivative at 0 takes the positive branch.
    pub fn leaky_relu(self, slope: f64) -> Var<'t> {
        let value = self.value().map(|x| leaky_relu_scalar(x, slope));
        self.unary(Op::LeakyRelu(self.id, slope), value)
    }

    pub fn sigmoid(self) -> Var<'t> {
        let value = self.value().map(sigmoid_scalar);
        self.unary(Op::Sigmoid(self.id), value)
    }

    pub fn exp(self) -> Var<'t> {
        let value = self.value().map(f64::exp);
        self.unary(Op::Exp(self.id), value)
    }

    pub fn log(self) -> Var<'t> {
        let value = self.value().map(f64::ln);
        self.unary(Op::Log(self.id), value)
    }

    /// Clamps into `[lo, hi]`; gradient is zero where clamping is active.
    pub fn clamp(self, lo: f64, hi: f64) -> Var<'t> {
        let value = self.value().map(|x| x.clamp(lo, hi));
        self.unary(Op::Clamp(self.id, lo, hi), value)
    }

    /// Softmax within each contiguous group `offsets[g]..offsets[g + 1]` of
    /// an `n × 1` score column.
    pub fn masked_softmax(self, offsets: &Indices) -> Result<Var<'t>> {
        let value = {
            let v = self.value();
            if v.cols() != 1 || offsets.last().copied().unwrap_or(0) != v.rows() {
                return Err(Error::ShapeMismatch {
                    op: "masked_softmax",
                    left: v.shape(),
                    right: (offsets.last().copied().unwrap_or(0), 1),
                });
            }
            Tensor::column(&segment_softmax(v.data(), offsets)?)
        };
        Ok(self.unary(Op::Softmax(self.id, offsets.clone()), value))
    }
}
