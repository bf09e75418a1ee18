use std::sync::Arc;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::params::{ParamId, ParamStore};
use crate::scalar::Scalar;

/// Handle to a value recorded in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Pointwise primitives addressable by tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementwise {
    Add,
    Mul,
    Sigmoid,
    Tanh,
    Relu,
}

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf,
    Param,
    MatMul(Var, Var),
    MatVec(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Abs(Var),
    Scale(Var, T),
    MulConst(Var, Arc<Vec<T>>),
    Softmax(Var),
    ConcatCols(Vec<Var>),
    Concat(Vec<Var>),
    OuterBroadcast(Var, usize),
    Transpose(Var),
    Reshape(Var),
    Sum(Var),
    SumSquares(Var),
    CrossEntropy(Var, usize),
    BceWithLogits(Var, T),
}

impl<T> Op<T> {
    fn tag(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Param => "param",
            Op::MatMul(..) => "matmul",
            Op::MatVec(..) => "matvec",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Abs(_) => "abs",
            Op::Scale(..) => "scale",
            Op::MulConst(..) => "mul_const",
            Op::Softmax(_) => "softmax",
            Op::ConcatCols(_) => "concat_columns",
            Op::Concat(_) => "concat",
            Op::OuterBroadcast(..) => "outer_broadcast",
            Op::Transpose(_) => "transpose",
            Op::Reshape(_) => "reshape",
            Op::Sum(_) => "sum",
            Op::SumSquares(_) => "sum_squares",
            Op::CrossEntropy(..) => "cross_entropy",
            Op::BceWithLogits(..) => "bce_with_logits",
        }
    }
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Define-by-run tape. One graph is built per example and discarded after
/// the backward pass; parameter leaves share storage with the store.
pub struct Graph<'p, T> {
    nodes: Vec<Node<T>>,
    params: &'p ParamStore<T>,
    param_vars: Vec<Option<Var>>,
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Graph {
            nodes: Vec::new(),
            params,
            param_vars: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamStore<T> {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn data(&self, v: Var) -> &[T] {
        self.nodes[v.0].value.data()
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Operation tag that produced `v`.
    pub fn op_name(&self, v: Var) -> &'static str {
        self.nodes[v.0].op.tag()
    }

    /// Length of the longest dependency chain ending at `v`, counting `v`.
    pub fn depth(&self, v: Var) -> usize {
        let mut depth = vec![0usize; v.0 + 1];
        for i in 0..=v.0 {
            let d = self.inputs(i).iter().map(|u| depth[u.0]).max().unwrap_or(0);
            depth[i] = d + 1;
        }
        depth[v.0]
    }

    fn inputs(&self, i: usize) -> Vec<Var> {
        match &self.nodes[i].op {
            Op::Leaf | Op::Param => vec![],
            Op::MatMul(a, b) | Op::MatVec(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => {
                vec![*a, *b]
            }
            Op::Sigmoid(a)
            | Op::Tanh(a)
            | Op::Relu(a)
            | Op::Abs(a)
            | Op::Scale(a, _)
            | Op::MulConst(a, _)
            | Op::Softmax(a)
            | Op::OuterBroadcast(a, _)
            | Op::Transpose(a)
            | Op::Reshape(a)
            | Op::Sum(a)
            | Op::SumSquares(a)
            | Op::CrossEntropy(a, _)
            | Op::BceWithLogits(a, _) => vec![*a],
            Op::ConcatCols(vs) | Op::Concat(vs) => vs.clone(),
        }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vs: &[Var]) -> bool {
        vs.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Records an input leaf.
    pub fn input(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// Records a leaf that never receives gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.input(value, false)
    }

    pub fn constant_vec(&mut self, data: Vec<T>) -> Result<Var> {
        Ok(self.constant(Tensor::vector(data)?))
    }

    pub fn zeros(&mut self, len: usize) -> Result<Var> {
        self.constant_vec(vec![T::zero(); len])
    }

    /// Leaf for a stored parameter. Repeated calls return the same handle.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        let value = self.params.value(id).clone();
        let v = self.push(value, Op::Param, true);
        self.param_vars[id.0] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::shape("matmul", sa, sb));
        }
        let (m, n, p) = (sa[0], sa[1], sb[1]);
        let (da, db) = (self.data(a), self.data(b));
        let mut out = vec![T::zero(); m * p];
        for i in 0..m {
            for l in 0..n {
                let x = da[i * n + l];
                if x == T::zero() {
                    continue;
                }
                let row = &db[l * p..(l + 1) * p];
                for (o, &y) in out[i * p..(i + 1) * p].iter_mut().zip(row) {
                    *o += x * y;
                }
            }
        }
        let rg = self.needs(&[a, b]);
        Ok(self.push(Tensor::from_parts(vec![m, p], out), Op::MatMul(a, b), rg))
    }

    /// Matrix times rank-1 vector.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (sw, sx) = (self.shape(w), self.shape(x));
        if sw.len() != 2 || sx.len() != 1 || sw[1] != sx[0] {
            return Err(Error::shape("matvec", sw, sx));
        }
        let (m, n) = (sw[0], sw[1]);
        let (dw, dx) = (self.data(w), self.data(x));
        let out: Vec<T> = (0..m)
            .map(|i| dw[i * n..(i + 1) * n].iter().zip(dx).map(|(&a, &b)| a * b).sum())
            .collect();
        let rg = self.needs(&[w, x]);
        Ok(self.push(Tensor::from_parts(vec![m], out), Op::MatVec(w, x), rg))
    }

    fn binary(&mut self, a: Var, b: Var, op: Op<T>, f: impl Fn(T, T) -> T) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(op.tag(), self.shape(a), self.shape(b)));
        }
        let out = self.data(a).iter().zip(self.data(b)).map(|(&x, &y)| f(x, y)).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.needs(&[a, b]);
        Ok(self.push(Tensor::from_parts(shape, out), op, rg))
    }

    fn unary(&mut self, a: Var, op: Op<T>, f: impl Fn(T) -> T) -> Var {
        let out = self.data(a).iter().map(|&x| f(x)).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.needs(&[a]);
        self.push(Tensor::from_parts(shape, out), op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    /// Sums any number of same-shaped terms left to right.
    pub fn add_all(&mut self, terms: &[Var]) -> Result<Var> {
        let (&first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::InvalidInput("add_all of no terms".into()))?;
        rest.iter().try_fold(first, |acc, &t| self.add(acc, t))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), |x| x.tanh())
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| if x > T::zero() { x } else { T::zero() })
    }

    pub fn abs(&mut self, a: Var) -> Var {
        self.unary(a, Op::Abs(a), |x| x.abs())
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        self.unary(a, Op::Scale(a, s), |x| x * s)
    }

    /// Multiplies by a constant (non-differentiable) tensor of equal size, e.g. a dropout mask.
    pub fn mul_const(&mut self, a: Var, c: Vec<T>) -> Result<Var> {
        if c.len() != self.value(a).len() {
            return Err(Error::shape("mul_const", self.shape(a), &[c.len()]));
        }
        let out = self.data(a).iter().zip(&c).map(|(&x, &m)| x * m).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.needs(&[a]);
        Ok(self.push(Tensor::from_parts(shape, out), Op::MulConst(a, Arc::new(c)), rg))
    }

    pub fn elementwise(&mut self, op: Elementwise, inputs: &[Var]) -> Result<Var> {
        let arity = match op {
            Elementwise::Add | Elementwise::Mul => 2,
            _ => 1,
        };
        if inputs.len() != arity {
            return Err(Error::InvalidInput(format!(
                "{op:?} takes {arity} inputs, got {}",
                inputs.len()
            )));
        }
        match op {
            Elementwise::Add => self.add(inputs[0], inputs[1]),
            Elementwise::Mul => self.mul(inputs[0], inputs[1]),
            Elementwise::Sigmoid => Ok(self.sigmoid(inputs[0])),
            Elementwise::Tanh => Ok(self.tanh(inputs[0])),
            Elementwise::Relu => Ok(self.relu(inputs[0])),
        }
    }

    /// Max-shifted softmax over a rank-1 tensor.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        if self.shape(a).len() != 1 {
            return Err(Error::shape("softmax", self.shape(a), &[]));
        }
        let out = softmax(self.data(a));
        let rg = self.needs(&[a]);
        Ok(self.push(Tensor::from_parts(vec![out.len()], out), Op::Softmax(a), rg))
    }

    /// Column-wise concatenation of `[k]` or `[k, c]` tensors into `[k, total]`.
    pub fn concat_columns(&mut self, vs: &[Var]) -> Result<Var> {
        let first = *vs
            .first()
            .ok_or_else(|| Error::InvalidInput("concat_columns of no tensors".into()))?;
        let k = self.value(first).rows();
        let mut total = 0;
        for &v in vs {
            let t = self.value(v);
            if t.rank() > 2 || t.rows() != k {
                return Err(Error::shape("concat_columns", self.shape(first), t.shape()));
            }
            total += t.cols();
        }
        let mut out = vec![T::zero(); k * total];
        let mut off = 0;
        for &v in vs {
            let t = self.value(v);
            let c = t.cols();
            for i in 0..k {
                out[i * total + off..i * total + off + c].copy_from_slice(&t.data()[i * c..(i + 1) * c]);
            }
            off += c;
        }
        let rg = self.needs(vs);
        Ok(self.push(Tensor::from_parts(vec![k, total], out), Op::ConcatCols(vs.to_vec()), rg))
    }

    /// Concatenation of rank-1 tensors.
    pub fn concat(&mut self, vs: &[Var]) -> Result<Var> {
        if vs.is_empty() {
            return Err(Error::InvalidInput("concat of no tensors".into()));
        }
        let mut out = Vec::new();
        for &v in vs {
            if self.shape(v).len() != 1 {
                return Err(Error::shape("concat", self.shape(v), &[]));
            }
            out.extend_from_slice(self.data(v));
        }
        let rg = self.needs(vs);
        Ok(self.push(Tensor::from_parts(vec![out.len()], out), Op::Concat(vs.to_vec()), rg))
    }

    /// `q ⊗ e` with `e` a ones vector of length `count`: q replicated across columns.
    pub fn outer_broadcast(&mut self, q: Var, count: usize) -> Result<Var> {
        if count == 0 {
            return Err(Error::InvalidInput("outer_broadcast with zero columns".into()));
        }
        if self.shape(q).len() != 1 {
            return Err(Error::shape("outer_broadcast", self.shape(q), &[]));
        }
        let out = self
            .data(q)
            .iter()
            .flat_map(|&x| std::iter::repeat_n(x, count))
            .collect();
        let k = self.shape(q)[0];
        let rg = self.needs(&[q]);
        Ok(self.push(Tensor::from_parts(vec![k, count], out), Op::OuterBroadcast(q, count), rg))
    }

    /// Transpose of a matrix; a rank-1 `[k]` becomes `[1, k]`.
    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.rank() > 2 {
            return Err(Error::shape("transpose", t.shape(), &[]));
        }
        let (m, n) = (t.rows(), t.cols());
        let d = t.data();
        let mut out = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = d[i * n + j];
            }
        }
        let rg = self.needs(&[a]);
        Ok(self.push(Tensor::from_parts(vec![n, m], out), Op::Transpose(a), rg))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(a);
        if shape.iter().product::<usize>() != t.len() || shape.contains(&0) {
            return Err(Error::shape("reshape", t.shape(), shape));
        }
        let value = Tensor::from_parts(shape.to_vec(), t.to_vec());
        let rg = self.needs(&[a]);
        Ok(self.push(value, Op::Reshape(a), rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().copied().sum();
        let rg = self.needs(&[a]);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    pub fn sum_squares(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().map(|&x| x * x).sum();
        let rg = self.needs(&[a]);
        self.push(Tensor::scalar(s), Op::SumSquares(a), rg)
    }

    /// `-log softmax(logits)[target]`.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let d = self.data(logits);
        if self.shape(logits).len() != 1 || target >= d.len() {
            return Err(Error::InvalidInput(format!(
                "cross_entropy target {target} for logits of shape {:?}",
                self.shape(logits)
            )));
        }
        let loss = log_sum_exp(d) - d[target];
        let rg = self.needs(&[logits]);
        Ok(self.push(Tensor::scalar(loss), Op::CrossEntropy(logits, target), rg))
    }

    /// Binary cross-entropy of `sigmoid(logit)` against `target` in `[0, 1]`.
    pub fn bce_with_logits(&mut self, logit: Var, target: T) -> Result<Var> {
        let x = self
            .value(logit)
            .item()
            .ok_or_else(|| Error::shape("bce_with_logits", self.shape(logit), &[1]))?;
        let loss = x.max(T::zero()) - x * target + (-x.abs()).exp().ln_1p();
        let rg = self.needs(&[logit]);
        Ok(self.push(Tensor::scalar(loss), Op::BceWithLogits(logit, target), rg))
    }

    /// Reverse pass from a one-element `loss`. Gradients accumulate additively
    /// over fan-out; leaves not connected to the loss get no entry.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.value(loss).len() != 1 {
            return Err(Error::InvalidInput(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if self.nodes[i].requires_grad {
                self.propagate(i, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        let param_vars = self
            .param_vars
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (ParamId(i), v)))
            .collect();
        Ok(Gradients {
            by_node: grads,
            param_vars,
        })
    }

    fn acc(&self, grads: &mut [Option<Vec<T>>], v: Var, delta: Vec<T>) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(g) => g.iter_mut().zip(delta).for_each(|(a, b)| *a += b),
            slot @ None => *slot = Some(delta),
        }
    }

    fn propagate(&self, i: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let out = self.nodes[i].value.data();
        match &self.nodes[i].op {
            Op::Leaf | Op::Param => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, n, p) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                let (da, db) = (ta.data(), tb.data());
                if self.nodes[a.0].requires_grad {
                    let mut ga = vec![T::zero(); m * n];
                    for r in 0..m {
                        for l in 0..n {
                            ga[r * n + l] = (0..p).map(|j| g[r * p + j] * db[l * p + j]).sum();
                        }
                    }
                    self.acc(grads, *a, ga);
                }
                if self.nodes[b.0].requires_grad {
                    let mut gb = vec![T::zero(); n * p];
                    for r in 0..m {
                        for l in 0..n {
                            let x = da[r * n + l];
                            for j in 0..p {
                                gb[l * p + j] += x * g[r * p + j];
                            }
                        }
                    }
                    self.acc(grads, *b, gb);
                }
            }
            Op::MatVec(w, x) => {
                let (tw, tx) = (self.value(*w), self.value(*x));
                let (m, n) = (tw.shape()[0], tw.shape()[1]);
                let (dw, dx) = (tw.data(), tx.data());
                if self.nodes[w.0].requires_grad {
                    let mut gw = vec![T::zero(); m * n];
                    for r in 0..m {
                        for c in 0..n {
                            gw[r * n + c] = g[r] * dx[c];
                        }
                    }
                    self.acc(grads, *w, gw);
                }
                if self.nodes[x.0].requires_grad {
                    let mut gx = vec![T::zero(); n];
                    for r in 0..m {
                        for c in 0..n {
                            gx[c] += dw[r * n + c] * g[r];
                        }
                    }
                    self.acc(grads, *x, gx);
                }
            }
            Op::Add(a, b) => {
                self.acc(grads, *a, g.to_vec());
                self.acc(grads, *b, g.to_vec());
            }
            Op::Sub(a, b) => {
                self.acc(grads, *a, g.to_vec());
                self.acc(grads, *b, g.iter().map(|&x| -x).collect());
            }
            Op::Mul(a, b) => {
                let (da, db) = (self.data(*a), self.data(*b));
                self.acc(grads, *a, g.iter().zip(db).map(|(&x, &y)| x * y).collect());
                self.acc(grads, *b, g.iter().zip(da).map(|(&x, &y)| x * y).collect());
            }
            Op::Sigmoid(a) => {
                let d = g.iter().zip(out).map(|(&x, &y)| x * y * (T::one() - y)).collect();
                self.acc(grads, *a, d);
            }
            Op::Tanh(a) => {
                let d = g.iter().zip(out).map(|(&x, &y)| x * (T::one() - y * y)).collect();
                self.acc(grads, *a, d);
            }
            Op::Relu(a) => {
                let d = g
                    .iter()
                    .zip(self.data(*a))
                    .map(|(&x, &y)| if y > T::zero() { x } else { T::zero() })
                    .collect();
                self.acc(grads, *a, d);
            }
            Op::Abs(a) => {
                let d = g
                    .iter()
                    .zip(self.data(*a))
                    .map(|(&x, &y)| if y > T::zero() { x } else if y < T::zero() { -x } else { T::zero() })
                    .collect();
                self.acc(grads, *a, d);
            }
            Op::Scale(a, s) => self.acc(grads, *a, g.iter().map(|&x| x * *s).collect()),
            Op::MulConst(a, c) => self.acc(grads, *a, g.iter().zip(c.iter()).map(|(&x, &m)| x * m).collect()),
            Op::Softmax(a) => {
                let dot: T = g.iter().zip(out).map(|(&x, &y)| x * y).sum();
                let d = g.iter().zip(out).map(|(&x, &y)| y * (x - dot)).collect();
                self.acc(grads, *a, d);
            }
            Op::ConcatCols(vs) => {
                let total = self.nodes[i].value.shape()[1];
                let mut off = 0;
                for &v in vs {
                    let t = self.value(v);
                    let (k, c) = (t.rows(), t.cols());
                    let mut d = Vec::with_capacity(k * c);
                    for r in 0..k {
                        d.extend_from_slice(&g[r * total + off..r * total + off + c]);
                    }
                    self.acc(grads, v, d);
                    off += c;
                }
            }
            Op::Concat(vs) => {
                let mut off = 0;
                for &v in vs {
                    let n = self.value(v).len();
                    self.acc(grads, v, g[off..off + n].to_vec());
                    off += n;
                }
            }
            Op::OuterBroadcast(q, count) => {
                let d = g.chunks(*count).map(|row| row.iter().copied().sum()).collect();
                self.acc(grads, *q, d);
            }
            Op::Transpose(a) => {
                let t = self.value(*a);
                let (m, n) = (t.rows(), t.cols());
                let mut d = vec![T::zero(); m * n];
                for r in 0..m {
                    for c in 0..n {
                        d[r * n + c] = g[c * m + r];
                    }
                }
                self.acc(grads, *a, d);
            }
            Op::Reshape(a) => self.acc(grads, *a, g.to_vec()),
            Op::Sum(a) => {
                let n = self.value(*a).len();
                self.acc(grads, *a, vec![g[0]; n]);
            }
            Op::SumSquares(a) => {
                let two = T::lit(2.0);
                self.acc(grads, *a, self.data(*a).iter().map(|&x| two * x * g[0]).collect());
            }
            Op::CrossEntropy(a, target) => {
                let mut p = softmax(self.data(*a));
                p[*target] -= T::one();
                self.acc(grads, *a, p.into_iter().map(|x| x * g[0]).collect());
            }
            Op::BceWithLogits(a, target) => {
                let x = self.data(*a)[0];
                self.acc(grads, *a, vec![(sigmoid(x) - *target) * g[0]]);
            }
        }
    }
}

/// Result of [`Graph::backward`].
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    by_node: Vec<Option<Vec<T>>>,
    param_vars: Vec<(ParamId, Var)>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient with respect to a recorded value, if any flowed into it.
    pub fn wrt(&self, v: Var) -> Option<&[T]> {
        self.by_node.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn param(&self, id: ParamId) -> Option<&[T]> {
        self.param_vars
            .iter()
            .find(|(p, _)| *p == id)
            .and_then(|(_, v)| self.wrt(*v))
    }

    /// Adds parameter gradients into per-parameter buffers indexed by id.
    pub fn accumulate_into(&self, acc: &mut [Vec<T>]) {
        for &(id, v) in &self.param_vars {
            if let Some(g) = self.wrt(v) {
                acc[id.0].iter_mut().zip(g).for_each(|(a, &b)| *a += b);
            }
        }
    }

    /// Dense per-parameter gradients; untouched parameters get zeros.
    pub fn dense(&self, store: &ParamStore<T>) -> Vec<Vec<T>> {
        let mut out = store.zeros_like();
        self.accumulate_into(&mut out);
        out
    }
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    max + xs.iter().map(|&x| (x - max).exp()).sum::<T>().ln()
}

/// Max-shifted softmax on plain values.
pub fn softmax<T: Scalar>(xs: &[T]) -> Vec<T> {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = xs.iter().map(|&x| (x - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}
