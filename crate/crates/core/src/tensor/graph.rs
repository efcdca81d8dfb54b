use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axis_split, ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param,
    MatMul(Var, Var),
    // The second operand is broadcast onto the first; `map[k]` is the flat
    // index of the second operand feeding output element `k`.
    Add(Var, Var, Vec<usize>),
    Mul(Var, Var, Vec<usize>),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Softmax(Var, usize),
    LogSoftmax(Var, usize),
    Concat(Vec<Var>, usize),
    Slice(Var, usize, usize),
    GatherRows(Var, Vec<usize>),
    AverageRows(Var, Vec<Vec<usize>>),
    Transpose(Var),
    Reshape(Var),
    LayerNorm(Var, Vec<f64>),
    Dropout(Var, Vec<f64>),
    Sum(Var),
    Pick(Var, Vec<usize>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Records a forward computation so it can be differentiated in reverse.
///
/// Nodes are appended in evaluation order, so reverse insertion order is a
/// valid topological order for the backward sweep.
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    train: bool,
    rng: ChaCha8Rng,
}

impl Graph {
    /// A graph in evaluation mode: dropout is the identity.
    pub fn eval() -> Self {
        Self::new(false, 0)
    }

    /// A graph in training mode whose dropout masks come from `seed`.
    pub fn train(seed: u64) -> Self {
        Self::new(true, seed)
    }

    fn new(train: bool, seed: u64) -> Self {
        Graph {
            nodes: Vec::new(),
            params: HashMap::new(),
            train,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn is_training(&self) -> bool {
        self.train
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    /// Brings a stored parameter into the graph. Repeated requests for the
    /// same parameter return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(v) = self.params.get(&id) {
            return *v;
        }
        let v = self.push(store.get(id).value.clone(), Op::Param);
        self.params.insert(id, v);
        v
    }

    pub fn param_named(&mut self, store: &ParamStore, name: &str) -> Result<Var> {
        Ok(self.param(store, store.id(name)?))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(Error::shape("matmul", ta.shape(), tb.shape()));
        }
        let out = matmul_raw(ta.data(), tb.data(), ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let shape = vec![ta.shape()[0], tb.shape()[1]];
        Ok(self.push(Tensor::new(shape, out)?, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let map = broadcast_map("add", self.shape(a), self.shape(b))?;
        let (ta, tb) = (self.value(a), self.value(b));
        let out = ta
            .data()
            .iter()
            .zip(&map)
            .map(|(x, &k)| x + tb.data()[k])
            .collect();
        let t = Tensor::new(ta.shape().to_vec(), out)?;
        Ok(self.push(t, Op::Add(a, b, map)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let map = broadcast_map("mul", self.shape(a), self.shape(b))?;
        let (ta, tb) = (self.value(a), self.value(b));
        let out = ta
            .data()
            .iter()
            .zip(&map)
            .map(|(x, &k)| x * tb.data()[k])
            .collect();
        let t = Tensor::new(ta.shape().to_vec(), out)?;
        Ok(self.push(t, Op::Mul(a, b, map)))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let t = self.map_value(a, |x| x * factor);
        self.push(t, Op::Scale(a, factor))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let t = self.map_value(a, f64::tanh);
        self.push(t, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let t = self.map_value(a, sigmoid);
        self.push(t, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let t = self.map_value(a, |x| x.max(0.0));
        self.push(t, Op::Relu(a))
    }

    fn map_value(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let ta = self.value(a);
        Tensor {
            shape: ta.shape().to_vec(),
            data: ta.data().iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let t = self.value(a).softmax(axis)?;
        Ok(self.push(t, Op::Softmax(a, axis)))
    }

    pub fn log_softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let ta = self.value(a);
        let (outer, len, inner) = axis_split(ta.shape(), axis)?;
        let mut out = ta.data().to_vec();
        for o in 0..outer {
            for i in 0..inner {
                let idx = |k: usize| (o * len + k) * inner + i;
                let max = (0..len)
                    .map(|k| out[idx(k)])
                    .fold(f64::NEG_INFINITY, f64::max);
                let lse = max + (0..len).map(|k| (out[idx(k)] - max).exp()).sum::<f64>().ln();
                for k in 0..len {
                    out[idx(k)] -= lse;
                }
            }
        }
        let t = Tensor::new(ta.shape().to_vec(), out)?;
        Ok(self.push(t, Op::LogSoftmax(a, axis)))
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("concat of zero tensors".into()))?;
        let base = self.shape(*first).to_vec();
        axis_split(&base, axis)?;
        let mut shape = base.clone();
        shape[axis] = 0;
        for p in parts {
            let s = self.shape(*p);
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(Error::shape("concat", &base, s));
            }
            shape[axis] += s[axis];
        }
        let (outer, _, inner) = axis_split(&shape, axis)?;
        let mut out = Vec::with_capacity(shape.iter().product());
        for o in 0..outer {
            for p in parts {
                let t = self.value(*p);
                let chunk = t.shape()[axis] * inner;
                out.extend_from_slice(&t.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let t = Tensor::new(shape, out)?;
        Ok(self.push(t, Op::Concat(parts.to_vec(), axis)))
    }

    /// Half-open slice `[start, end)` along `axis`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, end: usize) -> Result<Var> {
        let ta = self.value(a);
        let (outer, len, inner) = axis_split(ta.shape(), axis)?;
        if start > end || end > len {
            return Err(Error::shape("slice", ta.shape(), &[start, end]));
        }
        let mut out = Vec::with_capacity(outer * (end - start) * inner);
        for o in 0..outer {
            out.extend_from_slice(&ta.data()[(o * len + start) * inner..(o * len + end) * inner]);
        }
        let mut shape = ta.shape().to_vec();
        shape[axis] = end - start;
        let t = Tensor::new(shape, out)?;
        Ok(self.push(t, Op::Slice(a, axis, start)))
    }

    /// Selects rows of a matrix; indices may repeat.
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var> {
        let ta = self.value(a);
        if ta.rank() != 2 {
            return Err(Error::shape("gather_rows", ta.shape(), &[]));
        }
        let (rows, cols) = (ta.shape()[0], ta.shape()[1]);
        let mut out = Vec::with_capacity(indices.len() * cols);
        for &r in indices {
            if r >= rows {
                return Err(Error::shape("gather_rows", ta.shape(), &[r]));
            }
            out.extend_from_slice(ta.row(r));
        }
        let t = Tensor::new(vec![indices.len(), cols], out)?;
        Ok(self.push(t, Op::GatherRows(a, indices.to_vec())))
    }

    /// One output row per group: the mean of the listed input rows.
    pub fn average_rows(&mut self, a: Var, groups: &[Vec<usize>]) -> Result<Var> {
        let ta = self.value(a);
        if ta.rank() != 2 {
            return Err(Error::shape("average_rows", ta.shape(), &[]));
        }
        let (rows, cols) = (ta.shape()[0], ta.shape()[1]);
        let mut out = vec![0.0; groups.len() * cols];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Contract("average over an empty row group".into()));
            }
            let w = 1.0 / members.len() as f64;
            for &r in members {
                if r >= rows {
                    return Err(Error::shape("average_rows", ta.shape(), &[r]));
                }
                for (o, x) in out[g * cols..(g + 1) * cols].iter_mut().zip(ta.row(r)) {
                    *o += w * x;
                }
            }
        }
        let t = Tensor::new(vec![groups.len(), cols], out)?;
        Ok(self.push(t, Op::AverageRows(a, groups.to_vec())))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a).transpose()?;
        Ok(self.push(t, Op::Transpose(a)))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let ta = self.value(a);
        if shape.iter().product::<usize>() != ta.len() {
            return Err(Error::shape("reshape", ta.shape(), shape));
        }
        let t = Tensor::new(shape.to_vec(), ta.data().to_vec())?;
        Ok(self.push(t, Op::Reshape(a)))
    }

    /// Normalises each vector along the last axis to mean 0 and variance 1.
    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Result<Var> {
        let ta = self.value(a);
        let cols = ta.cols();
        if cols == 0 {
            return Err(Error::shape("layer_norm", ta.shape(), &[]));
        }
        let mut out = ta.data().to_vec();
        let mut inv_std = Vec::with_capacity(ta.len() / cols);
        for row in out.chunks_mut(cols) {
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / cols as f64;
            let inv = 1.0 / (var + eps).sqrt();
            for x in row.iter_mut() {
                *x = (*x - mean) * inv;
            }
            inv_std.push(inv);
        }
        let t = Tensor::new(ta.shape().to_vec(), out)?;
        Ok(self.push(t, Op::LayerNorm(a, inv_std)))
    }

    /// Inverted dropout: identity outside training mode or when `rate == 0`.
    pub fn dropout(&mut self, a: Var, rate: f64) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Contract(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !self.train || rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - rate);
        let n = self.value(a).len();
        let mask: Vec<f64> = (0..n)
            .map(|_| if self.rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let ta = self.value(a);
        let out = ta.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let t = Tensor::new(ta.shape().to_vec(), out)?;
        Ok(self.push(t, Op::Dropout(a, mask)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let t = Tensor::scalar(self.value(a).sum());
        self.push(t, Op::Sum(a))
    }

    /// Gathers individual elements by flat index into a vector.
    pub fn pick(&mut self, a: Var, flat: &[usize]) -> Result<Var> {
        let ta = self.value(a);
        let mut out = Vec::with_capacity(flat.len());
        for &k in flat {
            let v = ta
                .data()
                .get(k)
                .ok_or_else(|| Error::shape("pick", ta.shape(), &[k]))?;
            out.push(*v);
        }
        Ok(self.push(Tensor::vector(out), Op::Pick(a, flat.to_vec())))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lt.shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        let params = self
            .params
            .iter()
            .filter(|(_, v)| v.0 <= loss.0)
            .map(|(id, v)| (*id, *v))
            .collect();
        Ok(Gradients { grads, params })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let val = |v: Var| self.value(v);
        match &node.op {
            Op::Leaf | Op::Param => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                // dA = G B^T, dB = A^T G
                let mut da = vec![0.0; m * k];
                for i in 0..m {
                    for j in 0..n {
                        let gij = g[i * n + j];
                        if gij == 0.0 {
                            continue;
                        }
                        let brow = j;
                        for p in 0..k {
                            da[i * k + p] += gij * tb.data()[p * n + brow];
                        }
                    }
                }
                let mut db = vec![0.0; k * n];
                for i in 0..m {
                    for p in 0..k {
                        let aip = ta.data()[i * k + p];
                        if aip == 0.0 {
                            continue;
                        }
                        let grow = &g[i * n..(i + 1) * n];
                        for (d, gv) in db[p * n..(p + 1) * n].iter_mut().zip(grow) {
                            *d += aip * gv;
                        }
                    }
                }
                accumulate(grads, *a, da);
                accumulate(grads, *b, db);
            }
            Op::Add(a, b, map) => {
                accumulate(grads, *a, g.to_vec());
                let mut db = vec![0.0; val(*b).len()];
                for (gv, &k) in g.iter().zip(map) {
                    db[k] += gv;
                }
                accumulate(grads, *b, db);
            }
            Op::Mul(a, b, map) => {
                let (ta, tb) = (val(*a), val(*b));
                let da = g
                    .iter()
                    .zip(map)
                    .map(|(gv, &k)| gv * tb.data()[k])
                    .collect();
                let mut db = vec![0.0; tb.len()];
                for ((gv, &k), x) in g.iter().zip(map).zip(ta.data()) {
                    db[k] += gv * x;
                }
                accumulate(grads, *a, da);
                accumulate(grads, *b, db);
            }
            Op::Scale(a, f) => accumulate(grads, *a, g.iter().map(|v| v * f).collect()),
            Op::Tanh(a) => {
                let d = g
                    .iter()
                    .zip(node.value.data())
                    .map(|(gv, y)| gv * (1.0 - y * y))
                    .collect();
                accumulate(grads, *a, d);
            }
            Op::Sigmoid(a) => {
                let d = g
                    .iter()
                    .zip(node.value.data())
                    .map(|(gv, y)| gv * y * (1.0 - y))
                    .collect();
                accumulate(grads, *a, d);
            }
            Op::Relu(a) => {
                let d = g
                    .iter()
                    .zip(val(*a).data())
                    .map(|(gv, x)| if *x > 0.0 { *gv } else { 0.0 })
                    .collect();
                accumulate(grads, *a, d);
            }
            Op::Softmax(a, axis) => {
                let y = node.value.data();
                let (outer, len, inner) = axis_split(node.value.shape(), *axis).expect("checked");
                let mut d = vec![0.0; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |k: usize| (o * len + k) * inner + i;
                        let dot: f64 = (0..len).map(|k| g[idx(k)] * y[idx(k)]).sum();
                        for k in 0..len {
                            d[idx(k)] = y[idx(k)] * (g[idx(k)] - dot);
                        }
                    }
                }
                accumulate(grads, *a, d);
            }
            Op::LogSoftmax(a, axis) => {
                let y = node.value.data();
                let (outer, len, inner) = axis_split(node.value.shape(), *axis).expect("checked");
                let mut d = vec![0.0; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |k: usize| (o * len + k) * inner + i;
                        let total: f64 = (0..len).map(|k| g[idx(k)]).sum();
                        for k in 0..len {
                            d[idx(k)] = g[idx(k)] - y[idx(k)].exp() * total;
                        }
                    }
                }
                accumulate(grads, *a, d);
            }
            Op::Concat(parts, axis) => {
                let (outer, len, inner) = axis_split(node.value.shape(), *axis).expect("checked");
                let mut offset = 0;
                for p in parts {
                    let plen = val(*p).shape()[*axis];
                    let mut d = Vec::with_capacity(outer * plen * inner);
                    for o in 0..outer {
                        let start = (o * len + offset) * inner;
                        d.extend_from_slice(&g[start..start + plen * inner]);
                    }
                    accumulate(grads, *p, d);
                    offset += plen;
                }
            }
            Op::Slice(a, axis, start) => {
                let ta = val(*a);
                let (outer, len, inner) = axis_split(ta.shape(), *axis).expect("checked");
                let width = node.value.shape()[*axis];
                let mut d = vec![0.0; ta.len()];
                for o in 0..outer {
                    let src = o * width * inner;
                    let dst = (o * len + start) * inner;
                    d[dst..dst + width * inner].copy_from_slice(&g[src..src + width * inner]);
                }
                accumulate(grads, *a, d);
            }
            Op::GatherRows(a, indices) => {
                let ta = val(*a);
                let cols = ta.cols();
                let mut d = vec![0.0; ta.len()];
                for (out_row, &r) in indices.iter().enumerate() {
                    for c in 0..cols {
                        d[r * cols + c] += g[out_row * cols + c];
                    }
                }
                accumulate(grads, *a, d);
            }
            Op::AverageRows(a, groups) => {
                let ta = val(*a);
                let cols = ta.cols();
                let mut d = vec![0.0; ta.len()];
                for (gi, members) in groups.iter().enumerate() {
                    let w = 1.0 / members.len() as f64;
                    for &r in members {
                        for c in 0..cols {
                            d[r * cols + c] += w * g[gi * cols + c];
                        }
                    }
                }
                accumulate(grads, *a, d);
            }
            Op::Transpose(a) => {
                let (r, c) = (node.value.shape()[0], node.value.shape()[1]);
                let mut d = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        d[j * r + i] = g[i * c + j];
                    }
                }
                accumulate(grads, *a, d);
            }
            Op::Reshape(a) => accumulate(grads, *a, g.to_vec()),
            Op::LayerNorm(a, inv_std) => {
                let y = node.value.data();
                let cols = node.value.cols();
                let mut d = vec![0.0; y.len()];
                for (row, inv) in inv_std.iter().enumerate() {
                    let span = row * cols..(row + 1) * cols;
                    let (gr, yr) = (&g[span.clone()], &y[span.clone()]);
                    let mean_g = gr.iter().sum::<f64>() / cols as f64;
                    let mean_gy = gr.iter().zip(yr).map(|(a, b)| a * b).sum::<f64>() / cols as f64;
                    for (k, dk) in d[span].iter_mut().enumerate() {
                        *dk = inv * (gr[k] - mean_g - yr[k] * mean_gy);
                    }
                }
                accumulate(grads, *a, d);
            }
            Op::Dropout(a, mask) => {
                accumulate(grads, *a, g.iter().zip(mask).map(|(x, m)| x * m).collect())
            }
            Op::Sum(a) => accumulate(grads, *a, vec![g[0]; val(*a).len()]),
            Op::Pick(a, flat) => {
                let mut d = vec![0.0; val(*a).len()];
                for (gv, &k) in g.iter().zip(flat) {
                    d[k] += gv;
                }
                accumulate(grads, *a, d);
            }
        }
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], v: Var, d: Vec<f64>) {
    match &mut grads[v.0] {
        Some(existing) => {
            for (e, x) in existing.iter_mut().zip(d) {
                *e += x;
            }
        }
        slot @ None => *slot = Some(d),
    }
}

/// Gradient buffers produced by [`Graph::backward`].
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    params: Vec<(ParamId, Var)>,
}

impl Gradients {
    /// Gradient with respect to `v`, or `None` if the loss does not depend on it.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Adds parameter gradients into the store's gradient buffers.
    pub fn accumulate_into(&self, store: &mut ParamStore) {
        for (id, v) in &self.params {
            let p = store.get_mut(*id);
            if !p.trainable {
                continue;
            }
            if let Some(g) = self.wrt(*v) {
                for (dst, src) in p.grad.data_mut().iter_mut().zip(g) {
                    *dst += src;
                }
            }
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            for (o, bv) in orow.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += aip * bv;
            }
        }
    }
    out
}

/// Maps every flat index of `a` to the flat index of `b` it combines with.
/// `b` may equal `a` in shape, be a vector matching `a`'s last axis, or have
/// the same rank with extent 1 on broadcast axes.
fn broadcast_map(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let b_full: Vec<usize> = if b.len() == 1 && a.len() > 1 {
        let mut s = vec![1; a.len() - 1];
        s.push(b[0]);
        s
    } else {
        b.to_vec()
    };
    if b_full.len() != a.len() || a.iter().zip(&b_full).any(|(x, y)| x != y && *y != 1) {
        return Err(Error::shape(op, a, b));
    }
    let total: usize = a.iter().product();
    let mut b_strides = vec![0; a.len()];
    let mut stride = 1;
    for d in (0..a.len()).rev() {
        b_strides[d] = if b_full[d] == 1 { 0 } else { stride };
        stride *= b_full[d];
    }
    let mut map = Vec::with_capacity(total);
    let mut idx = vec![0usize; a.len()];
    for _ in 0..total {
        map.push(idx.iter().zip(&b_strides).map(|(i, s)| i * s).sum());
        for d in (0..a.len()).rev() {
            idx[d] += 1;
            if idx[d] < a[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(map)
}
