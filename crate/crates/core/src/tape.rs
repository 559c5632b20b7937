//! Define-by-run reverse-mode differentiation over [`Tensor`] values.
//!
//! Every forward op appends a node; nodes are only ever appended after their
//! inputs, so walking the node list backwards is a reverse topological order
//! and each node is visited exactly once.

use crate::error::{Error, Result};
use crate::tensor::{self, SparseMatrix, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<'g> {
    Leaf,
    Matmul(Var, Var),
    Transpose(Var),
    Spmm(&'g SparseMatrix, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Hadamard(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    RowSoftmax(Var),
    Dropout(Var, Tensor),
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Tensor,
        inv_std: Vec<f64>,
        batch_stats: bool,
    },
    RowL2(Var, Vec<f64>),
    Sharpen(Var, f64),
    Sum(Var),
    SumSquares(Var),
    MaskedNll {
        probs: Var,
        picks: Vec<(usize, usize)>,
    },
}

struct Node<'g> {
    value: Tensor,
    op: Op<'g>,
    requires_grad: bool,
}

/// Floor applied to probabilities inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Floor on row norms in [`Tape::row_l2_normalize`].
const NORM_FLOOR: f64 = 1e-12;

/// Batch statistics computed by a training-mode [`Tape::batch_norm`].
#[derive(Clone, Debug)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Default)]
pub struct Tape<'g> {
    nodes: Vec<Node<'g>>,
}

impl<'g> Tape<'g> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push_raw(value, Op::Leaf, true)
    }

    /// Records a leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_raw(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v).get(0, 0)
    }

    fn push_raw(&mut self, value: Tensor, op: Op<'g>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op<'g>, inputs: &[Var]) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: name });
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push_raw(value, op, requires_grad))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = tensor::matmul(self.value(a), self.value(b))?;
        self.push("matmul", out, Op::Matmul(a, b), &[a, b])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose();
        self.push("transpose", out, Op::Transpose(a), &[a])
    }

    pub fn spmm(&mut self, s: &'g SparseMatrix, d: Var) -> Result<Var> {
        let out = s.spmm(self.value(d))?;
        self.push("spmm", out, Op::Spmm(s, d), &[d])
    }

    /// Adds a `1 x cols` row vector to every row.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(bias));
        if bv.rows() != 1 || bv.cols() != av.cols() {
            return Err(Error::shape("add_row", av.shape(), bv.shape()));
        }
        let mut out = av.clone();
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(bv.data()) {
                *o += b;
            }
        }
        self.push("add_row", out, Op::AddRow(a, bias), &[a, bias])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), "add", |x, y| x + y)?;
        self.push("add", out, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), "sub", |x, y| x - y)?;
        self.push("sub", out, Op::Sub(a, b), &[a, b])
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), "hadamard", |x, y| x * y)?;
        self.push("hadamard", out, Op::Hadamard(a, b), &[a, b])
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var> {
        let out = self.value(a).map(|x| x * k);
        self.push("scale", out, Op::Scale(a, k), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push("relu", out, Op::Relu(a), &[a])
    }

    pub fn row_softmax(&mut self, a: Var) -> Result<Var> {
        let out = tensor::row_softmax(self.value(a));
        self.push("row_softmax", out, Op::RowSoftmax(a), &[a])
    }

    /// Multiplies elementwise by a fixed mask (already scaled by the keep
    /// probability).
    pub fn dropout(&mut self, a: Var, mask: Tensor) -> Result<Var> {
        let out = self.value(a).zip_map(&mask, "dropout", |x, m| x * m)?;
        self.push("dropout", out, Op::Dropout(a, mask), &[a])
    }

    /// Column-wise standardization over rows using the batch's own
    /// statistics (biased variance, `eps` inside the square root).
    pub fn batch_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<(Var, BatchStats)> {
        let xv = self.value(x);
        let (n, d) = xv.shape();
        if n < 2 {
            return Err(Error::BatchTooSmall(n));
        }
        self.check_affine(xv.shape(), gamma, beta)?;
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (m, v) in mean.iter_mut().zip(xv.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for r in 0..n {
            for ((s, v), m) in var.iter_mut().zip(xv.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= n as f64);
        let inv_std: Vec<f64> = var.iter().map(|s| 1.0 / (s + eps).sqrt()).collect();
        let (out, xhat) = self.normalize_affine(x, gamma, beta, &mean, &inv_std);
        let op = Op::BatchNorm {
            x,
            gamma,
            beta,
            xhat,
            inv_std,
            batch_stats: true,
        };
        let v = self.push("batch_norm", out, op, &[x, gamma, beta])?;
        Ok((v, BatchStats { mean, var }))
    }

    /// Batch norm with fixed (running) statistics.
    pub fn batch_norm_fixed(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mean: &[f64],
        var: &[f64],
        eps: f64,
    ) -> Result<Var> {
        let shape = self.value(x).shape();
        self.check_affine(shape, gamma, beta)?;
        if mean.len() != shape.1 || var.len() != shape.1 {
            return Err(Error::shape("batch_norm_fixed", shape, (1, mean.len())));
        }
        let inv_std: Vec<f64> = var.iter().map(|s| 1.0 / (s + eps).sqrt()).collect();
        let (out, xhat) = self.normalize_affine(x, gamma, beta, mean, &inv_std);
        let op = Op::BatchNorm {
            x,
            gamma,
            beta,
            xhat,
            inv_std,
            batch_stats: false,
        };
        self.push("batch_norm", out, op, &[x, gamma, beta])
    }

    fn check_affine(&self, shape: (usize, usize), gamma: Var, beta: Var) -> Result<()> {
        for p in [gamma, beta] {
            let s = self.value(p).shape();
            if s != (1, shape.1) {
                return Err(Error::shape("batch_norm", shape, s));
            }
        }
        Ok(())
    }

    fn normalize_affine(&self, x: Var, gamma: Var, beta: Var, mean: &[f64], inv_std: &[f64]) -> (Tensor, Tensor) {
        let xv = self.value(x);
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = xv.clone();
        let mut out = xv.clone();
        for r in 0..xv.rows() {
            let hrow = xhat.row_mut(r);
            for (c, h) in hrow.iter_mut().enumerate() {
                *h = (*h - mean[c]) * inv_std[c];
            }
            let hrow = xhat.row(r).to_vec();
            for (c, o) in out.row_mut(r).iter_mut().enumerate() {
                *o = hrow[c] * g[c] + b[c];
            }
        }
        (out, xhat)
    }

    /// Scales each row to unit L2 norm.
    pub fn row_l2_normalize(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let mut out = av.clone();
        let mut norms = Vec::with_capacity(av.rows());
        for r in 0..av.rows() {
            let norm = av.row(r).iter().map(|v| v * v).sum::<f64>().sqrt().max(NORM_FLOOR);
            out.row_mut(r).iter_mut().for_each(|v| *v /= norm);
            norms.push(norm);
        }
        self.push("row_l2_normalize", out, Op::RowL2(a, norms), &[a])
    }

    /// Row-wise power-renormalization `y^(1/t) / sum(y^(1/t))`, differentiable.
    pub fn sharpen(&mut self, a: Var, temperature: f64) -> Result<Var> {
        let power = 1.0 / temperature;
        let out = crate::objective::sharpen_values(self.value(a), power);
        self.push("sharpen", out, Op::Sharpen(a, power), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(a).sum());
        self.push("sum", out, Op::Sum(a), &[a])
    }

    pub fn sum_squares(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(a).data().iter().map(|v| v * v).sum());
        self.push("sum_squares", out, Op::SumSquares(a), &[a])
    }

    /// Mean over `rows` of `-ln max(p[i, labels[i]], floor)`.
    pub fn masked_nll(&mut self, probs: Var, labels: &[usize], rows: &[usize]) -> Result<Var> {
        if rows.is_empty() {
            return Err(Error::EmptyMask("cross_entropy"));
        }
        let pv = self.value(probs);
        let mut picks = Vec::with_capacity(rows.len());
        for &i in rows {
            if i >= pv.rows() {
                return Err(Error::NodeOutOfRange { node: i, n: pv.rows() });
            }
            let c = labels[i];
            if c >= pv.cols() {
                return Err(Error::shape("cross_entropy", pv.shape(), (i, c)));
            }
            picks.push((i, c));
        }
        let total: f64 = picks.iter().map(|&(i, c)| -pv.get(i, c).max(PROB_FLOOR).ln()).sum();
        let out = Tensor::scalar(total / picks.len() as f64);
        self.push("cross_entropy", out, Op::MaskedNll { probs, picks }, &[probs])
    }

    /// Reverse pass from a `1 x 1` loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(Error::NotScalar {
                rows: lv.rows(),
                cols: lv.cols(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if node.requires_grad {
                self.propagate(node, &g, &mut grads)?;
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<'g>, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let mut acc = |v: Var, d: Tensor| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&d),
                slot => *slot = Some(d),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::Matmul(a, b) => {
                acc(*a, tensor::matmul_nt(g, self.value(*b))?);
                acc(*b, tensor::matmul_tn(self.value(*a), g)?);
            }
            Op::Transpose(a) => acc(*a, g.transpose()),
            Op::Spmm(s, d) => acc(*d, s.spmm_transpose(g)?),
            Op::AddRow(a, bias) => {
                acc(*a, g.clone());
                acc(*bias, g.column_sums());
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|x| -x));
            }
            Op::Hadamard(a, b) => {
                acc(*a, g.zip_map(self.value(*b), "hadamard", |x, y| x * y)?);
                acc(*b, g.zip_map(self.value(*a), "hadamard", |x, y| x * y)?);
            }
            Op::Scale(a, k) => acc(*a, g.map(|x| x * k)),
            Op::Relu(a) => {
                let d = g.zip_map(self.value(*a), "relu", |gx, x| if x > 0.0 { gx } else { 0.0 })?;
                acc(*a, d);
            }
            Op::RowSoftmax(a) => {
                let y = &node.value;
                let mut d = g.clone();
                for r in 0..y.rows() {
                    let dot: f64 = g.row(r).iter().zip(y.row(r)).map(|(a, b)| a * b).sum();
                    for (dv, yv) in d.row_mut(r).iter_mut().zip(y.row(r)) {
                        *dv = yv * (*dv - dot);
                    }
                }
                acc(*a, d);
            }
            Op::Dropout(a, mask) => acc(*a, g.zip_map(mask, "dropout", |x, m| x * m)?),
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                batch_stats,
            } => {
                let gam = self.value(*gamma).data();
                let (n, d) = g.shape();
                let mut dgamma = Tensor::zeros(1, d);
                let mut dbeta = Tensor::zeros(1, d);
                for r in 0..n {
                    for c in 0..d {
                        dgamma.data_mut()[c] += g.get(r, c) * xhat.get(r, c);
                        dbeta.data_mut()[c] += g.get(r, c);
                    }
                }
                let mut dx = Tensor::zeros(n, d);
                if *batch_stats {
                    let nf = n as f64;
                    for c in 0..d {
                        let (mut sum_dh, mut sum_dh_h) = (0.0, 0.0);
                        for r in 0..n {
                            let dh = g.get(r, c) * gam[c];
                            sum_dh += dh;
                            sum_dh_h += dh * xhat.get(r, c);
                        }
                        for r in 0..n {
                            let dh = g.get(r, c) * gam[c];
                            let v = inv_std[c] / nf * (nf * dh - sum_dh - xhat.get(r, c) * sum_dh_h);
                            dx.set(r, c, v);
                        }
                    }
                } else {
                    for r in 0..n {
                        for c in 0..d {
                            dx.set(r, c, g.get(r, c) * gam[c] * inv_std[c]);
                        }
                    }
                }
                acc(*x, dx);
                acc(*gamma, dgamma);
                acc(*beta, dbeta);
            }
            Op::RowL2(a, norms) => {
                let y = &node.value;
                let mut d = g.clone();
                for (r, norm) in norms.iter().enumerate() {
                    let dot: f64 = g.row(r).iter().zip(y.row(r)).map(|(a, b)| a * b).sum();
                    for (dv, yv) in d.row_mut(r).iter_mut().zip(y.row(r)) {
                        *dv = (*dv - yv * dot) / norm;
                    }
                }
                acc(*a, d);
            }
            Op::Sharpen(a, power) => {
                let x = self.value(*a);
                let s = &node.value;
                let mut d = g.clone();
                for r in 0..s.rows() {
                    let z: f64 = x.row(r).iter().map(|v| v.powf(*power)).sum();
                    let dot: f64 = g.row(r).iter().zip(s.row(r)).map(|(a, b)| a * b).sum();
                    for (c, dv) in d.row_mut(r).iter_mut().enumerate() {
                        let xv = x.get(r, c);
                        let du = (*dv - dot) / z;
                        *dv = if xv > 0.0 { du * power * xv.powf(power - 1.0) } else { 0.0 };
                    }
                }
                acc(*a, d);
            }
            Op::Sum(a) => {
                let shape = self.value(*a).shape();
                acc(*a, Tensor::filled(shape.0, shape.1, g.get(0, 0)));
            }
            Op::SumSquares(a) => {
                let k = 2.0 * g.get(0, 0);
                acc(*a, self.value(*a).map(|x| k * x));
            }
            Op::MaskedNll { probs, picks } => {
                let pv = self.value(*probs);
                let mut d = Tensor::zeros(pv.rows(), pv.cols());
                let k = g.get(0, 0) / picks.len() as f64;
                for &(i, c) in picks {
                    let p = pv.get(i, c);
                    if p > PROB_FLOOR {
                        let cur = d.get(i, c);
                        d.set(i, c, cur - k / p);
                    }
                }
                acc(*probs, d);
            }
        }
        Ok(())
    }
}

/// Gradient buffers produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. `v`; `None` if `v` is unreachable or
    /// does not require a gradient.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Like [`Gradients::get`] but returns zeros of `shape` when absent.
    pub fn get_or_zeros(&self, v: Var, shape: (usize, usize)) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(shape.0, shape.1))
    }
}
