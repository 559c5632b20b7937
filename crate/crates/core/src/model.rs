//! The biaffine shortcut-attention GCN: a one-layer graph-convolution
//! encoder for each node's local field, a dense encoder for the ego
//! features, bilinear attention between the two in both directions, fusion,
//! and two prediction heads (graph convolution and linear).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, Graph};
use crate::objective::ConsistencyMode;
use crate::rng;
use crate::tape::{BatchStats, Tape, Var};
use crate::tensor::{SparseMatrix, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    Add,
    Mul,
}

/// Which representations the bilinear attention pairs up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiaffineMode {
    /// Local field against ego features.
    EgoLocal,
    /// Both sides are dense feature encodings; no graph in the attention.
    EgoEgo,
    /// Both sides are graph-convolution encodings.
    LocalLocal,
    /// No attention; the heads see the encoders directly.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Batch,
    RowL2,
}

macro_rules! str_enum {
    ($t:ty { $($s:literal => $v:expr),+ $(,)? }) => {
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($v),)+
                    _ => Err(Error::Config(format!(concat!("unknown ", stringify!($t), " {:?}"), s))),
                }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = match self { $(x if *x == $v => $s,)+ _ => unreachable!() };
                f.write_str(s)
            }
        }
    };
}

str_enum!(Fusion { "add" => Fusion::Add, "mul" => Fusion::Mul });
str_enum!(BiaffineMode {
    "ego_local" => BiaffineMode::EgoLocal,
    "ego_ego" => BiaffineMode::EgoEgo,
    "local_local" => BiaffineMode::LocalLocal,
    "none" => BiaffineMode::None,
});
str_enum!(NormKind { "batch" => NormKind::Batch, "row_l2" => NormKind::RowL2 });
str_enum!(ConsistencyMode { "average" => ConsistencyMode::Average, "pairwise" => ConsistencyMode::Pairwise });

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden_dim: usize,
    pub fusion: Fusion,
    pub biaffine: BiaffineMode,
    pub norm: NormKind,
    pub dropout: f64,
    pub lambda: f64,
    pub temperature: f64,
    pub sharpen: bool,
    pub consistency: ConsistencyMode,
    /// Treat the sharpened consistency target as a constant.
    pub stop_gradient: bool,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub bn_eps: f64,
    pub bn_momentum: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden_dim: 64,
            fusion: Fusion::Mul,
            biaffine: BiaffineMode::EgoLocal,
            norm: NormKind::Batch,
            dropout: 0.5,
            lambda: 1.0,
            temperature: 0.7,
            sharpen: true,
            consistency: ConsistencyMode::Average,
            stop_gradient: true,
            lr: 0.01,
            weight_decay: 5e-4,
            epochs: 200,
            seed: 0,
            bn_eps: 1e-5,
            bn_momentum: 0.9,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.temperature > 0.0) {
            return bad(format!("temperature {} must be > 0", self.temperature));
        }
        if !(self.lambda >= 0.0) {
            return bad(format!("lambda {} must be >= 0", self.lambda));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("lr must be > 0 and weight_decay >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) || !(self.bn_eps >= 0.0) {
            return bad("bn_momentum must lie in [0, 1] and bn_eps >= 0".into());
        }
        Ok(())
    }

    /// Temperature actually applied to the consistency target.
    pub fn effective_temperature(&self) -> f64 {
        if self.sharpen {
            self.temperature
        } else {
            1.0
        }
    }
}

/// Running statistics for one batch-norm layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl RunningStats {
    pub fn new(d: usize) -> Self {
        RunningStats {
            mean: vec![0.0; d],
            var: vec![1.0; d],
        }
    }

    /// `running = momentum * running + (1 - momentum) * batch`.
    pub fn update(&mut self, batch: &BatchStats, momentum: f64) {
        for (r, b) in self.mean.iter_mut().zip(&batch.mean) {
            *r = momentum * *r + (1.0 - momentum) * b;
        }
        for (r, b) in self.var.iter_mut().zip(&batch.var) {
            *r = momentum * *r + (1.0 - momentum) * b;
        }
    }
}

/// Access to a model's trainable tensors in a fixed order.
pub trait ParamSet {
    fn tensors(&self) -> Vec<(&'static str, &Tensor)>;
    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)>;

    /// Whether weight decay applies; biases and normalization affine
    /// parameters are excluded.
    fn decays(name: &str) -> bool {
        !(name.starts_with('b') || name.ends_with("gamma") || name.ends_with("beta"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Stream {
    W1 = 1,
    Theta = 3,
    M1 = 5,
    M2 = 6,
    Wc = 7,
    MlpW = 8,
}

pub(crate) fn glorot(rows: usize, cols: usize, seed: u64, stream: Stream) -> Tensor {
    let mut rng = rng::stream(seed, rng::DOMAIN_INIT, stream as u64, 0);
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let mut t = Tensor::zeros(rows, cols);
    for v in t.data_mut() {
        *v = rng.random_range(-a..a);
    }
    t
}

fn near_identity(d: usize, seed: u64, stream: Stream) -> Tensor {
    let mut rng = rng::stream(seed, rng::DOMAIN_INIT, stream as u64, 0);
    let noise = Normal::new(0.0, 0.01).expect("valid std");
    let mut t = Tensor::eye(d);
    for v in t.data_mut() {
        *v += noise.sample(&mut rng);
    }
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub w1: Tensor,
    pub b_c: Tensor,
    pub theta: Tensor,
    pub b_theta: Tensor,
    pub m1: Tensor,
    pub m2: Tensor,
    pub wc: Tensor,
    pub mlp_w: Tensor,
    pub mlp_b: Tensor,
    pub norm_c_gamma: Tensor,
    pub norm_c_beta: Tensor,
    pub norm_ego_gamma: Tensor,
    pub norm_ego_beta: Tensor,
    pub running_c: RunningStats,
    pub running_ego: RunningStats,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases, identity plus `N(0, 0.01)` for
    /// the bilinear metrics, unit/zero normalization affine.
    pub fn init(f: usize, d: usize, c: usize, seed: u64) -> Self {
        ModelParams {
            w1: glorot(f, d, seed, Stream::W1),
            b_c: Tensor::zeros(1, d),
            theta: glorot(f, d, seed, Stream::Theta),
            b_theta: Tensor::zeros(1, d),
            m1: near_identity(d, seed, Stream::M1),
            m2: near_identity(d, seed, Stream::M2),
            wc: glorot(d, c, seed, Stream::Wc),
            mlp_w: glorot(d, c, seed, Stream::MlpW),
            mlp_b: Tensor::zeros(1, c),
            norm_c_gamma: Tensor::ones(1, d),
            norm_c_beta: Tensor::zeros(1, d),
            norm_ego_gamma: Tensor::ones(1, d),
            norm_ego_beta: Tensor::zeros(1, d),
            running_c: RunningStats::new(d),
            running_ego: RunningStats::new(d),
        }
    }

    pub fn for_graph(g: &Graph, config: &ModelConfig) -> Self {
        Self::init(g.num_features(), config.hidden_dim, g.num_classes(), config.seed)
    }

    /// Checks shapes against `(f, d, c)` and finiteness.
    pub fn validate(&self, f: usize, d: usize, c: usize) -> Result<()> {
        let expected = [
            (f, d),
            (1, d),
            (f, d),
            (1, d),
            (d, d),
            (d, d),
            (d, c),
            (d, c),
            (1, c),
            (1, d),
            (1, d),
            (1, d),
            (1, d),
        ];
        for ((name, t), shape) in self.tensors().into_iter().zip(expected) {
            if t.shape() != shape {
                return Err(Error::Config(format!("param {name}: shape {:?}, expected {shape:?}", t.shape())));
            }
            if !t.is_finite() {
                return Err(Error::NonFinite { op: name });
            }
        }
        Ok(())
    }

    pub fn on_tape(&self, tape: &mut Tape<'_>) -> ParamVars {
        let v: Vec<Var> = self.tensors().into_iter().map(|(_, t)| tape.param(t.clone())).collect();
        ParamVars {
            w1: v[0],
            b_c: v[1],
            theta: v[2],
            b_theta: v[3],
            m1: v[4],
            m2: v[5],
            wc: v[6],
            mlp_w: v[7],
            mlp_b: v[8],
            norm_c_gamma: v[9],
            norm_c_beta: v[10],
            norm_ego_gamma: v[11],
            norm_ego_beta: v[12],
        }
    }
}

impl ParamSet for ModelParams {
    fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("w1", &self.w1),
            ("b_c", &self.b_c),
            ("theta", &self.theta),
            ("b_theta", &self.b_theta),
            ("m1", &self.m1),
            ("m2", &self.m2),
            ("wc", &self.wc),
            ("mlp_w", &self.mlp_w),
            ("b_mlp", &self.mlp_b),
            ("norm_c_gamma", &self.norm_c_gamma),
            ("norm_c_beta", &self.norm_c_beta),
            ("norm_ego_gamma", &self.norm_ego_gamma),
            ("norm_ego_beta", &self.norm_ego_beta),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("w1", &mut self.w1),
            ("b_c", &mut self.b_c),
            ("theta", &mut self.theta),
            ("b_theta", &mut self.b_theta),
            ("m1", &mut self.m1),
            ("m2", &mut self.m2),
            ("wc", &mut self.wc),
            ("mlp_w", &mut self.mlp_w),
            ("b_mlp", &mut self.mlp_b),
            ("norm_c_gamma", &mut self.norm_c_gamma),
            ("norm_c_beta", &mut self.norm_c_beta),
            ("norm_ego_gamma", &mut self.norm_ego_gamma),
            ("norm_ego_beta", &mut self.norm_ego_beta),
        ]
    }
}

/// Tape handles for [`ModelParams`], in the same order as
/// [`ParamSet::tensors`].
#[derive(Clone, Copy, Debug)]
pub struct ParamVars {
    pub w1: Var,
    pub b_c: Var,
    pub theta: Var,
    pub b_theta: Var,
    pub m1: Var,
    pub m2: Var,
    pub wc: Var,
    pub mlp_w: Var,
    pub mlp_b: Var,
    pub norm_c_gamma: Var,
    pub norm_c_beta: Var,
    pub norm_ego_gamma: Var,
    pub norm_ego_beta: Var,
}

impl ParamVars {
    pub fn all(&self) -> [Var; 13] {
        [
            self.w1,
            self.b_c,
            self.theta,
            self.b_theta,
            self.m1,
            self.m2,
            self.wc,
            self.mlp_w,
            self.mlp_b,
            self.norm_c_gamma,
            self.norm_c_beta,
            self.norm_ego_gamma,
            self.norm_ego_beta,
        ]
    }
}

/// A graph with its normalized adjacency precomputed.
pub struct GraphInput<'g> {
    pub graph: &'g Graph,
    pub a_hat: SparseMatrix,
}

impl<'g> GraphInput<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        GraphInput {
            graph,
            a_hat: normalize_adjacency(graph),
        }
    }
}

/// Training passes draw dropout masks keyed by `(seed, epoch, site)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train { epoch: u64 },
    Eval,
}

impl Mode {
    pub fn is_training(self) -> bool {
        matches!(self, Mode::Train { .. })
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Site {
    Local = 0,
    Ego = 1,
    HeadGcn = 2,
    HeadMlp = 3,
}

pub(crate) fn apply_dropout(tape: &mut Tape<'_>, x: Var, p: f64, seed: u64, mode: Mode, site: Site) -> Result<Var> {
    match mode {
        Mode::Train { epoch } if p > 0.0 => {
            let (r, c) = tape.value(x).shape();
            let mut rng = rng::stream(seed, rng::DOMAIN_DROPOUT, epoch, site as u64);
            let mask = rng::dropout_mask(r, c, p, &mut rng);
            tape.dropout(x, mask)
        }
        _ => Ok(x),
    }
}

/// `ReLU(A_hat * x * w + b)`.
pub fn local_field_encode<'g>(tape: &mut Tape<'g>, a_hat: &'g SparseMatrix, x: Var, w: Var, b: Var) -> Result<Var> {
    let xw = tape.matmul(x, w)?;
    let prop = tape.spmm(a_hat, xw)?;
    let pre = tape.add_row(prop, b)?;
    tape.relu(pre)
}

/// `ReLU(x * theta + b)`.
pub fn ego_encode(tape: &mut Tape<'_>, x: Var, theta: Var, b: Var) -> Result<Var> {
    let xt = tape.matmul(x, theta)?;
    let pre = tape.add_row(xt, b)?;
    tape.relu(pre)
}

/// `S1 = softmax(h_c M1 h_ego^T)`, `S2 = softmax(h_ego M2 h_c^T)`.
pub fn biaffine_scores(tape: &mut Tape<'_>, h_c: Var, h_ego: Var, m1: Var, m2: Var) -> Result<(Var, Var)> {
    let (sc, se) = (tape.value(h_c).shape(), tape.value(h_ego).shape());
    if sc != se {
        return Err(Error::shape("biaffine_scores", sc, se));
    }
    let h_ego_t = tape.transpose(h_ego)?;
    let h_c_t = tape.transpose(h_c)?;
    let left = tape.matmul(h_c, m1)?;
    let l1 = tape.matmul(left, h_ego_t)?;
    let s1 = tape.row_softmax(l1)?;
    let right = tape.matmul(h_ego, m2)?;
    let l2 = tape.matmul(right, h_c_t)?;
    let s2 = tape.row_softmax(l2)?;
    Ok((s1, s2))
}

/// `(S1 * h_ego, S2 * h_c)`.
pub fn affine_messages(tape: &mut Tape<'_>, s1: Var, s2: Var, h_ego: Var, h_c: Var) -> Result<(Var, Var)> {
    let a = tape.matmul(s1, h_ego)?;
    let b = tape.matmul(s2, h_c)?;
    Ok((a, b))
}

/// Normalization for one fusion branch.
pub struct NormArgs<'a> {
    pub kind: NormKind,
    pub gamma: Var,
    pub beta: Var,
    pub running: &'a RunningStats,
    pub eps: f64,
}

/// `Norm(h + h_a)` or `Norm(h * h_a)`. Returns the batch statistics when
/// batch norm ran in training mode.
pub fn fuse(
    tape: &mut Tape<'_>,
    h: Var,
    h_a: Var,
    fusion: Fusion,
    norm: &NormArgs<'_>,
    mode: Mode,
) -> Result<(Var, Option<BatchStats>)> {
    let mixed = match fusion {
        Fusion::Add => tape.add(h, h_a)?,
        Fusion::Mul => tape.hadamard(h, h_a)?,
    };
    match (norm.kind, mode) {
        (NormKind::RowL2, _) => Ok((tape.row_l2_normalize(mixed)?, None)),
        (NormKind::Batch, Mode::Train { .. }) => {
            let (v, stats) = tape.batch_norm(mixed, norm.gamma, norm.beta, norm.eps)?;
            Ok((v, Some(stats)))
        }
        (NormKind::Batch, Mode::Eval) => {
            let v = tape.batch_norm_fixed(mixed, norm.gamma, norm.beta, &norm.running.mean, &norm.running.var, norm.eps)?;
            Ok((v, None))
        }
    }
}

/// `softmax(A_hat * h * w)`.
pub fn gcn_head<'g>(tape: &mut Tape<'g>, a_hat: &'g SparseMatrix, h: Var, w: Var) -> Result<Var> {
    let hw = tape.matmul(h, w)?;
    let prop = tape.spmm(a_hat, hw)?;
    tape.row_softmax(prop)
}

/// `softmax(h * w + b)`.
pub fn mlp_head(tape: &mut Tape<'_>, h: Var, w: Var, b: Var) -> Result<Var> {
    let hw = tape.matmul(h, w)?;
    let pre = tape.add_row(hw, b)?;
    tape.row_softmax(pre)
}

/// Tape handles produced by [`forward_on_tape`].
pub struct ForwardVars {
    pub params: ParamVars,
    pub y_gcn: Var,
    pub y_fc: Var,
    pub s1: Option<Var>,
    pub s2: Option<Var>,
    pub h_c_prime: Var,
    pub h_ego_prime: Var,
    pub stats_c: Option<BatchStats>,
    pub stats_ego: Option<BatchStats>,
}

/// Records the full forward pass on `tape`.
pub fn forward_on_tape<'g>(
    tape: &mut Tape<'g>,
    input: &'g GraphInput<'g>,
    params: &ModelParams,
    config: &ModelConfig,
    mode: Mode,
) -> Result<ForwardVars> {
    let g = input.graph;
    params.validate(g.num_features(), config.hidden_dim, g.num_classes())?;
    let a_hat = &input.a_hat;
    let pv = params.on_tape(tape);
    let x = tape.constant(g.features().clone());
    let p = config.dropout;
    let seed = config.seed;

    let x_c = apply_dropout(tape, x, p, seed, mode, Site::Local)?;
    let x_e = apply_dropout(tape, x, p, seed, mode, Site::Ego)?;
    let h_c = match config.biaffine {
        BiaffineMode::EgoEgo => ego_encode(tape, x_c, pv.w1, pv.b_c)?,
        _ => local_field_encode(tape, a_hat, x_c, pv.w1, pv.b_c)?,
    };
    let h_ego = match config.biaffine {
        BiaffineMode::LocalLocal => local_field_encode(tape, a_hat, x_e, pv.theta, pv.b_theta)?,
        _ => ego_encode(tape, x_e, pv.theta, pv.b_theta)?,
    };

    let (mut s1, mut s2, mut stats_c, mut stats_ego) = (None, None, None, None);
    let (h_c_prime, h_ego_prime) = if config.biaffine == BiaffineMode::None {
        (h_c, h_ego)
    } else {
        let (a1, a2) = biaffine_scores(tape, h_c, h_ego, pv.m1, pv.m2)?;
        let (ha_c, ha_ego) = affine_messages(tape, a1, a2, h_ego, h_c)?;
        let norm_c = NormArgs {
            kind: config.norm,
            gamma: pv.norm_c_gamma,
            beta: pv.norm_c_beta,
            running: &params.running_c,
            eps: config.bn_eps,
        };
        let norm_ego = NormArgs {
            kind: config.norm,
            gamma: pv.norm_ego_gamma,
            beta: pv.norm_ego_beta,
            running: &params.running_ego,
            eps: config.bn_eps,
        };
        let (hc, sc) = fuse(tape, h_c, ha_c, config.fusion, &norm_c, mode)?;
        let (he, se) = fuse(tape, h_ego, ha_ego, config.fusion, &norm_ego, mode)?;
        s1 = Some(a1);
        s2 = Some(a2);
        stats_c = sc;
        stats_ego = se;
        (hc, he)
    };

    let hc_in = apply_dropout(tape, h_c_prime, p, seed, mode, Site::HeadGcn)?;
    let y_gcn = gcn_head(tape, a_hat, hc_in, pv.wc)?;
    let he_in = apply_dropout(tape, h_ego_prime, p, seed, mode, Site::HeadMlp)?;
    let y_fc = mlp_head(tape, he_in, pv.mlp_w, pv.mlp_b)?;

    Ok(ForwardVars {
        params: pv,
        y_gcn,
        y_fc,
        s1,
        s2,
        h_c_prime,
        h_ego_prime,
        stats_c,
        stats_ego,
    })
}

/// Values of a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardOutput {
    pub y_gcn: Tensor,
    pub y_fc: Tensor,
    /// Absent when the biaffine attention is disabled.
    pub s1: Option<Tensor>,
    pub s2: Option<Tensor>,
    pub h_c_prime: Tensor,
    pub h_ego_prime: Tensor,
}

pub fn forward(input: &GraphInput<'_>, params: &ModelParams, config: &ModelConfig, mode: Mode) -> Result<ForwardOutput> {
    let mut tape = Tape::new();
    let fv = forward_on_tape(&mut tape, input, params, config, mode)?;
    Ok(ForwardOutput {
        y_gcn: tape.value(fv.y_gcn).clone(),
        y_fc: tape.value(fv.y_fc).clone(),
        s1: fv.s1.map(|v| tape.value(v).clone()),
        s2: fv.s2.map(|v| tape.value(v).clone()),
        h_c_prime: tape.value(fv.h_c_prime).clone(),
        h_ego_prime: tape.value(fv.h_ego_prime).clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SplitMasks;

    fn two_node_graph() -> Graph {
        let masks = SplitMasks {
            train: vec![0],
            ..Default::default()
        };
        Graph::new("pair", vec![(0, 1)], Tensor::eye(2), vec![0, 1], 2, masks).unwrap()
    }

    #[test]
    fn local_field_identity_and_pair() {
        let x = Tensor::from_rows(&[[0.5, 2.0], [1.0, 0.0], [3.0, 1.5]]);
        let eye = SparseMatrix::identity(3);
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let w = tape.param(Tensor::eye(2));
        let b = tape.param(Tensor::zeros(1, 2));
        let h = local_field_encode(&mut tape, &eye, xv, w, b).unwrap();
        assert_eq!(tape.value(h), &x);

        let g = two_node_graph();
        let a = normalize_adjacency(&g);
        let mut tape = Tape::new();
        let xv = tape.constant(Tensor::eye(2));
        let w = tape.param(Tensor::eye(2));
        let b = tape.param(Tensor::zeros(1, 2));
        let h = local_field_encode(&mut tape, &a, xv, w, b).unwrap();
        assert_eq!(tape.value(h), &Tensor::filled(2, 2, 0.5));
    }

    #[test]
    fn ego_identity_and_saturation() {
        let x = Tensor::from_rows(&[[0.5, 2.0], [1.0, 0.0]]);
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let t = tape.param(Tensor::eye(2));
        let b = tape.param(Tensor::zeros(1, 2));
        let h = ego_encode(&mut tape, xv, t, b).unwrap();
        assert_eq!(tape.value(h), &x);
        let neg = tape.param(Tensor::filled(1, 2, -1e6));
        let h = ego_encode(&mut tape, xv, t, neg).unwrap();
        assert_eq!(tape.value(h), &Tensor::zeros(2, 2));
    }

    #[test]
    fn biaffine_single_node_and_zero_metric() {
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::from_rows(&[[0.3, -1.0]]));
        let m = tape.param(Tensor::eye(2));
        let (s1, s2) = biaffine_scores(&mut tape, h, h, m, m).unwrap();
        assert_eq!(tape.value(s1), &Tensor::from_rows(&[[1.0]]));
        assert_eq!(tape.value(s2), &Tensor::from_rows(&[[1.0]]));

        let hc = tape.constant(Tensor::from_rows(&[[1.0, 2.0], [0.5, 0.1], [3.0, 0.0], [0.2, 0.2]]));
        let he = tape.constant(Tensor::from_rows(&[[0.0, 1.0], [2.0, 0.3], [1.0, 1.0], [0.7, 0.0]]));
        let zero = tape.param(Tensor::zeros(2, 2));
        let (s1, _) = biaffine_scores(&mut tape, hc, he, zero, m).unwrap();
        assert!(tape.value(s1).data().iter().all(|&v| (v - 0.25).abs() < 1e-15));

        let bad = tape.constant(Tensor::zeros(3, 2));
        assert!(biaffine_scores(&mut tape, hc, bad, m, m).is_err());
    }

    #[test]
    fn biaffine_sharpens_to_identity() {
        // softmax row i of c*I: diagonal = e^c / (e^c + 2)
        let c = 40.0;
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::eye(3));
        let m = tape.param(Tensor::eye(3).map(|v| v * c));
        let (s1, _) = biaffine_scores(&mut tape, h, h, m, m).unwrap();
        let diag = 1.0 / (1.0 + 2.0 * (-c).exp());
        assert!(tape.value(s1).max_abs_diff(&Tensor::eye(3)) < 1e-15);
        assert!((tape.value(s1).get(0, 0) - diag).abs() < 1e-15);
    }

    #[test]
    fn affine_message_cases() {
        let h_ego = Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 9.0]]);
        let mut tape = Tape::new();
        let he = tape.constant(h_ego.clone());
        let eye = tape.constant(Tensor::eye(3));
        let (a, _) = affine_messages(&mut tape, eye, eye, he, he).unwrap();
        assert_eq!(tape.value(a), &h_ego);
        let uni = tape.constant(Tensor::filled(3, 3, 1.0 / 3.0));
        let (a, _) = affine_messages(&mut tape, uni, uni, he, he).unwrap();
        for r in 0..3 {
            assert!((tape.value(a).get(r, 0) - 3.0).abs() < 1e-14);
            assert!((tape.value(a).get(r, 1) - 5.0).abs() < 1e-14);
        }
    }

    #[test]
    fn fuse_neutral_elements() {
        let h = Tensor::from_rows(&[[1.0, -2.0], [0.5, 3.0], [2.0, 2.0]]);
        let running = RunningStats::new(2);
        let mut tape = Tape::new();
        let hv = tape.constant(h.clone());
        let zero = tape.constant(Tensor::zeros(3, 2));
        let one = tape.constant(Tensor::ones(3, 2));
        let gamma = tape.param(Tensor::ones(1, 2));
        let beta = tape.param(Tensor::zeros(1, 2));
        let mode = Mode::Train { epoch: 0 };
        for kind in [NormKind::Batch, NormKind::RowL2] {
            let norm = NormArgs {
                kind,
                gamma,
                beta,
                running: &running,
                eps: 1e-5,
            };
            let (direct, _) = fuse(&mut tape, hv, zero, Fusion::Add, &norm, mode).unwrap();
            let (prod, _) = fuse(&mut tape, hv, one, Fusion::Mul, &norm, mode).unwrap();
            assert_eq!(tape.value(direct), tape.value(prod));
            if kind == NormKind::RowL2 {
                let v = tape.value(direct);
                for r in 0..3 {
                    let norm: f64 = v.row(r).iter().map(|x| x * x).sum::<f64>().sqrt();
                    assert!((norm - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gcn_head_cases() {
        let g = two_node_graph();
        let a = normalize_adjacency(&g);
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::from_rows(&[[1.0, 2.0], [-1.0, 0.5]]));
        let w = tape.param(Tensor::zeros(2, 3));
        let y = gcn_head(&mut tape, &a, h, w).unwrap();
        assert!(tape.value(y).data().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));

        let one = SparseMatrix::identity(1);
        let h = tape.constant(Tensor::from_rows(&[[1.0]]));
        let w = tape.param(Tensor::from_rows(&[[1f64.ln(), 3f64.ln()]]));
        let y = gcn_head(&mut tape, &one, h, w).unwrap();
        assert!((tape.value(y).get(0, 0) - 0.25).abs() < 1e-15);
        assert!((tape.value(y).get(0, 1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mlp_head_zero_weights_uniform() {
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::from_rows(&[[1.0, 2.0], [-1.0, 0.5]]));
        let w = tape.param(Tensor::zeros(2, 4));
        let b = tape.param(Tensor::zeros(1, 4));
        let y = mlp_head(&mut tape, h, w, b).unwrap();
        assert!(tape.value(y).data().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let bad = [
            ModelConfig {
                dropout: 1.0,
                ..Default::default()
            },
            ModelConfig {
                temperature: 0.0,
                ..Default::default()
            },
            ModelConfig {
                lambda: -1.0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
        assert_eq!("ego_local".parse::<BiaffineMode>().unwrap(), BiaffineMode::EgoLocal);
        assert_eq!(BiaffineMode::LocalLocal.to_string(), "local_local");
        assert!("sideways".parse::<Fusion>().is_err());
    }

    #[test]
    fn weight_decay_partition() {
        let p = ModelParams::init(3, 2, 2, 0);
        let decayed: Vec<&str> = p.tensors().into_iter().map(|(n, _)| n).filter(|n| ModelParams::decays(n)).collect();
        assert_eq!(decayed, vec!["w1", "theta", "m1", "m2", "wc", "mlp_w"]);
    }
}
