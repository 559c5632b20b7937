//! Reference models built from the same kernels, initializer streams and
//! dropout sites as the main model: a two-layer GCN and a two-layer MLP.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{self, apply_dropout, glorot, GraphInput, Mode, ParamSet, Site, Stream};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Gcn2,
    Mlp2,
}

impl FromStr for BaselineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcn2" => Ok(BaselineKind::Gcn2),
            "mlp2" | "mlp" => Ok(BaselineKind::Mlp2),
            _ => Err(Error::Config(format!("unknown baseline {s:?}"))),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Gcn2 => "gcn2",
            BaselineKind::Mlp2 => "mlp2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn new(kind: BaselineKind) -> Self {
        BaselineConfig {
            kind,
            hidden_dim: 64,
            dropout: 0.5,
            lr: 0.01,
            weight_decay: 5e-4,
            epochs: 200,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || !(0.0..1.0).contains(&self.dropout) || !(self.lr > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!("invalid baseline config {self:?}")));
        }
        Ok(())
    }
}

/// Two dense layers plus biases. For `gcn2` the output layer has no bias
/// and `b1` stays a `1 x 0` placeholder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub w0: Tensor,
    pub b0: Tensor,
    pub w1: Tensor,
    pub b1: Tensor,
}

impl BaselineParams {
    /// `gcn2` draws its layers from the same streams as the main model's
    /// local-field encoder and GCN head, so equal seeds give equal weights.
    pub fn init(kind: BaselineKind, f: usize, d: usize, c: usize, seed: u64) -> Self {
        match kind {
            BaselineKind::Gcn2 => BaselineParams {
                w0: glorot(f, d, seed, Stream::W1),
                b0: Tensor::zeros(1, d),
                w1: glorot(d, c, seed, Stream::Wc),
                b1: Tensor::zeros(1, 0),
            },
            BaselineKind::Mlp2 => BaselineParams {
                w0: glorot(f, d, seed, Stream::Theta),
                b0: Tensor::zeros(1, d),
                w1: glorot(d, c, seed, Stream::MlpW),
                b1: Tensor::zeros(1, c),
            },
        }
    }

    pub fn for_graph(g: &Graph, config: &BaselineConfig) -> Self {
        Self::init(config.kind, g.num_features(), config.hidden_dim, g.num_classes(), config.seed)
    }

    fn validate(&self, kind: BaselineKind, f: usize, c: usize) -> Result<()> {
        let d = self.w0.cols();
        let b1 = if kind == BaselineKind::Gcn2 { (1, 0) } else { (1, c) };
        let ok = self.w0.rows() == f && self.b0.shape() == (1, d) && self.w1.shape() == (d, c) && self.b1.shape() == b1;
        if !ok {
            return Err(Error::shape("baseline params", (f, c), self.w0.shape()));
        }
        Ok(())
    }
}

impl ParamSet for BaselineParams {
    fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        vec![("w0", &self.w0), ("b0", &self.b0), ("w1", &self.w1), ("b1", &self.b1)]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![("w0", &mut self.w0), ("b0", &mut self.b0), ("w1", &mut self.w1), ("b1", &mut self.b1)]
    }
}

/// Output probabilities plus the tape handles of the parameters, in
/// [`ParamSet::tensors`] order.
pub struct BaselineVars {
    pub y: Var,
    pub params: [Var; 4],
}

/// `softmax(A_hat * ReLU(A_hat * x * w0 + b0) * w1)`.
pub fn gcn2_on_tape<'g>(
    tape: &mut Tape<'g>,
    input: &'g GraphInput<'g>,
    params: &BaselineParams,
    dropout: f64,
    seed: u64,
    mode: Mode,
) -> Result<BaselineVars> {
    let g = input.graph;
    params.validate(BaselineKind::Gcn2, g.num_features(), g.num_classes())?;
    let vars = register(tape, params);
    let x = tape.constant(g.features().clone());
    let x = apply_dropout(tape, x, dropout, seed, mode, Site::Local)?;
    let h = model::local_field_encode(tape, &input.a_hat, x, vars[0], vars[1])?;
    let h = apply_dropout(tape, h, dropout, seed, mode, Site::HeadGcn)?;
    let y = model::gcn_head(tape, &input.a_hat, h, vars[2])?;
    Ok(BaselineVars { y, params: vars })
}

/// `softmax(ReLU(x * w0 + b0) * w1 + b1)`.
pub fn mlp2_on_tape(
    tape: &mut Tape<'_>,
    features: &Tensor,
    params: &BaselineParams,
    dropout: f64,
    seed: u64,
    mode: Mode,
) -> Result<BaselineVars> {
    params.validate(BaselineKind::Mlp2, features.cols(), params.w1.cols())?;
    let vars = register(tape, params);
    let x = tape.constant(features.clone());
    let x = apply_dropout(tape, x, dropout, seed, mode, Site::Ego)?;
    let h = model::ego_encode(tape, x, vars[0], vars[1])?;
    let h = apply_dropout(tape, h, dropout, seed, mode, Site::HeadMlp)?;
    let y = model::mlp_head(tape, h, vars[2], vars[3])?;
    Ok(BaselineVars { y, params: vars })
}

fn register(tape: &mut Tape<'_>, params: &BaselineParams) -> [Var; 4] {
    [
        tape.param(params.w0.clone()),
        tape.param(params.b0.clone()),
        tape.param(params.w1.clone()),
        tape.param(params.b1.clone()),
    ]
}

pub fn gcn2_forward(input: &GraphInput<'_>, params: &BaselineParams, dropout: f64, seed: u64, mode: Mode) -> Result<Tensor> {
    let mut tape = Tape::new();
    let out = gcn2_on_tape(&mut tape, input, params, dropout, seed, mode)?;
    Ok(tape.value(out.y).clone())
}

pub fn mlp2_forward(features: &Tensor, params: &BaselineParams, dropout: f64, seed: u64, mode: Mode) -> Result<Tensor> {
    let mut tape = Tape::new();
    let out = mlp2_on_tape(&mut tape, features, params, dropout, seed, mode)?;
    Ok(tape.value(out.y).clone())
}
