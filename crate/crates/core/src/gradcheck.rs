//! Central finite-difference check of tape gradients.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{Graph, SplitMasks};
use crate::model::{self, BiaffineMode, Fusion, GraphInput, Mode, ModelConfig, ModelParams, ParamSet};
use crate::objective;
use crate::rng;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use crate::train::bagcn_loss;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// `max |analytic - numeric| / max(1, |numeric|)` over all entries.
    pub max_rel_error: f64,
    pub worst_param: &'static str,
    pub worst_index: usize,
    pub entries: usize,
}

/// Compares the tape gradient of `build_loss` against central differences
/// with step `step`. `build_loss` records the loss on the given tape and
/// returns it with the parameter handles in [`ParamSet::tensors`] order; it
/// must be deterministic. `corrupt` scales the analytic gradient (1.0 for a
/// real check).
pub fn grad_check_with<'g, P, F>(build_loss: F, params: &P, step: f64, corrupt: f64) -> Result<GradCheckReport>
where
    P: ParamSet + Clone,
    F: Fn(&mut Tape<'g>, &P) -> Result<(Var, Vec<Var>)>,
{
    let eval = |p: &P| -> Result<f64> {
        let mut tape = Tape::new();
        let (loss, _) = build_loss(&mut tape, p)?;
        let v = tape.scalar(loss);
        if !v.is_finite() {
            return Err(Error::NonFinite { op: "grad_check loss" });
        }
        Ok(v)
    };

    let mut tape = Tape::new();
    let (loss, vars) = build_loss(&mut tape, params)?;
    if !tape.scalar(loss).is_finite() {
        return Err(Error::NonFinite { op: "grad_check loss" });
    }
    let grads = tape.backward(loss)?;
    let analytic: Vec<Tensor> = params
        .tensors()
        .iter()
        .zip(&vars)
        .map(|((_, t), &v)| grads.get_or_zeros(v, t.shape()).map(|g| g * corrupt))
        .collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: "",
        worst_index: 0,
        entries: 0,
    };
    let names: Vec<&'static str> = params.tensors().iter().map(|(n, _)| *n).collect();
    for (k, name) in names.iter().enumerate() {
        let len = params.tensors()[k].1.len();
        for i in 0..len {
            let mut plus = params.clone();
            plus.tensors_mut()[k].1.data_mut()[i] += step;
            let mut minus = params.clone();
            minus.tensors_mut()[k].1.data_mut()[i] -= step;
            let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * step);
            let err = (analytic[k].data()[i] - numeric).abs() / numeric.abs().max(1.0);
            report.entries += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_param = name;
                report.worst_index = i;
            }
        }
    }
    Ok(report)
}

pub fn grad_check<'g, P, F>(build_loss: F, params: &P, step: f64) -> Result<GradCheckReport>
where
    P: ParamSet + Clone,
    F: Fn(&mut Tape<'g>, &P) -> Result<(Var, Vec<Var>)>,
{
    grad_check_with(build_loss, params, step, 1.0)
}

/// The six architecture variants exercised by [`check_variant`].
pub const VARIANTS: [(Fusion, BiaffineMode); 6] = [
    (Fusion::Add, BiaffineMode::EgoLocal),
    (Fusion::Add, BiaffineMode::EgoEgo),
    (Fusion::Add, BiaffineMode::LocalLocal),
    (Fusion::Mul, BiaffineMode::EgoLocal),
    (Fusion::Mul, BiaffineMode::EgoEgo),
    (Fusion::Mul, BiaffineMode::LocalLocal),
];

/// A random 12-node graph with 7 standard-normal features and 3 classes;
/// six nodes are labeled for training.
pub fn fixture_graph(seed: u64) -> Graph {
    let (n, f, c) = (12, 7, 3);
    let mut r = rng::stream(seed, rng::DOMAIN_FIXTURE, 0, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random::<f64>() < 0.3 {
                edges.push((u, v));
            }
        }
    }
    let data = (0..n * f).map(|_| StandardNormal.sample(&mut r)).collect();
    let features = Tensor::from_vec(n, f, data).expect("fixture shape");
    let labels = (0..n).map(|i| if i < c { i } else { r.random_range(0..c) }).collect();
    let masks = SplitMasks {
        train: (0..6).collect(),
        val: (6..9).collect(),
        test: (9..12).collect(),
    };
    Graph::new("fixture", edges, features, labels, c, masks).expect("fixture is valid")
}

/// Model config used by the fixture checks: hidden width 5, training mode
/// with dropout, the default loss.
pub fn fixture_config(fusion: Fusion, biaffine: BiaffineMode, seed: u64) -> ModelConfig {
    ModelConfig {
        hidden_dim: 5,
        fusion,
        biaffine,
        seed,
        ..Default::default()
    }
}

/// Initial parameters with biases and normalization shifts drawn from
/// `N(0, 0.1)`. Zero biases put every dropped-out feature row exactly on the
/// ReLU kink, where central differences disagree with any subgradient.
pub fn fixture_params(g: &Graph, config: &ModelConfig) -> ModelParams {
    let mut p = ModelParams::for_graph(g, config);
    let mut r = rng::stream(config.seed, rng::DOMAIN_FIXTURE, 1, 0);
    for (name, t) in p.tensors_mut() {
        if name.starts_with('b') || name.ends_with("beta") {
            for v in t.data_mut() {
                *v = 0.1 * Distribution::<f64>::sample(&StandardNormal, &mut r);
            }
        }
    }
    p
}

/// Gradient check of the full training loss for one variant on
/// [`fixture_graph`]. With a detached consistency target the target is
/// computed once at the unperturbed parameters and held fixed.
pub fn check_config(g: &Graph, config: &ModelConfig, step: f64, corrupt: f64) -> Result<GradCheckReport> {
    let input = GraphInput::new(g);
    let params = fixture_params(g, config);
    let mode = Mode::Train { epoch: 0 };
    let frozen = if config.stop_gradient && config.lambda != 0.0 {
        let out = model::forward(&input, &params, config, mode)?;
        Some(objective::consistency_target(&out.y_gcn, &out.y_fc, config.effective_temperature())?)
    } else {
        None
    };
    grad_check_with(
        |tape, p| {
            let (step, _) = bagcn_loss(tape, &input, p, config, mode, frozen.as_ref())?;
            Ok((step.loss, step.params))
        },
        &params,
        step,
        corrupt,
    )
}

pub fn check_variant(fusion: Fusion, biaffine: BiaffineMode, seed: u64, corrupt: f64) -> Result<GradCheckReport> {
    let g = fixture_graph(seed);
    check_config(&g, &fixture_config(fusion, biaffine, seed), 1e-6, corrupt)
}
