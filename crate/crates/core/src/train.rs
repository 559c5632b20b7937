//! Full-batch training with Adam, best-validation model selection, and the
//! experiment batteries built on top of it.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::{self, BaselineConfig, BaselineKind, BaselineParams};
use crate::error::{Error, Result};
use crate::graph::{make_split, Graph, SplitMasks};
use crate::model::{self, BiaffineMode, GraphInput, Mode, ModelConfig, ModelParams, ParamSet};
use crate::objective::{self, ConsistencyMode, ConsistencyOpts, LossBreakdown};
use crate::optim::AdamState;
use crate::tape::{BatchStats, Tape, Var};
use crate::tensor::Tensor;

/// One recorded training step.
pub struct Step {
    pub loss: Var,
    pub breakdown: LossBreakdown,
    /// Parameter handles in [`ParamSet::tensors`] order.
    pub params: Vec<Var>,
    pub stats: [Option<BatchStats>; 2],
}

/// Anything the training loop can optimize.
pub trait Trainable: Sync {
    type Params: ParamSet + Clone + Send;

    fn name(&self) -> String;
    fn init(&self, g: &Graph) -> Self::Params;
    fn hyper(&self) -> Hyper;
    fn step<'g>(&self, tape: &mut Tape<'g>, input: &'g GraphInput<'g>, params: &Self::Params, epoch: u64) -> Result<Step>;
    /// Post-step bookkeeping that is not gradient-based.
    fn absorb(&self, _params: &mut Self::Params, _step: &Step) {}
    /// Eval-mode class probabilities of the inference head.
    fn predict(&self, input: &GraphInput<'_>, params: &Self::Params) -> Result<Tensor>;
    fn config_json(&self) -> serde_json::Value;
}

#[derive(Clone, Copy, Debug)]
pub struct Hyper {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
}

/// Records the loss of the main model for `mode`: masked cross-entropy on
/// the GCN head plus `lambda` times the consistency term.
///
/// `frozen_target` pins the consistency target (see
/// [`objective::consistency_on_tape`]).
pub fn bagcn_loss<'g>(
    tape: &mut Tape<'g>,
    input: &'g GraphInput<'g>,
    params: &ModelParams,
    config: &ModelConfig,
    mode: Mode,
    frozen_target: Option<&Tensor>,
) -> Result<(Step, model::ForwardVars)> {
    let fv = model::forward_on_tape(tape, input, params, config, mode)?;
    let g = input.graph;
    let ce = tape.masked_nll(fv.y_gcn, g.labels(), &g.masks().train)?;
    let opts = ConsistencyOpts {
        mode: config.consistency,
        temperature: config.effective_temperature(),
        stop_gradient: config.stop_gradient,
    };
    let (loss, con_value) = if config.lambda == 0.0 {
        let yg = tape.value(fv.y_gcn);
        let yf = tape.value(fv.y_fc);
        let con = objective::consistency_loss(yg, yf, opts.temperature, opts.mode)?;
        (ce, con)
    } else {
        let con = objective::consistency_on_tape(tape, fv.y_gcn, fv.y_fc, &opts, frozen_target)?;
        let weighted = tape.scale(con, config.lambda)?;
        (tape.add(ce, weighted)?, tape.scalar(con))
    };
    let breakdown = objective::total_loss(tape.scalar(ce), con_value, config.lambda);
    let step = Step {
        loss,
        breakdown,
        params: fv.params.all().to_vec(),
        stats: [fv.stats_c.clone(), fv.stats_ego.clone()],
    };
    Ok((step, fv))
}

/// The biaffine model under a given config.
#[derive(Clone, Debug)]
pub struct Bagcn(pub ModelConfig);

impl Trainable for Bagcn {
    type Params = ModelParams;

    fn name(&self) -> String {
        format!("bagcn-{}-{}", self.0.fusion, self.0.biaffine)
    }

    fn init(&self, g: &Graph) -> ModelParams {
        ModelParams::for_graph(g, &self.0)
    }

    fn hyper(&self) -> Hyper {
        Hyper {
            lr: self.0.lr,
            weight_decay: self.0.weight_decay,
            epochs: self.0.epochs,
            seed: self.0.seed,
        }
    }

    fn step<'g>(&self, tape: &mut Tape<'g>, input: &'g GraphInput<'g>, params: &ModelParams, epoch: u64) -> Result<Step> {
        Ok(bagcn_loss(tape, input, params, &self.0, Mode::Train { epoch }, None)?.0)
    }

    fn absorb(&self, params: &mut ModelParams, step: &Step) {
        if let Some(s) = &step.stats[0] {
            params.running_c.update(s, self.0.bn_momentum);
        }
        if let Some(s) = &step.stats[1] {
            params.running_ego.update(s, self.0.bn_momentum);
        }
    }

    fn predict(&self, input: &GraphInput<'_>, params: &ModelParams) -> Result<Tensor> {
        Ok(model::forward(input, params, &self.0, Mode::Eval)?.y_gcn)
    }

    fn config_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.0).expect("config serializes")
    }
}

/// A reference model.
#[derive(Clone, Debug)]
pub struct Baseline(pub BaselineConfig);

impl Baseline {
    fn run<'g>(&self, tape: &mut Tape<'g>, input: &'g GraphInput<'g>, p: &BaselineParams, mode: Mode) -> Result<baseline::BaselineVars> {
        let c = &self.0;
        match c.kind {
            BaselineKind::Gcn2 => baseline::gcn2_on_tape(tape, input, p, c.dropout, c.seed, mode),
            BaselineKind::Mlp2 => baseline::mlp2_on_tape(tape, input.graph.features(), p, c.dropout, c.seed, mode),
        }
    }
}

impl Trainable for Baseline {
    type Params = BaselineParams;

    fn name(&self) -> String {
        self.0.kind.to_string()
    }

    fn init(&self, g: &Graph) -> BaselineParams {
        BaselineParams::for_graph(g, &self.0)
    }

    fn hyper(&self) -> Hyper {
        Hyper {
            lr: self.0.lr,
            weight_decay: self.0.weight_decay,
            epochs: self.0.epochs,
            seed: self.0.seed,
        }
    }

    fn step<'g>(&self, tape: &mut Tape<'g>, input: &'g GraphInput<'g>, params: &BaselineParams, epoch: u64) -> Result<Step> {
        let out = self.run(tape, input, params, Mode::Train { epoch })?;
        let g = input.graph;
        let ce = tape.masked_nll(out.y, g.labels(), &g.masks().train)?;
        Ok(Step {
            loss: ce,
            breakdown: objective::total_loss(tape.scalar(ce), 0.0, 0.0),
            params: out.params.to_vec(),
            stats: [None, None],
        })
    }

    fn predict(&self, input: &GraphInput<'_>, params: &BaselineParams) -> Result<Tensor> {
        let mut tape = Tape::new();
        let out = self.run(&mut tape, input, params, Mode::Eval)?;
        Ok(tape.value(out.y).clone())
    }

    fn config_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.0).expect("config serializes")
    }
}

/// Fraction of `mask` whose argmax prediction (ties to the lowest class)
/// matches the label.
pub fn accuracy(probs: &Tensor, labels: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("evaluate"));
    }
    let hits = mask.iter().filter(|&&i| probs.row_argmax(i) == labels[i]).count();
    Ok(hits as f64 / mask.len() as f64)
}

/// Eval-mode accuracy of the GCN head over `mask`.
pub fn evaluate(g: &Graph, params: &ModelParams, config: &ModelConfig, mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("evaluate"));
    }
    let input = GraphInput::new(g);
    let y = model::forward(&input, params, config, Mode::Eval)?.y_gcn;
    accuracy(&y, g.labels(), mask)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    pub ce: f64,
    pub consistency: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

/// Result of one training run. Serialized as the `report.json` document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: String,
    pub graph: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub epochs: Vec<EpochRecord>,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_acc: Option<f64>,
    pub test_acc: Option<f64>,
    pub wall_seconds: f64,
}

impl TrainReport {
    /// Same report with wall time zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> TrainReport {
        TrainReport {
            wall_seconds: 0.0,
            ..self.clone()
        }
    }
}

pub struct TrainOutcome<P> {
    pub report: TrainReport,
    /// Parameters from the best-validation epoch.
    pub params: P,
    /// Parameters after the last epoch.
    pub last_params: P,
}

/// Runs `epochs` full-batch Adam steps, keeping the parameters with the
/// best validation accuracy (earliest epoch on ties; the last epoch when the
/// validation set is empty).
pub fn train<T: Trainable>(g: &Graph, model: &T) -> Result<TrainOutcome<T::Params>> {
    train_from(g, model, model.init(g))
}

pub fn train_from<T: Trainable>(g: &Graph, model: &T, init: T::Params) -> Result<TrainOutcome<T::Params>> {
    let started = Instant::now();
    let input = GraphInput::new(g);
    let hyper = model.hyper();
    let mut params = init;
    let mut adam = AdamState::new(&params);
    let masks = g.masks();
    let mut records = Vec::with_capacity(hyper.epochs);
    let mut best: Option<(f64, usize, T::Params)> = None;
    let mut last_finite = String::from("none");

    for epoch in 0..hyper.epochs {
        let mut tape = Tape::new();
        let step = model.step(&mut tape, &input, &params, epoch as u64).map_err(|e| match e {
            Error::NonFinite { .. } => Error::Diverged {
                epoch,
                last: last_finite.clone(),
            },
            other => other,
        })?;
        let b = step.breakdown;
        if !b.total.is_finite() {
            return Err(Error::Diverged { epoch, last: last_finite });
        }
        last_finite = format!("total={} ce={} consistency={}", b.total, b.ce, b.consistency);
        let grads = tape.backward(step.loss)?;
        let grad_list: Vec<Tensor> = params
            .tensors()
            .iter()
            .zip(&step.params)
            .map(|((_, t), &v)| grads.get_or_zeros(v, t.shape()))
            .collect();
        drop(tape);
        model.absorb(&mut params, &step);
        adam.step(&mut params, &grad_list, hyper.lr, hyper.weight_decay)?;

        let probs = model.predict(&input, &params)?;
        let train_acc = accuracy(&probs, g.labels(), &masks.train)?;
        let val_acc = if masks.val.is_empty() {
            None
        } else {
            Some(accuracy(&probs, g.labels(), &masks.val)?)
        };
        records.push(EpochRecord {
            epoch,
            total: b.total,
            ce: b.ce,
            consistency: b.consistency,
            train_acc,
            val_acc,
        });
        let score = val_acc.unwrap_or(f64::NEG_INFINITY);
        let improves = match &best {
            None => true,
            Some((s, _, _)) => score > *s || (val_acc.is_none()),
        };
        if improves {
            best = Some((score, epoch, params.clone()));
        }
    }

    let (best_score, best_epoch, best_params) = best.unwrap_or((f64::NEG_INFINITY, 0, params.clone()));
    let test_acc = if masks.test.is_empty() {
        None
    } else {
        let probs = model.predict(&input, &best_params)?;
        Some(accuracy(&probs, g.labels(), &masks.test)?)
    };
    let report = TrainReport {
        model: model.name(),
        graph: g.name().to_string(),
        seed: hyper.seed,
        config: model.config_json(),
        epochs: records,
        best_epoch,
        best_val_acc: best_score.is_finite().then_some(best_score),
        test_acc,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome {
        report,
        params: best_params,
        last_params: params,
    })
}

/// Worker count: `BAGCN_THREADS` if set, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("BAGCN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `jobs` on up to `threads` workers; results keep job order.
pub fn run_parallel<R: Send>(jobs: Vec<Box<dyn FnOnce() -> R + Send + '_>>, threads: usize) -> Vec<R> {
    let n = jobs.len();
    let queue: Mutex<Vec<Option<Box<dyn FnOnce() -> R + Send + '_>>>> = Mutex::new(jobs.into_iter().map(Some).collect());
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let job = queue.lock().expect("queue lock")[i].take().expect("job taken once");
                let r = job();
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    results.into_inner().expect("results lock").into_iter().map(|r| r.expect("job ran")).collect()
}

/// Named model variants for the ablation battery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    /// Consistency weight zero.
    WithoutCl,
    /// No biaffine attention.
    WithoutBa,
    /// No sharpening (temperature 1).
    WithoutS,
    /// Pairwise consistency between the heads.
    Cl2,
    EgoToEgo,
    LocToLoc,
}

impl Variant {
    /// The six variants reported against the full model.
    pub const ABLATIONS: [Variant; 6] = [
        Variant::WithoutCl,
        Variant::WithoutBa,
        Variant::WithoutS,
        Variant::Cl2,
        Variant::EgoToEgo,
        Variant::LocToLoc,
    ];

    pub fn apply(self, base: &ModelConfig) -> ModelConfig {
        let mut c = base.clone();
        match self {
            Variant::Full => {}
            Variant::WithoutCl => c.lambda = 0.0,
            Variant::WithoutBa => c.biaffine = BiaffineMode::None,
            Variant::WithoutS => {
                c.temperature = 1.0;
                c.sharpen = false;
            }
            Variant::Cl2 => c.consistency = ConsistencyMode::Pairwise,
            Variant::EgoToEgo => c.biaffine = BiaffineMode::EgoEgo,
            Variant::LocToLoc => c.biaffine = BiaffineMode::LocalLocal,
        }
        c
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::WithoutCl => "w/o CL",
            Variant::WithoutBa => "w/o BA",
            Variant::WithoutS => "w/o S",
            Variant::Cl2 => "CL2",
            Variant::EgoToEgo => "Ego to Ego",
            Variant::LocToLoc => "Loc. to Loc.",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => Variant::Full,
            "wo_cl" | "w/o CL" => Variant::WithoutCl,
            "wo_ba" | "w/o BA" => Variant::WithoutBa,
            "wo_s" | "w/o S" => Variant::WithoutS,
            "cl2" | "CL2" => Variant::Cl2,
            "ego_ego" => Variant::EgoToEgo,
            "local_local" => Variant::LocToLoc,
            _ => return Err(Error::Config(format!("unknown variant {s:?}"))),
        })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Mean and (population) standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub label: String,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl ResultRow {
    pub fn new(label: impl Into<String>, accuracies: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&accuracies);
        ResultRow {
            label: label.into(),
            accuracies,
            mean,
            std,
        }
    }
}

/// Rows of mean ± std test accuracy, printable as TSV or aligned text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub title: String,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn row(&self, label: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label\tmean\tstd\truns\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{:.6}\t{:.6}\t{}\n", r.label, r.mean, r.std, r.accuracies.len()));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{}\n{:<width$}  {:>8}  {:>7}  {:>4}\n", self.title, "label", "mean", "std", "runs");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:>8.2}  {:>7.2}  {:>4}\n",
                r.label,
                100.0 * r.mean,
                100.0 * r.std,
                r.accuracies.len()
            ));
        }
        out
    }
}

fn test_accuracy<T: Trainable>(g: &Graph, m: &T) -> Result<f64> {
    let out = train(g, m)?;
    out.report
        .test_acc
        .ok_or_else(|| Error::Config("graph split has an empty test set".into()))
}

/// Trains each variant `repeats` times with seeds `base.seed + r`.
pub fn run_ablation(g: &Graph, base: &ModelConfig, variants: &[Variant], repeats: usize, threads: usize) -> Result<ResultTable> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    base.validate()?;
    let mut jobs: Vec<Box<dyn FnOnce() -> Result<f64> + Send + '_>> = Vec::new();
    for &v in variants {
        for r in 0..repeats {
            let mut config = v.apply(base);
            config.seed = base.seed + r as u64;
            jobs.push(Box::new(move || test_accuracy(g, &Bagcn(config))));
        }
    }
    let accs = run_parallel(jobs, threads).into_iter().collect::<Result<Vec<f64>>>()?;
    let rows = variants
        .iter()
        .zip(accs.chunks(repeats))
        .map(|(v, a)| ResultRow::new(v.label(), a.to_vec()))
        .collect();
    Ok(ResultTable {
        title: format!("ablation on {} ({} runs each)", g.name(), repeats),
        rows,
    })
}

/// Options for [`label_budget_study`].
#[derive(Clone, Debug)]
pub struct BudgetOptions {
    pub val_size: usize,
    pub test_size: usize,
    /// Also train the in-framework two-layer GCN on every split.
    pub with_gcn2: bool,
    pub threads: usize,
}

/// For each training-set size (nodes per class) regenerates a random split
/// per repeat and reports mean test accuracy. Row labels are
/// `"<model>@<per_class>"`.
pub fn label_budget_study(g: &Graph, base: &ModelConfig, per_class: &[usize], repeats: usize, opts: &BudgetOptions) -> Result<ResultTable> {
    if per_class.is_empty() {
        return Err(Error::Config("per_class list is empty".into()));
    }
    if repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    base.validate()?;
    let mut graphs = Vec::new();
    for &b in per_class {
        for r in 0..repeats {
            let seed = base.seed + r as u64;
            let masks: SplitMasks = make_split(g, b, opts.val_size, opts.test_size, seed)?;
            graphs.push(g.with_masks(masks)?);
        }
    }
    let mut jobs: Vec<Box<dyn FnOnce() -> Result<f64> + Send + '_>> = Vec::new();
    let models = if opts.with_gcn2 { 2 } else { 1 };
    for (k, split) in graphs.iter().enumerate() {
        let seed = base.seed + (k % repeats) as u64;
        let mut config = base.clone();
        config.seed = seed;
        jobs.push(Box::new(move || test_accuracy(split, &Bagcn(config))));
        if opts.with_gcn2 {
            let bc = gcn2_like(base, seed);
            jobs.push(Box::new(move || test_accuracy(split, &Baseline(bc))));
        }
    }
    let accs = run_parallel(jobs, opts.threads).into_iter().collect::<Result<Vec<f64>>>()?;
    let mut rows = Vec::new();
    for (bi, &b) in per_class.iter().enumerate() {
        let block = &accs[bi * repeats * models..(bi + 1) * repeats * models];
        let bagcn: Vec<f64> = block.iter().step_by(models).copied().collect();
        rows.push(ResultRow::new(format!("bagcn@{b}"), bagcn));
        if opts.with_gcn2 {
            let gcn: Vec<f64> = block.iter().skip(1).step_by(models).copied().collect();
            rows.push(ResultRow::new(format!("gcn2@{b}"), gcn));
        }
    }
    Ok(ResultTable {
        title: format!("label budget on {} ({} splits each)", g.name(), repeats),
        rows,
    })
}

/// Baseline config sharing the model config's optimizer settings.
pub fn gcn2_like(config: &ModelConfig, seed: u64) -> BaselineConfig {
    BaselineConfig {
        kind: BaselineKind::Gcn2,
        hidden_dim: config.hidden_dim,
        dropout: config.dropout,
        lr: config.lr,
        weight_decay: config.weight_decay,
        epochs: config.epochs,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_synthetic_clusters, SyntheticSpec};

    #[test]
    fn accuracy_cases() {
        let labels = [0, 1, 2, 0, 1];
        let mut perfect = Tensor::zeros(5, 3);
        for (i, &c) in labels.iter().enumerate() {
            perfect.set(i, c, 1.0);
        }
        assert_eq!(accuracy(&perfect, &labels, &[0, 1, 2, 3, 4]).unwrap(), 1.0);
        // uniform → every prediction is class 0
        let uniform = Tensor::filled(5, 3, 1.0 / 3.0);
        assert_eq!(accuracy(&uniform, &labels, &[0, 1, 2, 3, 4]).unwrap(), 0.4);
        assert!(accuracy(&uniform, &labels, &[]).is_err());
    }

    #[test]
    fn mean_std_basic() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }

    #[test]
    fn variants_map_to_switches() {
        let base = ModelConfig::default();
        assert_eq!(Variant::WithoutCl.apply(&base).lambda, 0.0);
        assert_eq!(Variant::WithoutBa.apply(&base).biaffine, BiaffineMode::None);
        assert_eq!(Variant::WithoutS.apply(&base).effective_temperature(), 1.0);
        assert_eq!(Variant::Cl2.apply(&base).consistency, ConsistencyMode::Pairwise);
        assert_eq!(Variant::Full.apply(&base), base);
    }

    #[test]
    fn single_variant_single_repeat_table() {
        let s = gen_synthetic_clusters(&SyntheticSpec::barbell(0)).unwrap();
        let base = ModelConfig {
            hidden_dim: 8,
            epochs: 3,
            ..Default::default()
        };
        let t = run_ablation(&s.graph, &base, &[Variant::Full], 1, 1).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].accuracies.len(), 1);
        assert_eq!(t.to_tsv().lines().count(), 2);
        assert!(run_ablation(&s.graph, &base, &[Variant::Full], 0, 1).is_err());
    }

    #[test]
    fn parallel_runner_keeps_order() {
        let jobs: Vec<Box<dyn FnOnce() -> usize + Send>> = (0..9usize).map(|i| Box::new(move || i * i) as Box<dyn FnOnce() -> usize + Send>).collect();
        assert_eq!(run_parallel(jobs, 3), vec![0, 1, 4, 9, 16, 25, 36, 49, 64]);
    }
}
