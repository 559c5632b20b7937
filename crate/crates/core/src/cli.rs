//! Command-line front end. Every command that produces files writes them to
//! a fresh staging directory next to `--out` and renames it into place only
//! on success, together with a `manifest.json` describing the run.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis;
use crate::baseline::{BaselineConfig, BaselineKind};
use crate::checkpoint::{self, Checkpoint, CheckpointHeader};
use crate::error::{Error, Result};
use crate::gradcheck;
use crate::graph::{self, gen_synthetic_clusters, Graph, SyntheticSpec};
use crate::model::{self, BiaffineMode, Fusion, GraphInput, Mode, ModelConfig, NormKind};
use crate::objective::ConsistencyMode;
use crate::train::{self, Bagcn, Baseline, BudgetOptions, Trainable, Variant};

#[derive(Parser, Debug)]
#[command(name = "bagcn", version, about = "Biaffine shortcut-attention GCN experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train one model and write report.json plus a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a split of a bundle.
    Eval(EvalArgs),
    /// Finite-difference gradient check of every architecture variant.
    Gradcheck(GradcheckArgs),
    /// Train the ablation variants and tabulate test accuracy.
    Ablate(AblateArgs),
    /// Test accuracy as a function of labeled nodes per class.
    Budget(BudgetArgs),
    /// Shortcut, receptive-field and ego-graph analysis of a checkpoint.
    Analyze(AnalyzeArgs),
    /// Write a synthetic disconnected-cluster bundle.
    Gensynth(GensynthArgs),
}

/// Model switches. Unset flags fall back to `--config`, then defaults.
#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct ModelFlags {
    /// JSON file with model config fields; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub fusion: Option<Fusion>,
    #[arg(long)]
    pub biaffine: Option<BiaffineMode>,
    #[arg(long)]
    pub norm: Option<NormKind>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Disable sharpening of the consistency target.
    #[arg(long)]
    pub no_sharpen: bool,
    #[arg(long)]
    pub consistency: Option<ConsistencyMode>,
    /// Let gradients flow through the sharpened target.
    #[arg(long)]
    pub attached_target: bool,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ModelFlags {
    pub fn resolve(&self) -> Result<ModelConfig> {
        let mut value = serde_json::to_value(ModelConfig::default())?;
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)?;
            let overlay: Value = serde_json::from_str(&text)?;
            let Value::Object(fields) = overlay else {
                return Err(Error::Config(format!("{}: expected a JSON object", path.display())));
            };
            let target = value.as_object_mut().expect("config is an object");
            for (k, v) in fields {
                if !target.contains_key(&k) {
                    return Err(Error::Config(format!("{}: unknown config field {k:?}", path.display())));
                }
                target.insert(k, v);
            }
        }
        let mut c: ModelConfig = serde_json::from_value(value)?;
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => { $(if let Some(v) = self.$flag { c.$field = v; })* };
        }
        set!(hidden => hidden_dim, fusion => fusion, biaffine => biaffine, norm => norm, dropout => dropout,
             lambda => lambda, temperature => temperature, consistency => consistency, lr => lr,
             weight_decay => weight_decay, epochs => epochs, seed => seed);
        if self.no_sharpen {
            c.sharpen = false;
        }
        if self.attached_target {
            c.stop_gradient = false;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DataArgs {
    /// Bundle directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Scale every feature row to sum to one before training.
    #[arg(long)]
    pub normalize_features: bool,
}

impl DataArgs {
    pub fn load(&self) -> Result<Graph> {
        let g = graph::load_bundle(&self.data)?;
        Ok(if self.normalize_features { g.row_normalized() } else { g })
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutFlags {
    /// Output directory; must not exist unless --force is given.
    #[arg(long)]
    pub out: PathBuf,
    /// Replace an existing output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// bagcn, gcn2 or mlp2.
    #[arg(long, default_value = "bagcn")]
    pub model: String,
    #[command(flatten)]
    pub flags: ModelFlags,
    #[command(flatten)]
    pub out: OutFlags,
    /// Also write the learned dependency matrices as s1.bin and s2.bin.
    #[arg(long)]
    pub save_attention: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Directory written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Bundle directory; defaults to the one recorded with the checkpoint.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// With --data: row-normalize features (otherwise taken from the run).
    #[arg(long)]
    pub normalize_features: bool,
    /// train, val or test.
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Args, Debug, Serialize)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `inject` scales analytic gradients by 1.01 so the check must fail.
    #[arg(long, default_value = "none")]
    pub fault: String,
    #[arg(long, default_value_t = 1e-6)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct AblateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[command(flatten)]
    pub flags: ModelFlags,
    #[command(flatten)]
    pub out: OutFlags,
}

#[derive(Args, Debug, Serialize)]
pub struct BudgetArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated labeled nodes per class.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 5, 10, 20])]
    pub per_class: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 500)]
    pub val_size: usize,
    #[arg(long, default_value_t = 1000)]
    pub test_size: usize,
    /// Skip the two-layer GCN reference runs.
    #[arg(long)]
    pub no_gcn2: bool,
    #[command(flatten)]
    pub flags: ModelFlags,
    #[command(flatten)]
    pub out: OutFlags,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    /// Directory written by `train` (main model only).
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub normalize_features: bool,
    #[arg(long)]
    pub node: usize,
    #[arg(long, default_value_t = 5)]
    pub topk: usize,
    #[arg(long, default_value_t = 3)]
    pub exclude_hops: usize,
    /// Radius of the exported ego graph.
    #[arg(long, default_value_t = 3)]
    pub hops: usize,
    /// Support threshold for the receptive-field count; default 1/(10n).
    #[arg(long)]
    pub eps: Option<f64>,
    #[command(flatten)]
    pub out: OutFlags,
}

#[derive(Args, Debug, Serialize)]
pub struct GensynthArgs {
    #[arg(long, default_value = "barbell")]
    pub preset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub nodes_per_cluster: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[command(flatten)]
    pub out: OutFlags,
}

/// Provenance written into every output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub flags: Value,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    pub version: String,
}

impl RunManifest {
    fn new(command: &str, flags: &impl Serialize, data: Option<&Path>, out: &Path, seeds: Vec<u64>) -> Result<Self> {
        Ok(RunManifest {
            command: command.into(),
            flags: serde_json::to_value(flags)?,
            data: data.map(absolute),
            out: out.to_path_buf(),
            seeds,
            version: env!("CARGO_PKG_VERSION").into(),
        })
    }
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Staging directory that becomes `out` on [`Staged::commit`] and is
/// removed if dropped before that.
struct Staged {
    tmp: PathBuf,
    out: PathBuf,
    force: bool,
    done: bool,
}

impl Staged {
    fn new(o: &OutFlags) -> Result<Self> {
        if o.out.exists() && !o.force {
            return Err(Error::Config(format!("{} exists; pass --force to replace it", o.out.display())));
        }
        let name = o.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
        let parent = o.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent)?;
        let tmp = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir(&tmp)?;
        Ok(Staged {
            tmp,
            out: o.out.clone(),
            force: o.force,
            done: false,
        })
    }

    fn path(&self, file: &str) -> PathBuf {
        self.tmp.join(file)
    }

    fn write(&self, file: &str, text: &str) -> Result<()> {
        fs::write(self.path(file), text)?;
        Ok(())
    }

    fn write_json(&self, file: &str, v: &impl Serialize) -> Result<()> {
        self.write(file, &(serde_json::to_string_pretty(v)? + "\n"))
    }

    fn commit(mut self, manifest: &RunManifest) -> Result<()> {
        self.write_json("manifest.json", manifest)?;
        if self.out.exists() && self.force {
            fs::remove_dir_all(&self.out)?;
        }
        fs::rename(&self.tmp, &self.out)?;
        self.done = true;
        Ok(())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        if !self.done {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a),
        Command::Ablate(a) => cmd_ablate(&a),
        Command::Budget(a) => cmd_budget(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Gensynth(a) => cmd_gensynth(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn baseline_config(kind: BaselineKind, c: &ModelConfig) -> BaselineConfig {
    let mut b = train::gcn2_like(c, c.seed);
    b.kind = kind;
    b
}

pub fn cmd_train(a: &TrainArgs) -> Result<i32> {
    let config = a.flags.resolve()?;
    let g = a.data.load()?;
    let kind = match a.model.as_str() {
        "bagcn" => None,
        other => Some(other.parse::<BaselineKind>()?),
    };
    let staged = Staged::new(&a.out)?;
    let report = match kind {
        None => {
            let out = train::train(&g, &Bagcn(config.clone()))?;
            Checkpoint::from_model(&config, g.name(), &out.params).save(staged.path("model.ckpt"))?;
            if a.save_attention {
                let fwd = model::forward(&GraphInput::new(&g), &out.params, &config, Mode::Eval)?;
                if let (Some(s1), Some(s2)) = (fwd.s1, fwd.s2) {
                    checkpoint::save_matrix(&s1, staged.path("s1.bin"))?;
                    checkpoint::save_matrix(&s2, staged.path("s2.bin"))?;
                }
            }
            out.report
        }
        Some(kind) => {
            let bc = baseline_config(kind, &config);
            bc.validate()?;
            let out = train::train(&g, &Baseline(bc.clone()))?;
            Checkpoint::from_baseline(&bc, g.name(), &out.params).save(staged.path("model.ckpt"))?;
            out.report
        }
    };
    staged.write_json("report.json", &report)?;
    staged.commit(&RunManifest::new("train", a, Some(&a.data.data), &a.out.out, vec![config.seed])?)?;
    match report.test_acc {
        Some(acc) => println!("test accuracy {acc:.4} (best epoch {})", report.best_epoch),
        None => println!("no test nodes; best epoch {}", report.best_epoch),
    }
    Ok(0)
}

/// The data a checkpoint directory was trained on, unless overridden.
fn recorded_data(dir: &Path, explicit: &Option<PathBuf>, normalize_features: bool) -> Result<DataArgs> {
    if let Some(d) = explicit {
        return Ok(DataArgs {
            data: d.clone(),
            normalize_features,
        });
    }
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    let m: RunManifest = serde_json::from_str(&text)?;
    let data = m
        .data
        .ok_or_else(|| Error::Config("checkpoint manifest records no data path; pass --data".into()))?;
    Ok(DataArgs {
        data,
        normalize_features: m.flags["data"]["normalize_features"].as_bool().unwrap_or(false),
    })
}

pub fn cmd_eval(a: &EvalArgs) -> Result<i32> {
    let ck = Checkpoint::load(a.checkpoint.join("model.ckpt"))?;
    let g = recorded_data(&a.checkpoint, &a.data, a.normalize_features)?.load()?;
    let mask = match a.split.as_str() {
        "train" => &g.masks().train,
        "val" => &g.masks().val,
        "test" => &g.masks().test,
        other => return Err(Error::Config(format!("unknown split {other:?}"))),
    };
    let input = GraphInput::new(&g);
    let probs = match &ck.header {
        CheckpointHeader::Bagcn { .. } => {
            let (c, p) = ck.model_params()?;
            Bagcn(c).predict(&input, &p)?
        }
        CheckpointHeader::Baseline { .. } => {
            let (c, p) = ck.baseline_params()?;
            Baseline(c).predict(&input, &p)?
        }
    };
    let acc = train::accuracy(&probs, g.labels(), mask)?;
    println!("{} accuracy {acc:.4} ({} nodes)", a.split, mask.len());
    Ok(0)
}

/// Prints one line per variant; exit 0 when all pass, 2 otherwise.
pub fn cmd_gradcheck(a: &GradcheckArgs) -> Result<i32> {
    let corrupt = match a.fault.as_str() {
        "none" => 1.0,
        "inject" => 1.01,
        other => return Err(Error::Config(format!("unknown fault mode {other:?}"))),
    };
    let g = gradcheck::fixture_graph(a.seed);
    let mut ok = true;
    for (fusion, biaffine) in gradcheck::VARIANTS {
        let config = gradcheck::fixture_config(fusion, biaffine, a.seed);
        let r = gradcheck::check_config(&g, &config, a.step, corrupt)?;
        let pass = r.max_rel_error < a.tolerance;
        ok &= pass;
        println!(
            "{fusion}/{biaffine}: max relative error {:.3e} at {}[{}] {}",
            r.max_rel_error,
            r.worst_param,
            r.worst_index,
            if pass { "ok" } else { "FAIL" }
        );
    }
    Ok(if ok { 0 } else { 2 })
}

pub fn cmd_ablate(a: &AblateArgs) -> Result<i32> {
    let config = a.flags.resolve()?;
    if a.repeats == 0 {
        return Err(Error::Config("--repeats must be >= 1".into()));
    }
    let g = a.data.load()?;
    let staged = Staged::new(&a.out)?;
    let threads = train::worker_count();
    let full = train::run_ablation(&g, &config, &[Variant::Full], a.repeats, threads)?;
    let table = train::run_ablation(&g, &config, &Variant::ABLATIONS, a.repeats, threads)?;
    staged.write("ablation.tsv", &table.to_tsv())?;
    staged.write("ablation.txt", &table.to_text())?;
    staged.write_json("ablation.json", &serde_json::json!({ "full": full.rows[0], "variants": table }))?;
    let seeds = (0..a.repeats as u64).map(|r| config.seed + r).collect();
    staged.commit(&RunManifest::new("ablate", a, Some(&a.data.data), &a.out.out, seeds)?)?;
    print!("{}", full.to_text());
    print!("{}", table.to_text());
    Ok(0)
}

pub fn cmd_budget(a: &BudgetArgs) -> Result<i32> {
    let config = a.flags.resolve()?;
    if a.per_class.is_empty() || a.repeats == 0 {
        return Err(Error::Config("--per-class and --repeats must be non-empty and positive".into()));
    }
    let g = a.data.load()?;
    let staged = Staged::new(&a.out)?;
    let opts = BudgetOptions {
        val_size: a.val_size,
        test_size: a.test_size,
        with_gcn2: !a.no_gcn2,
        threads: train::worker_count(),
    };
    let table = train::label_budget_study(&g, &config, &a.per_class, a.repeats, &opts)?;
    staged.write("budget.tsv", &table.to_tsv())?;
    staged.write("budget.txt", &table.to_text())?;
    staged.write_json("budget.json", &table)?;
    let seeds = (0..a.repeats as u64).map(|r| config.seed + r).collect();
    staged.commit(&RunManifest::new("budget", a, Some(&a.data.data), &a.out.out, seeds)?)?;
    print!("{}", table.to_text());
    Ok(0)
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<i32> {
    let ck = Checkpoint::load(a.checkpoint.join("model.ckpt"))?;
    let (config, params) = ck.model_params()?;
    let data = recorded_data(&a.checkpoint, &a.data, a.normalize_features)?;
    let g = data.load()?;
    g.check_node(a.node)?;
    let fwd = model::forward(&GraphInput::new(&g), &params, &config, Mode::Eval)?;
    let s1 = fwd
        .s1
        .ok_or_else(|| Error::Config("model has no biaffine attention to analyze".into()))?;
    let eps = a.eps.unwrap_or_else(|| analysis::default_eps(g.n()));
    let set = analysis::topk_shortcuts(&s1, a.node, a.topk, Some(a.exclude_hops), &g)?;
    let dot = analysis::export_ego_graph(&g, a.node, a.hops, Some(&set))?;
    let rf = analysis::receptive_field_stats(&s1, &g, eps)?;
    let degrees = analysis::shortcut_degree_table(&s1, &g, a.exclude_hops, eps)?;

    let staged = Staged::new(&a.out)?;
    staged.write(&format!("ego_{}.dot", a.node), &dot)?;
    staged.write_json("shortcuts.json", &set)?;
    let mut tsv = String::from("node\tm\tm_prime\tdegree\trelative_degree\tshortcuts\n");
    for (i, d) in degrees.iter().enumerate() {
        tsv.push_str(&format!("{i}\t{}\t{}\t{}\t{:.6}\t{}\n", rf.m[i], rf.m_prime[i], d.degree, d.relative_degree, d.shortcuts));
    }
    staged.write("receptive_field.tsv", &tsv)?;
    staged.commit(&RunManifest::new("analyze", a, Some(&data.data), &a.out.out, vec![config.seed])?)?;
    println!(
        "node {}: top shortcut {:?}; mean m {:.2} vs mean m' {:.2} at eps {eps:.3e}",
        a.node,
        set.entries.first(),
        rf.mean_m,
        rf.mean_m_prime
    );
    Ok(0)
}

pub fn cmd_gensynth(a: &GensynthArgs) -> Result<i32> {
    let mut spec = match a.preset.as_str() {
        "barbell" => SyntheticSpec::barbell(a.seed),
        other => return Err(Error::Config(format!("unknown preset {other:?}"))),
    };
    if let Some(v) = a.clusters {
        spec.clusters = v;
    }
    if let Some(v) = a.nodes_per_cluster {
        spec.nodes_per_cluster = v;
    }
    if let Some(v) = a.classes {
        spec.classes = v;
    }
    let s = gen_synthetic_clusters(&spec)?;
    let staged = Staged::new(&a.out)?;
    graph::save_bundle(&s.graph, &staged.tmp)?;
    staged.write_json("clusters.json", &s.cluster_of)?;
    staged.commit(&RunManifest::new("gensynth", a, None, &a.out.out, vec![a.seed])?)?;
    println!("wrote {} ({} nodes, {} edges)", a.out.out.display(), s.graph.n(), s.graph.edges().len());
    Ok(0)
}

/// Loads a bundle written by `gensynth`, with its cluster assignment.
pub fn load_synthetic(dir: impl AsRef<Path>) -> Result<(Graph, Vec<usize>)> {
    let dir = dir.as_ref();
    let g = graph::load_bundle(dir)?;
    let clusters: Vec<usize> = serde_json::from_str(&fs::read_to_string(dir.join("clusters.json"))?)?;
    Ok((g, clusters))
}
