//! Every architectural variant against the full model, three seeds each,
//! trained in parallel (`BAGCN_THREADS` caps the worker count).

use bagcn::graph::{gen_synthetic_clusters, SyntheticSpec};
use bagcn::train::{run_ablation, worker_count, Variant};
use bagcn::ModelConfig;

fn main() -> bagcn::Result<()> {
    let g = gen_synthetic_clusters(&SyntheticSpec::barbell(1))?.graph;
    let base = ModelConfig {
        hidden_dim: 32,
        epochs: 60,
        ..Default::default()
    };
    let variants = [
        Variant::Full,
        Variant::WithoutCl,
        Variant::WithoutBa,
        Variant::WithoutS,
        Variant::Cl2,
        Variant::EgoToEgo,
        Variant::LocToLoc,
    ];
    let table = run_ablation(&g, &base, &variants, 3, worker_count())?;
    print!("{}", table.to_text());
    Ok(())
}
