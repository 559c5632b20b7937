//! Test accuracy as the number of labeled nodes per class grows, with the
//! two-layer GCN alongside.

use bagcn::graph::{gen_synthetic_clusters, SyntheticSpec};
use bagcn::train::{label_budget_study, worker_count, BudgetOptions};
use bagcn::ModelConfig;

fn main() -> bagcn::Result<()> {
    let spec = SyntheticSpec {
        clusters: 6,
        nodes_per_cluster: 40,
        classes: 3,
        ..SyntheticSpec::barbell(2)
    };
    let g = gen_synthetic_clusters(&spec)?.graph;
    let base = ModelConfig {
        hidden_dim: 32,
        epochs: 60,
        ..Default::default()
    };
    let opts = BudgetOptions {
        val_size: 30,
        test_size: 120,
        with_gcn2: true,
        threads: worker_count(),
    };
    let table = label_budget_study(&g, &base, &[1, 3, 10], 3, &opts)?;
    print!("{}", table.to_text());
    Ok(())
}
