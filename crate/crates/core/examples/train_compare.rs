//! Trains the biaffine model and the two baselines on the same synthetic
//! graph and prints their test accuracy.

use bagcn::baseline::{BaselineConfig, BaselineKind};
use bagcn::graph::{gen_synthetic_clusters, SyntheticSpec};
use bagcn::train::{train, Bagcn, Baseline};
use bagcn::{Fusion, ModelConfig};

fn main() -> bagcn::Result<()> {
    let g = gen_synthetic_clusters(&SyntheticSpec::barbell(0))?.graph;

    let config = ModelConfig {
        fusion: Fusion::Add,
        epochs: 100,
        ..Default::default()
    };
    let out = train(&g, &Bagcn(config))?;
    let r = &out.report;
    let last = r.epochs.last().expect("at least one epoch");
    println!(
        "bagcn  test {:.3}  best epoch {}  final ce {:.4} consistency {:.4}  ({:.2}s)",
        r.test_acc.unwrap_or(f64::NAN),
        r.best_epoch,
        last.ce,
        last.consistency,
        r.wall_seconds
    );

    for kind in [BaselineKind::Gcn2, BaselineKind::Mlp2] {
        let bc = BaselineConfig {
            epochs: 100,
            ..BaselineConfig::new(kind)
        };
        let r = train(&g, &Baseline(bc))?.report;
        println!("{kind:<6} test {:.3}", r.test_acc.unwrap_or(f64::NAN));
    }
    Ok(())
}
