//! Generates the four-cluster barbell graph, writes it as a data bundle and
//! reads it back.

use bagcn::graph::{gen_synthetic_clusters, load_bundle, save_bundle, SyntheticSpec};

fn main() -> bagcn::Result<()> {
    let s = gen_synthetic_clusters(&SyntheticSpec::barbell(7))?;
    let g = &s.graph;
    let comps = g.components();
    let distinct: std::collections::BTreeSet<_> = comps.iter().collect();
    println!("{} nodes, {} edges, {} components", g.n(), g.edges().len(), distinct.len());
    let m = g.masks();
    println!("train {:?}", m.train);
    println!("val {} nodes, test {} label-free nodes", m.val.len(), m.test.len());

    let dir = std::env::temp_dir().join(format!("bagcn-barbell-{}", std::process::id()));
    save_bundle(g, &dir)?;
    let back = load_bundle(&dir)?;
    println!("bundle at {} round-trips: {}", dir.display(), back.edges() == g.edges());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
