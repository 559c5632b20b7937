//! Symmetric normalization with self-loops on a four-node path, plus the
//! two-hop support that bounds a two-layer GCN's receptive field.

use bagcn::graph::normalize_adjacency;
use bagcn::{Graph, SplitMasks, Tensor};

fn main() -> bagcn::Result<()> {
    let masks = SplitMasks {
        train: vec![0, 3],
        ..Default::default()
    };
    let g = Graph::new("path4", vec![(0, 1), (1, 2), (2, 3)], Tensor::eye(4), vec![0, 0, 1, 1], 2, masks)?;
    let a_hat = normalize_adjacency(&g);
    let dense = a_hat.to_dense();
    for i in 0..g.n() {
        let row: Vec<String> = dense.row(i).iter().map(|v| format!("{v:.4}")).collect();
        println!("{}", row.join("  "));
    }
    println!("nnz = {}, two-hop support per row = {:?}", a_hat.nnz(), a_hat.square_row_support());
    Ok(())
}
