use graphviz_rust::dot_structures::{Graph as DotGraph, Stmt};

use bagcn::analysis::{export_ego_graph, topk_shortcuts, ShortcutSet};
use bagcn::graph::{gen_synthetic_clusters, SyntheticSpec};
use bagcn::tensor::row_softmax;
use bagcn::Tensor;

fn parse(dot: &str) -> DotGraph {
    graphviz_rust::parse(dot).unwrap_or_else(|e| panic!("DOT did not parse: {e}\n{dot}"))
}

fn counts(g: &DotGraph) -> (usize, usize) {
    let DotGraph::DiGraph { stmts, .. } = g else {
        panic!("expected a digraph");
    };
    let nodes = stmts.iter().filter(|s| matches!(s, Stmt::Node(_))).count();
    let edges = stmts.iter().filter(|s| matches!(s, Stmt::Edge(_))).count();
    (nodes, edges)
}

#[test]
fn ego_graph_with_shortcuts_parses() {
    let s = gen_synthetic_clusters(&SyntheticSpec::barbell(0)).unwrap();
    let g = &s.graph;
    let n = g.n();
    let logits = Tensor::from_vec(n, n, (0..n * n).map(|i| ((i * 7919) % 13) as f64 * 0.3).collect()).unwrap();
    let s1 = row_softmax(&logits);
    let target = s.label_free_nodes()[0];
    let set = topk_shortcuts(&s1, target, 4, Some(3), g).unwrap();
    let dot = export_ego_graph(g, target, 2, Some(&set)).unwrap();
    let parsed = parse(&dot);
    let (nodes, edges) = counts(&parsed);
    let ego = g.within_hops(target, 2);
    let extra = set.sources().filter(|j| !ego.iter().any(|(e, _)| e == j)).count();
    assert_eq!(nodes, ego.len() + extra);
    let induced = g
        .edges()
        .iter()
        .filter(|(u, v)| ego.iter().any(|(e, _)| e == u) && ego.iter().any(|(e, _)| e == v))
        .count();
    assert_eq!(edges, induced + set.entries.len());
    assert_eq!(dot.matches("style=dashed").count(), set.entries.len());
    assert_eq!(export_ego_graph(g, target, 2, Some(&set)).unwrap(), dot);
}

#[test]
fn isolated_node_parses_to_one_node() {
    let masks = bagcn::SplitMasks {
        train: vec![0],
        ..Default::default()
    };
    let g = bagcn::Graph::new("iso", vec![(0, 1)], Tensor::eye(3), vec![0, 1, 1], 2, masks).unwrap();
    let dot = export_ego_graph(&g, 2, 3, None).unwrap();
    assert_eq!(counts(&parse(&dot)), (1, 0));
    let empty = ShortcutSet {
        target: 2,
        entries: vec![],
        k: 3,
    };
    assert_eq!(export_ego_graph(&g, 2, 3, Some(&empty)).unwrap(), dot);
    assert!(export_ego_graph(&g, 3, 1, None).is_err());
}
