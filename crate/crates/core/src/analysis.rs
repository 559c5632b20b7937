//! Read-only inspection of learned dependency matrices.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{homophily_with, normalize_adjacency, Graph};
use crate::tensor::Tensor;

/// The strongest dependencies of one target node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortcutSet {
    pub target: usize,
    /// `(source, weight)`, weight descending, ties by lower source id.
    pub entries: Vec<(usize, f64)>,
    pub k: usize,
}

impl ShortcutSet {
    pub fn sources(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(j, _)| j)
    }
}

fn check_square(s1: &Tensor, g: &Graph) -> Result<()> {
    if s1.shape() != (g.n(), g.n()) {
        return Err(Error::shape("dependency matrix", s1.shape(), (g.n(), g.n())));
    }
    Ok(())
}

/// Top-`k` sources of row `target` of `s1`, skipping the target and, when
/// `exclude_hops` is given, every node within that many hops of it.
/// Zero-weight sources are never returned.
pub fn topk_shortcuts(s1: &Tensor, target: usize, k: usize, exclude_hops: Option<usize>, g: &Graph) -> Result<ShortcutSet> {
    check_square(s1, g)?;
    g.check_node(target)?;
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    let mut excluded = vec![false; g.n()];
    excluded[target] = true;
    if let Some(h) = exclude_hops {
        for (j, _) in g.within_hops(target, h) {
            excluded[j] = true;
        }
    }
    let row = s1.row(target);
    let mut candidates: Vec<(usize, f64)> = (0..g.n()).filter(|&j| !excluded[j] && row[j] > 0.0).map(|j| (j, row[j])).collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    candidates.truncate(k);
    Ok(ShortcutSet {
        target,
        entries: candidates,
        k,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceptiveFieldStats {
    /// Entries of each row of `s1` above `eps`.
    pub m: Vec<usize>,
    /// Nonzeros of each row of the squared normalized adjacency.
    pub m_prime: Vec<usize>,
    pub mean_m: f64,
    pub mean_m_prime: f64,
    pub eps: f64,
}

/// The default support threshold, one order of magnitude below uniform mass.
pub fn default_eps(n: usize) -> f64 {
    1.0 / (10.0 * n as f64)
}

pub fn receptive_field_stats(s1: &Tensor, g: &Graph, eps: f64) -> Result<ReceptiveFieldStats> {
    check_square(s1, g)?;
    if !(eps >= 0.0) {
        return Err(Error::Config(format!("eps must be >= 0, got {eps}")));
    }
    let m: Vec<usize> = (0..g.n()).map(|i| s1.row(i).iter().filter(|&&v| v > eps).count()).collect();
    let m_prime = normalize_adjacency(g).square_row_support();
    let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len().max(1) as f64;
    Ok(ReceptiveFieldStats {
        mean_m: mean(&m),
        mean_m_prime: mean(&m_prime),
        m,
        m_prime,
        eps,
    })
}

/// Mean local homophily of the shortcut targets on the original graph and
/// with each target's shortcut sources added as extra neighbors.
pub fn shortcut_homophily_delta(g: &Graph, shortcuts: &[ShortcutSet]) -> Result<(f64, f64)> {
    if shortcuts.is_empty() {
        return Ok((0.0, 0.0));
    }
    let (mut before, mut after) = (0.0, 0.0);
    for s in shortcuts {
        g.check_node(s.target)?;
        for j in s.sources() {
            g.check_node(j)?;
        }
        let base = g.neighbors(s.target);
        before += homophily_with(g, s.target, base.iter().copied());
        let augmented: BTreeSet<usize> = base.iter().copied().chain(s.sources()).collect();
        after += homophily_with(g, s.target, augmented.into_iter());
    }
    let n = shortcuts.len() as f64;
    Ok((before / n, after / n))
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Graphviz text for the `hops`-hop ego graph of `target` with the
/// shortcut sources overlaid as dashed chocolate edges. Nodes are filled by
/// class and listed in ascending id order.
pub fn export_ego_graph(g: &Graph, target: usize, hops: usize, shortcuts: Option<&ShortcutSet>) -> Result<String> {
    g.check_node(target)?;
    if hops == 0 {
        return Err(Error::Config("hops must be >= 1".into()));
    }
    let ego: BTreeSet<usize> = g.within_hops(target, hops).into_iter().map(|(j, _)| j).collect();
    let mut nodes = ego.clone();
    if let Some(s) = shortcuts {
        if s.target != target {
            return Err(Error::Config(format!("shortcut set targets {} not {target}", s.target)));
        }
        for j in s.sources() {
            g.check_node(j)?;
            nodes.insert(j);
        }
    }

    let mut out = String::new();
    writeln!(out, "digraph ego_{target} {{").unwrap();
    writeln!(out, "  node [shape=circle, style=filled, fontsize=10];").unwrap();
    for &j in &nodes {
        let class = g.labels()[j];
        let pen = if j == target { ", penwidth=3" } else { "" };
        writeln!(
            out,
            "  n{j} [label=\"{j}\", fillcolor=\"{}\", class=\"{class}\"{pen}];",
            PALETTE[class % PALETTE.len()]
        )
        .unwrap();
    }
    for &(u, v) in g.edges() {
        if ego.contains(&u) && ego.contains(&v) {
            writeln!(out, "  n{u} -> n{v} [dir=none, style=solid];").unwrap();
        }
    }
    if let Some(s) = shortcuts {
        for &(j, w) in &s.entries {
            writeln!(out, "  n{j} -> n{target} [style=dashed, color=\"chocolate\", label=\"{w:.3}\"];").unwrap();
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// Degree next to the number of strong dependencies from outside the
/// `exclude_hops` neighborhood.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeShortcutStats {
    pub node: usize,
    pub degree: usize,
    /// Degree over the mean degree.
    pub relative_degree: f64,
    pub shortcuts: usize,
}

pub fn shortcut_degree_table(s1: &Tensor, g: &Graph, exclude_hops: usize, eps: f64) -> Result<Vec<NodeShortcutStats>> {
    check_square(s1, g)?;
    let mean_degree = 2.0 * g.edges().len() as f64 / g.n() as f64;
    let mut rows = Vec::with_capacity(g.n());
    for i in 0..g.n() {
        let near: BTreeSet<usize> = g.within_hops(i, exclude_hops).into_iter().map(|(j, _)| j).collect();
        let shortcuts = s1.row(i).iter().enumerate().filter(|&(j, &v)| v > eps && !near.contains(&j)).count();
        rows.push(NodeShortcutStats {
            node: i,
            degree: g.degree(i),
            relative_degree: if mean_degree > 0.0 { g.degree(i) as f64 / mean_degree } else { 0.0 },
            shortcuts,
        });
    }
    Ok(rows)
}
