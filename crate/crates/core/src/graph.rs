//! Node-attributed graphs: bundle ingestion, adjacency normalization, split
//! generation, and synthetic disconnected-cluster graphs.
//!
//! A bundle is a directory holding
//!
//! ```text
//! meta.json     {"n": int, "f": int, "c": int, "name": str}
//! edges.tsv     one "u<TAB>v" per line, u < v, 0-indexed
//! features.tsv  n lines of f tab-separated decimals
//! labels.tsv    n lines of one integer class index
//! splits.json   {"train": [...], "val": [...], "test": [...]}
//! ```

use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::{SparseMatrix, Tensor};

/// Disjoint train/val/test node index sets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitMasks {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::Config("split: empty training set".into()));
        }
        let mut seen = vec![false; n];
        for (name, set) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in set {
                if i >= n {
                    return Err(Error::Config(format!("split: {name} index {i} out of range (n = {n})")));
                }
                if seen[i] {
                    return Err(Error::Config(format!("split: node {i} appears twice")));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Meta {
    n: usize,
    f: usize,
    c: usize,
    name: String,
}

/// Immutable undirected graph with node features, labels and a split.
#[derive(Clone, Debug)]
pub struct Graph {
    name: String,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    features: Tensor,
    labels: Vec<usize>,
    num_classes: usize,
    masks: SplitMasks,
}

impl Graph {
    /// Validates and builds a graph. Edges may come in any orientation but
    /// must not repeat or form self-loops.
    pub fn new(
        name: impl Into<String>,
        edges: Vec<(usize, usize)>,
        features: Tensor,
        labels: Vec<usize>,
        num_classes: usize,
        masks: SplitMasks,
    ) -> Result<Self> {
        let n = features.rows();
        if labels.len() != n {
            return Err(Error::Config(format!("{} labels for {n} nodes", labels.len())));
        }
        if let Some((i, &c)) = labels.iter().enumerate().find(|(_, &c)| c >= num_classes) {
            return Err(Error::Config(format!("node {i}: label {c} out of range")));
        }
        if !features.is_finite() {
            return Err(Error::Config("non-finite feature".into()));
        }
        let mut canon = Vec::with_capacity(edges.len());
        let mut seen = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::NodeOutOfRange { node: u.max(v), n });
            }
            if u == v {
                return Err(Error::Config(format!("self-loop at node {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::Config(format!("duplicate edge {} {}", e.0, e.1)));
            }
            canon.push(e);
        }
        canon.sort_unstable();
        masks.validate(n)?;
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &canon {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        neighbors.iter_mut().for_each(|nb| nb.sort_unstable());
        Ok(Graph {
            name: name.into(),
            edges: canon,
            neighbors,
            features,
            labels,
            num_classes,
            masks,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Canonical `(u, v)` edges with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn masks(&self) -> &SplitMasks {
        &self.masks
    }

    /// Same graph with a different split.
    pub fn with_masks(&self, masks: SplitMasks) -> Result<Graph> {
        masks.validate(self.n())?;
        Ok(Graph { masks, ..self.clone() })
    }

    /// Same graph with each feature row scaled to sum to one (rows summing
    /// to zero are left as is).
    pub fn row_normalized(&self) -> Graph {
        let mut features = self.features.clone();
        for r in 0..features.rows() {
            let s: f64 = features.row(r).iter().sum();
            if s != 0.0 {
                features.row_mut(r).iter_mut().for_each(|v| *v /= s);
            }
        }
        Graph {
            features,
            ..self.clone()
        }
    }

    /// Nodes within `hops` edges of `node` (including `node`), with their
    /// hop distance, in BFS order.
    pub fn within_hops(&self, node: usize, hops: usize) -> Vec<(usize, usize)> {
        let mut dist = vec![usize::MAX; self.n()];
        let mut out = Vec::new();
        let mut queue = VecDeque::from([node]);
        dist[node] = 0;
        while let Some(u) = queue.pop_front() {
            out.push((u, dist[u]));
            if dist[u] == hops {
                continue;
            }
            for &v in &self.neighbors[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        out
    }

    /// Component id per node, numbered in order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            for (u, _) in self.within_hops(s, usize::MAX) {
                comp[u] = next;
            }
            next += 1;
        }
        comp
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n() {
            return Err(Error::NodeOutOfRange { node, n: self.n() });
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::bundle(path, 0, e.to_string()))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.is_empty())
}

/// Reads and validates a bundle directory.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<Graph> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let meta: Meta = serde_json::from_str(&read(&meta_path)?).map_err(|e| Error::bundle(&meta_path, e.line(), e.to_string()))?;

    let edges_path = dir.join("edges.tsv");
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, text) in data_lines(&read(&edges_path)?) {
        let err = |msg: String| Error::bundle(&edges_path, line, msg);
        let mut parts = text.split('\t');
        let (Some(u), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err("expected two tab-separated node ids".into()));
        };
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| err(format!("bad node id {s:?}: {e}")));
        let (u, v) = (parse(u)?, parse(v)?);
        if u >= meta.n || v >= meta.n {
            return Err(err(format!("node index out of range (n = {})", meta.n)));
        }
        if u >= v {
            return Err(err(format!("edge {u} {v} must satisfy u < v")));
        }
        if !seen.insert((u, v)) {
            return Err(err(format!("duplicate edge {u} {v}")));
        }
        edges.push((u, v));
    }

    let feat_path = dir.join("features.tsv");
    let mut data = Vec::with_capacity(meta.n * meta.f);
    let mut rows = 0;
    for (line, text) in data_lines(&read(&feat_path)?) {
        let err = |msg: String| Error::bundle(&feat_path, line, msg);
        let before = data.len();
        for tok in text.split('\t') {
            let v: f64 = tok.trim().parse().map_err(|e| err(format!("bad float {tok:?}: {e}")))?;
            if !v.is_finite() {
                return Err(err("non-finite feature".into()));
            }
            data.push(v);
        }
        if data.len() - before != meta.f {
            return Err(err(format!("expected {} features, found {}", meta.f, data.len() - before)));
        }
        rows += 1;
    }
    if rows != meta.n {
        return Err(Error::bundle(&feat_path, rows, format!("row-count mismatch: {rows} rows, n = {}", meta.n)));
    }
    let features = Tensor::from_vec(meta.n, meta.f, data)?;

    let label_path = dir.join("labels.tsv");
    let mut labels = Vec::with_capacity(meta.n);
    for (line, text) in data_lines(&read(&label_path)?) {
        let err = |msg: String| Error::bundle(&label_path, line, msg);
        let c: usize = text.trim().parse().map_err(|e| err(format!("bad label {text:?}: {e}")))?;
        if c >= meta.c {
            return Err(err(format!("label out of range: {c} >= {}", meta.c)));
        }
        labels.push(c);
    }
    if labels.len() != meta.n {
        return Err(Error::bundle(
            &label_path,
            labels.len(),
            format!("row-count mismatch: {} labels, n = {}", labels.len(), meta.n),
        ));
    }

    let split_path = dir.join("splits.json");
    let masks: SplitMasks =
        serde_json::from_str(&read(&split_path)?).map_err(|e| Error::bundle(&split_path, e.line(), e.to_string()))?;
    masks.validate(meta.n).map_err(|e| Error::bundle(&split_path, 0, e.to_string()))?;

    Graph::new(meta.name, edges, features, labels, meta.c, masks)
}

/// Writes `g` as a bundle directory (created if missing) in canonical form.
pub fn save_bundle(g: &Graph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let meta = Meta {
        n: g.n(),
        f: g.num_features(),
        c: g.num_classes(),
        name: g.name.clone(),
    };
    fs::write(dir.join("meta.json"), serde_json::to_string(&meta)? + "\n")?;

    let mut edges = String::new();
    for &(u, v) in &g.edges {
        edges.push_str(&format!("{u}\t{v}\n"));
    }
    fs::write(dir.join("edges.tsv"), edges)?;

    let mut feats = String::new();
    for r in 0..g.n() {
        let row: Vec<String> = g.features.row(r).iter().map(|v| v.to_string()).collect();
        feats.push_str(&row.join("\t"));
        feats.push('\n');
    }
    fs::write(dir.join("features.tsv"), feats)?;

    let labels: String = g.labels.iter().map(|c| format!("{c}\n")).collect();
    fs::write(dir.join("labels.tsv"), labels)?;
    fs::write(dir.join("splits.json"), serde_json::to_string(&g.masks)? + "\n")?;
    Ok(())
}

/// Symmetric normalization of the adjacency with self-loops added:
/// entry `(i, j)` is `1 / sqrt(d_i d_j)` wherever `A + I` is one, with `d`
/// the degrees of `A + I`.
pub fn normalize_adjacency(g: &Graph) -> SparseMatrix {
    let n = g.n();
    let deg: Vec<f64> = (0..n).map(|i| (g.degree(i) + 1) as f64).collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(2 * g.edges.len() + n);
    let mut values = Vec::with_capacity(col_idx.capacity());
    row_ptr.push(0);
    for i in 0..n {
        let nb = &g.neighbors[i];
        let split = nb.partition_point(|&j| j < i);
        let cols = nb[..split].iter().copied().chain(std::iter::once(i)).chain(nb[split..].iter().copied());
        for j in cols {
            col_idx.push(j);
            values.push(1.0 / (deg[i] * deg[j]).sqrt());
        }
        row_ptr.push(col_idx.len());
    }
    SparseMatrix::from_csr(n, row_ptr, col_idx, values).expect("normalized adjacency is a valid symmetric CSR")
}

/// Samples `per_class` training nodes from every class, then `val_size` and
/// `test_size` nodes from the remainder without replacement.
pub fn make_split(g: &Graph, per_class: usize, val_size: usize, test_size: usize, seed: u64) -> Result<SplitMasks> {
    let mut rng = rng::stream(seed, rng::DOMAIN_SPLIT, per_class as u64, 0);
    let mut by_class = vec![Vec::new(); g.num_classes()];
    for (i, &c) in g.labels().iter().enumerate() {
        by_class[c].push(i);
    }
    let mut train = Vec::with_capacity(per_class * g.num_classes());
    let mut rest = Vec::new();
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.len() < per_class {
            return Err(Error::InsufficientClass {
                class: c,
                have: members.len(),
                need: per_class,
            });
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..per_class]);
        rest.extend_from_slice(&members[per_class..]);
    }
    if rest.len() < val_size + test_size {
        return Err(Error::Config(format!(
            "split: {} nodes left after training, {} requested for val/test",
            rest.len(),
            val_size + test_size
        )));
    }
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    let mut val = rest[..val_size].to_vec();
    let mut test = rest[val_size..val_size + test_size].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitMasks { train, val, test })
}

/// Fraction of `node`'s neighbors sharing its label; `1.0` when it has none.
pub fn local_homophily(g: &Graph, node: usize) -> Result<f64> {
    g.check_node(node)?;
    Ok(homophily_with(g, node, g.neighbors(node).iter().copied()))
}

pub(crate) fn homophily_with(g: &Graph, node: usize, nb: impl Iterator<Item = usize>) -> f64 {
    let (mut same, mut total) = (0usize, 0usize);
    for j in nb {
        total += 1;
        if g.labels[j] == g.labels[node] {
            same += 1;
        }
    }
    if total == 0 {
        1.0
    } else {
        same as f64 / total as f64
    }
}

/// Parameters for a graph of mutually disconnected random clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub clusters: usize,
    pub nodes_per_cluster: usize,
    pub classes: usize,
    pub feature_dim: usize,
    pub intra_edge_prob: f64,
    pub feature_noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Four 25-node clusters, two classes, 16 features.
    pub fn barbell(seed: u64) -> Self {
        SyntheticSpec {
            clusters: 4,
            nodes_per_cluster: 25,
            classes: 2,
            feature_dim: 16,
            intra_edge_prob: 0.3,
            feature_noise: 0.5,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic: {m}")));
        if self.classes == 0 || self.clusters == 0 || self.nodes_per_cluster == 0 || self.feature_dim == 0 {
            return bad("counts must be positive");
        }
        if !self.clusters.is_multiple_of(self.classes) {
            return bad("clusters must be a multiple of classes");
        }
        if !(self.intra_edge_prob > 0.0 && self.intra_edge_prob <= 1.0) {
            return bad("intra_edge_prob must lie in (0, 1]");
        }
        if !(self.feature_noise >= 0.0) {
            return bad("feature_noise must be >= 0");
        }
        Ok(())
    }
}

/// A generated graph together with each node's cluster.
#[derive(Clone, Debug)]
pub struct SyntheticGraph {
    pub graph: Graph,
    pub cluster_of: Vec<usize>,
    pub spec: SyntheticSpec,
}

impl SyntheticGraph {
    /// Clusters `0..classes` each hold one class and carry the labels; the
    /// remaining clusters are label-free.
    pub fn is_labeled_cluster(&self, cluster: usize) -> bool {
        cluster < self.spec.classes
    }

    /// Nodes in label-free clusters.
    pub fn label_free_nodes(&self) -> Vec<usize> {
        (0..self.graph.n()).filter(|&i| !self.is_labeled_cluster(self.cluster_of[i])).collect()
    }

    /// `per_class` training nodes from each labeled cluster, the rest of the
    /// labeled clusters for validation, every label-free node for testing.
    pub fn labeled_cluster_split(&self, per_class: usize, seed: u64) -> Result<SplitMasks> {
        let mut rng = rng::stream(seed, rng::DOMAIN_SPLIT, per_class as u64, 1);
        let (mut train, mut val) = (Vec::new(), Vec::new());
        for c in 0..self.spec.classes {
            let mut members: Vec<usize> = (0..self.graph.n()).filter(|&i| self.cluster_of[i] == c).collect();
            if members.len() < per_class {
                return Err(Error::InsufficientClass {
                    class: c,
                    have: members.len(),
                    need: per_class,
                });
            }
            members.shuffle(&mut rng);
            train.extend_from_slice(&members[..per_class]);
            val.extend_from_slice(&members[per_class..]);
        }
        train.sort_unstable();
        val.sort_unstable();
        Ok(SplitMasks {
            train,
            val,
            test: self.label_free_nodes(),
        })
    }
}

/// Builds `clusters` disconnected random subgraphs. Cluster `k` has class
/// `k % classes`; every cluster contains a random spanning path plus each
/// other intra-cluster pair independently with `intra_edge_prob`, so
/// clusters are exactly the connected components. Features are a Gaussian
/// class prototype plus `feature_noise` Gaussian noise.
///
/// The returned split is [`SyntheticGraph::labeled_cluster_split`] with
/// five training nodes per class.
pub fn gen_synthetic_clusters(spec: &SyntheticSpec) -> Result<SyntheticGraph> {
    spec.validate()?;
    let (k, m, f) = (spec.clusters, spec.nodes_per_cluster, spec.feature_dim);
    let n = k * m;
    let mut rng = rng::stream(spec.seed, rng::DOMAIN_SYNTH, 0, 0);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let prototypes: Vec<Vec<f64>> =
        (0..spec.classes).map(|_| (0..f).map(|_| std_normal.sample(&mut rng)).collect()).collect();

    let mut edges = BTreeSet::new();
    let mut cluster_of = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for c in 0..k {
        let base = c * m;
        let mut order: Vec<usize> = (base..base + m).collect();
        order.shuffle(&mut rng);
        for w in order.windows(2) {
            edges.insert((w[0].min(w[1]), w[0].max(w[1])));
        }
        for u in base..base + m {
            for v in u + 1..base + m {
                if rng.random::<f64>() < spec.intra_edge_prob {
                    edges.insert((u, v));
                }
            }
            cluster_of.push(c);
            labels.push(c % spec.classes);
        }
    }

    let mut features = Tensor::zeros(n, f);
    for i in 0..n {
        let proto = &prototypes[labels[i]];
        for (j, v) in features.row_mut(i).iter_mut().enumerate() {
            *v = proto[j] + spec.feature_noise * std_normal.sample(&mut rng);
        }
    }

    let name = format!("synthetic-{}x{}-c{}", k, m, spec.classes);
    let placeholder = SplitMasks {
        train: vec![0],
        ..Default::default()
    };
    let graph = Graph::new(name, edges.into_iter().collect(), features, labels, spec.classes, placeholder)?;
    let mut synth = SyntheticGraph {
        graph,
        cluster_of,
        spec: spec.clone(),
    };
    let masks = synth.labeled_cluster_split(m.min(5), spec.seed)?;
    synth.graph = synth.graph.with_masks(masks)?;
    Ok(synth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize, labels: Vec<usize>) -> Graph {
        let edges = (0..n - 1).map(|i| (i, i + 1)).collect();
        let c = labels.iter().max().unwrap() + 1;
        let masks = SplitMasks {
            train: vec![0],
            ..Default::default()
        };
        Graph::new("path", edges, Tensor::zeros(n, 1), labels, c, masks).unwrap()
    }

    #[test]
    fn normalize_single_and_pair() {
        let single = Graph::new(
            "one",
            vec![],
            Tensor::zeros(1, 1),
            vec![0],
            1,
            SplitMasks {
                train: vec![0],
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(normalize_adjacency(&single).to_dense(), Tensor::from_rows(&[[1.0]]));
        let pair = path_graph(2, vec![0, 0]);
        assert_eq!(
            normalize_adjacency(&pair).to_dense(),
            Tensor::from_rows(&[[0.5, 0.5], [0.5, 0.5]])
        );
    }

    #[test]
    fn graph_rejects_bad_input() {
        let m = SplitMasks {
            train: vec![0],
            ..Default::default()
        };
        let f = Tensor::zeros(3, 1);
        assert!(Graph::new("g", vec![(0, 0)], f.clone(), vec![0; 3], 1, m.clone()).is_err());
        assert!(Graph::new("g", vec![(0, 1), (1, 0)], f.clone(), vec![0; 3], 1, m.clone()).is_err());
        assert!(Graph::new("g", vec![(0, 3)], f.clone(), vec![0; 3], 1, m.clone()).is_err());
        assert!(Graph::new("g", vec![], f.clone(), vec![0, 0, 1], 1, m.clone()).is_err());
        assert!(Graph::new("g", vec![], f, vec![0; 2], 1, m).is_err());
    }

    #[test]
    fn homophily_cases() {
        // star: center 0 with neighbors of labels [0, 0, 1, 1]
        let masks = SplitMasks {
            train: vec![0],
            ..Default::default()
        };
        let g = Graph::new(
            "star",
            vec![(0, 1), (0, 2), (0, 3), (0, 4)],
            Tensor::zeros(6, 1),
            vec![0, 0, 0, 1, 1, 1],
            2,
            masks,
        )
        .unwrap();
        assert_eq!(local_homophily(&g, 0).unwrap(), 0.5);
        assert_eq!(local_homophily(&g, 1).unwrap(), 1.0);
        assert_eq!(local_homophily(&g, 3).unwrap(), 0.0);
        // isolated node
        assert_eq!(local_homophily(&g, 5).unwrap(), 1.0);
        assert!(local_homophily(&g, 6).is_err());
    }

    #[test]
    fn hops_on_path() {
        let g = path_graph(5, vec![0; 5]);
        let near: Vec<usize> = g.within_hops(2, 1).into_iter().map(|(u, _)| u).collect();
        assert_eq!(near, vec![2, 1, 3]);
        assert_eq!(g.within_hops(0, 10).len(), 5);
        assert_eq!(g.components(), vec![0; 5]);
    }

    #[test]
    fn synthetic_single_class_two_clusters() {
        let spec = SyntheticSpec {
            clusters: 2,
            nodes_per_cluster: 6,
            classes: 1,
            feature_dim: 3,
            intra_edge_prob: 0.5,
            feature_noise: 0.0,
            seed: 3,
        };
        let s = gen_synthetic_clusters(&spec).unwrap();
        let f = s.graph.features();
        assert!((1..f.rows()).all(|r| f.row(r) == f.row(0)));
        assert_eq!(*s.graph.components().iter().max().unwrap(), 1);
    }

    #[test]
    fn synthetic_rejects_invalid_spec() {
        let mut spec = SyntheticSpec::barbell(0);
        spec.clusters = 3;
        assert!(gen_synthetic_clusters(&spec).is_err());
        let mut spec = SyntheticSpec::barbell(0);
        spec.intra_edge_prob = 0.0;
        assert!(gen_synthetic_clusters(&spec).is_err());
        let mut spec = SyntheticSpec::barbell(0);
        spec.feature_noise = -1.0;
        assert!(gen_synthetic_clusters(&spec).is_err());
    }

    #[test]
    fn split_sizes_and_errors() {
        let s = gen_synthetic_clusters(&SyntheticSpec::barbell(1)).unwrap();
        let m = make_split(&s.graph, 1, 10, 20, 5).unwrap();
        assert_eq!(m.train.len(), 2);
        assert_eq!(m.val.len(), 10);
        assert_eq!(m.test.len(), 20);
        assert!(matches!(
            make_split(&s.graph, 51, 0, 0, 5),
            Err(Error::InsufficientClass { need: 51, .. })
        ));
        assert!(make_split(&s.graph, 10, 60, 60, 5).is_err());
    }
}
