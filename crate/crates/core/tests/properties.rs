use std::collections::BTreeSet;

use proptest::prelude::*;

use bagcn::analysis::{receptive_field_stats, topk_shortcuts};
use bagcn::gradcheck::{fixture_config, fixture_graph, fixture_params, VARIANTS};
use bagcn::graph::{gen_synthetic_clusters, load_bundle, make_split, normalize_adjacency, save_bundle, SyntheticSpec};
use bagcn::model::{forward, GraphInput, Mode};
use bagcn::objective::sharpen;
use bagcn::tensor::{matmul, row_softmax};
use bagcn::{BiaffineMode, Fusion, Graph, ModelConfig, SplitMasks, Tensor};

fn matrix(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, scale: f64) -> impl Strategy<Value = Tensor> {
    (rows, cols).prop_flat_map(move |(r, c)| {
        prop::collection::vec(-scale..scale, r * c).prop_map(move |d| Tensor::from_vec(r, c, d).unwrap())
    })
}

fn distribution_rows(rows: usize, cols: std::ops::Range<usize>) -> impl Strategy<Value = Tensor> {
    cols.prop_flat_map(move |c| prop::collection::vec(0.001f64..1.0, rows * c))
        .prop_map(move |d| {
            let c = d.len() / rows;
            row_softmax(&Tensor::from_vec(rows, c, d.iter().map(|v| v.ln()).collect()).unwrap())
        })
}

/// Random simple graph on `n` nodes with features, labels and a one-node
/// training split.
fn random_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, 1usize..4, 2usize..4).prop_flat_map(|(n, f, c)| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        (
            prop::sample::subsequence(pairs.clone(), 0..=pairs.len().min(3 * n)),
            prop::collection::vec(-2.0f64..2.0, n * f),
            prop::collection::vec(0..c, n),
        )
            .prop_map(move |(edges, x, labels)| {
                let masks = SplitMasks {
                    train: vec![0],
                    ..Default::default()
                };
                Graph::new("random", edges, Tensor::from_vec(n, f, x).unwrap(), labels, c, masks).unwrap()
            })
    })
}

fn rows_sum_to_one(t: &Tensor) -> bool {
    (0..t.rows()).all(|r| (t.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn softmax_rows_are_distributions(m in matrix(1..8, 1..8, 50.0)) {
        let s = row_softmax(&m);
        prop_assert!(rows_sum_to_one(&s));
        prop_assert!(s.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn attention_and_heads_are_row_stochastic(seed in 0u64..1_000_000, variant in 0usize..6, train in any::<bool>()) {
        let (fusion, biaffine) = VARIANTS[variant];
        let config = fixture_config(fusion, biaffine, seed);
        let g = fixture_graph(seed);
        let p = fixture_params(&g, &config);
        let mode = if train { Mode::Train { epoch: seed % 7 } } else { Mode::Eval };
        let out = forward(&GraphInput::new(&g), &p, &config, mode).unwrap();
        for t in [&out.y_gcn, &out.y_fc, out.s1.as_ref().unwrap(), out.s2.as_ref().unwrap()] {
            prop_assert!(rows_sum_to_one(t));
        }
    }

    #[test]
    fn sharpen_unit_temperature_is_identity(y in distribution_rows(3, 2..6)) {
        prop_assert!(sharpen(&y, 1.0).unwrap().max_abs_diff(&y) < 1e-12);
    }

    #[test]
    fn sharpen_preserves_order(y in distribution_rows(2, 2..6), t in 0.05f64..5.0) {
        let s = sharpen(&y, t).unwrap();
        prop_assert!(rows_sum_to_one(&s));
        for r in 0..y.rows() {
            for i in 0..y.cols() {
                for j in 0..y.cols() {
                    if y.get(r, i) < y.get(r, j) {
                        prop_assert!(s.get(r, i) <= s.get(r, j));
                    }
                }
            }
        }
    }

    #[test]
    fn sharpen_approaches_one_hot(y in distribution_rows(1, 2..6)) {
        let mut sorted = y.row(0).to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(sorted[1] < 0.9 * sorted[0]);
        let s = sharpen(&y, 0.01).unwrap();
        let top = y.row_argmax(0);
        for c in 0..y.cols() {
            let want = if c == top { 1.0 } else { 0.0 };
            prop_assert!((s.get(0, c) - want).abs() < 1e-3);
        }
    }

    #[test]
    fn sparse_product_matches_dense(g in random_graph(12), d in matrix(12..13, 1..5, 3.0)) {
        let a = normalize_adjacency(&g);
        let d = d.gather_rows(&(0..g.n()).collect::<Vec<_>>());
        let want = matmul(&a.to_dense(), &d).unwrap();
        prop_assert!(a.spmm(&d).unwrap().max_abs_diff(&want) < 1e-12);
        prop_assert!(a.spmm_transpose(&d).unwrap().max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn argmax_ignores_positive_scaling(m in matrix(1..6, 1..6, 10.0), k in 0.01f64..100.0) {
        let scaled = m.map(|v| v * k);
        for r in 0..m.rows() {
            prop_assert_eq!(m.row_argmax(r), scaled.row_argmax(r));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bundle_round_trip(g in random_graph(10)) {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&g, dir.path()).unwrap();
        let back = load_bundle(dir.path()).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
        prop_assert_eq!(back.features(), g.features());
        prop_assert_eq!(back.labels(), g.labels());
        prop_assert_eq!(back.masks(), g.masks());
        prop_assert_eq!(back.num_classes(), g.num_classes());
    }

    #[test]
    fn split_invariants(seed in 0u64..10_000, per_class in 1usize..4, val in 0usize..10, test in 0usize..10) {
        let s = gen_synthetic_clusters(&SyntheticSpec { nodes_per_cluster: 8, ..SyntheticSpec::barbell(seed) }).unwrap();
        let m = make_split(&s.graph, per_class, val, test, seed).unwrap();
        m.validate(s.graph.n()).unwrap();
        prop_assert_eq!(m.train.len(), 2 * per_class);
        prop_assert_eq!(m.val.len(), val);
        prop_assert_eq!(m.test.len(), test);
        for c in 0..2 {
            prop_assert_eq!(m.train.iter().filter(|&&i| s.graph.labels()[i] == c).count(), per_class);
        }
        prop_assert_eq!(&make_split(&s.graph, per_class, val, test, seed).unwrap(), &m);
    }

    #[test]
    fn forward_is_permutation_equivariant(seed in 0u64..10_000, variant in 0usize..6, perm_seed in any::<u64>()) {
        let (fusion, biaffine) = VARIANTS[variant];
        let config = ModelConfig { dropout: 0.0, ..fixture_config(fusion, biaffine, seed) };
        let g = fixture_graph(seed);
        let p = fixture_params(&g, &config);
        let n = g.n();
        // Fisher-Yates driven by a simple LCG so the permutation is reproducible.
        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = perm_seed | 1;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let edges = g.edges().iter().map(|&(u, v)| (inv[u], inv[v])).collect();
        let labels = perm.iter().map(|&old| g.labels()[old]).collect();
        let masks = SplitMasks { train: g.masks().train.iter().map(|&i| inv[i]).collect(), ..Default::default() };
        let h = Graph::new("perm", edges, g.features().gather_rows(&perm), labels, g.num_classes(), masks).unwrap();

        for mode in [Mode::Train { epoch: 0 }, Mode::Eval] {
            let a = forward(&GraphInput::new(&g), &p, &config, mode).unwrap();
            let b = forward(&GraphInput::new(&h), &p, &config, mode).unwrap();
            prop_assert!(b.y_gcn.max_abs_diff(&a.y_gcn.gather_rows(&perm)) < 1e-10);
            prop_assert!(b.y_fc.max_abs_diff(&a.y_fc.gather_rows(&perm)) < 1e-10);
        }
    }

    #[test]
    fn two_hop_support_matches_bfs(g in random_graph(100)) {
        let s = row_softmax(&Tensor::zeros(g.n(), g.n()));
        let stats = receptive_field_stats(&s, &g, 0.0).unwrap();
        for i in 0..g.n() {
            prop_assert_eq!(stats.m_prime[i], g.within_hops(i, 2).len());
            prop_assert_eq!(stats.m[i], g.n());
        }
    }

    #[test]
    fn shortcuts_skip_target_and_are_sorted(g in random_graph(15), seed in 0u64..1000, k in 1usize..6, hops in 0usize..3) {
        let n = g.n();
        let mut state = seed;
        let logits: Vec<f64> = (0..n * n).map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 40) % 5) as f64
        }).collect();
        let s1 = row_softmax(&Tensor::from_vec(n, n, logits).unwrap());
        for target in 0..n {
            let set = topk_shortcuts(&s1, target, k, Some(hops), &g).unwrap();
            let near: BTreeSet<usize> = g.within_hops(target, hops).into_iter().map(|(j, _)| j).collect();
            prop_assert!(set.entries.len() <= k);
            for w in set.entries.windows(2) {
                prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
            }
            for (j, w) in &set.entries {
                prop_assert!(*j != target && !near.contains(j));
                prop_assert!(*w > 0.0 && *w <= 1.0);
            }
            prop_assert_eq!(&topk_shortcuts(&s1, target, k, Some(hops), &g).unwrap(), &set);
        }
    }

    #[test]
    fn noiseless_synthetic_has_one_row_per_class(seed in 0u64..10_000, classes in 1usize..4, per in 1usize..4) {
        let spec = SyntheticSpec {
            clusters: classes * per,
            nodes_per_cluster: 6,
            classes,
            feature_noise: 0.0,
            ..SyntheticSpec::barbell(seed)
        };
        let s = gen_synthetic_clusters(&spec).unwrap();
        let rows: BTreeSet<Vec<u64>> = (0..s.graph.n())
            .map(|i| s.graph.features().row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        prop_assert_eq!(rows.len(), classes);
        let comps = s.graph.components();
        prop_assert_eq!(comps.iter().max().unwrap() + 1, spec.clusters);
        for i in 0..s.graph.n() {
            for j in 0..s.graph.n() {
                prop_assert_eq!(comps[i] == comps[j], s.cluster_of[i] == s.cluster_of[j]);
            }
        }
    }
}

#[test]
fn variants_cover_both_fusions_and_three_pairings() {
    let fusions: BTreeSet<String> = VARIANTS.iter().map(|(f, _)| f.to_string()).collect();
    let modes: BTreeSet<String> = VARIANTS.iter().map(|(_, b)| b.to_string()).collect();
    assert_eq!(fusions.len(), 2);
    assert_eq!(modes.len(), 3);
    assert!(!VARIANTS.iter().any(|(_, b)| *b == BiaffineMode::None));
    assert!(VARIANTS.contains(&(Fusion::Add, BiaffineMode::EgoLocal)));
}
