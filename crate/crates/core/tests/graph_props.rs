mod common;

use std::collections::BTreeSet;

use claimgraph::graph::{build_graph, path_stats, source_sink_ratio, PaperGraph, View, DEFAULT_EPSILON, DEFAULT_PATH_CAP};
use claimgraph::synthetic::vocabulary_code;
use common::*;
use proptest::prelude::*;

fn small_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=7).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..=n * (n - 1))))
}

fn to_graph(labels: &[usize], edges: &[(usize, usize)]) -> PaperGraph {
    PaperGraph::from_edges(
        "p",
        2000,
        edges.iter().map(|&(s, t)| (vocabulary_code(labels[s]), vocabulary_code(labels[t]))),
    )
}

fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

#[test]
fn chain_counts_closed_form() {
    for n in 1..=12usize {
        let edges: Vec<_> = (0..n).map(|i| (i, i + 1)).collect();
        let stats = path_stats(&to_graph(&identity(n + 1), &edges), DEFAULT_PATH_CAP).unwrap().unwrap();
        assert_eq!(stats.num_paths, (n * (n + 1) / 2) as u64);
        assert_eq!(stats.longest, n);
    }
}

#[test]
fn path_cap_is_an_error() {
    // Complete digraph on 9 nodes has far more than 1000 simple paths.
    let edges: Vec<_> = (0..9).flat_map(|s| (0..9).filter(move |&t| t != s).map(move |t| (s, t))).collect();
    assert!(path_stats(&to_graph(&identity(9), &edges), 1000).is_err());
}

proptest! {
    #[test]
    fn paths_match_exhaustive_oracle((n, edges) in small_graph()) {
        let g = to_graph(&identity(n), &edges);
        let got = path_stats(&g, DEFAULT_PATH_CAP).unwrap();
        let simple: BTreeSet<(usize, usize)> = edges.iter().copied().filter(|(s, t)| s != t).collect();
        if simple.is_empty() {
            prop_assert!(got.is_none());
        } else {
            let (count, longest) = path_oracle(n, &simple);
            let got = got.unwrap();
            prop_assert_eq!(got.num_paths, count);
            prop_assert_eq!(got.longest, longest);
        }
    }

    #[test]
    fn adding_an_edge_never_lowers_paths((n, edges) in small_graph(), s in 0usize..7, t in 0usize..7) {
        let (s, t) = (s % n, t % n);
        let before = path_stats(&to_graph(&identity(n), &edges), DEFAULT_PATH_CAP).unwrap();
        let mut more = edges.clone();
        more.push((s, t));
        let after = path_stats(&to_graph(&identity(n), &more), DEFAULT_PATH_CAP).unwrap();
        if let Some(b) = before {
            let a = after.unwrap();
            prop_assert!(a.num_paths >= b.num_paths);
            prop_assert!(a.longest >= b.longest);
        }
    }

    #[test]
    fn causal_view_never_has_more_edges(seed in any::<u64>()) {
        for rec in random_corpus(seed, 20, 2, 7) {
            let full = build_graph(&rec, View::Full);
            let causal = build_graph(&rec, View::Causal);
            let noncausal = build_graph(&rec, View::NonCausal);
            prop_assert!(causal.claim_edges() <= full.claim_edges());
            prop_assert!(causal.num_edges() <= full.num_edges());
            prop_assert_eq!(causal.claim_edges() + noncausal.claim_edges(), full.claim_edges());
            prop_assert_eq!(full.num_causal_edges(), causal.num_edges());
            prop_assert!(full.edge_keys().all(|(s, t)| s != t));
        }
    }

    #[test]
    fn source_sink_ratio_ignores_labels(
        (n, edges) in small_graph(),
        perm in Just((0..40).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let a = source_sink_ratio(&to_graph(&identity(n), &edges), DEFAULT_EPSILON).unwrap();
        let b = source_sink_ratio(&to_graph(&perm, &edges), DEFAULT_EPSILON).unwrap();
        prop_assert_eq!(a, b);
        let pa = path_stats(&to_graph(&identity(n), &edges), DEFAULT_PATH_CAP).unwrap();
        let pb = path_stats(&to_graph(&perm, &edges), DEFAULT_PATH_CAP).unwrap();
        prop_assert_eq!(pa, pb);
    }
}
