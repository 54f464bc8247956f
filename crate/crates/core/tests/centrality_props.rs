mod common;

use std::collections::BTreeSet;

use claimgraph::centrality::{eigenvector_centrality, pagerank, standardize, CumulativeGraph, DEFAULT_DAMPING};
use claimgraph::graph::View;
use claimgraph::pipeline::{compute_measures, MeasureParams};
use claimgraph::synthetic::vocabulary_code;
use common::*;
use proptest::prelude::*;

fn digraph() -> impl Strategy<Value = (usize, BTreeSet<(usize, usize)>)> {
    (2usize..=12).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::btree_set((0..n, 0..n).prop_filter("no loops", |(s, t)| s != t), 1..=3 * n),
        )
    })
}

fn cumulative(labels: &[usize], edges: &BTreeSet<(usize, usize)>) -> CumulativeGraph {
    CumulativeGraph::from_edges(edges.iter().map(|&(s, t)| (vocabulary_code(labels[s]), vocabulary_code(labels[t]))))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn star_and_equal_cliques() {
    let star = CumulativeGraph::from_edges((1..=4).map(|i| (vocabulary_code(0), vocabulary_code(i))));
    let eig = eigenvector_centrality(&star).unwrap();
    assert!(close(eig[&vocabulary_code(0)], 1.0, 1e-9));
    for i in 1..=4 {
        assert!(close(eig[&vocabulary_code(i)], 0.5, 1e-9));
    }

    let clique = |base: usize| (0..4).flat_map(move |a| (0..4).filter(move |&b| b != a).map(move |b| (base + a, base + b)));
    let edges: BTreeSet<_> = clique(0).chain(clique(10)).collect();
    let eig = eigenvector_centrality(&cumulative(&(0..20).collect::<Vec<_>>(), &edges)).unwrap();
    for v in [0, 1, 2, 3, 10, 11, 12, 13] {
        assert!(close(eig[&vocabulary_code(v)], 1.0, 1e-9), "node {v}: {}", eig[&vocabulary_code(v)]);
    }
}

#[test]
fn disconnected_smaller_component_vanishes() {
    // Triangle (radius 3 with the shift) against a single edge (radius 2).
    let edges: BTreeSet<_> = [(0, 1), (1, 2), (2, 0), (5, 6)].into_iter().collect();
    let eig = eigenvector_centrality(&cumulative(&(0..10).collect::<Vec<_>>(), &edges)).unwrap();
    let mut undirected = BTreeSet::new();
    for &(s, t) in &edges {
        undirected.insert((s.min(t), s.max(t)));
    }
    let dense = dense_eigenvector(10, &undirected);
    for v in [0, 1, 2, 5, 6] {
        assert!(close(eig[&vocabulary_code(v)], dense[v], 1e-9), "node {v}");
    }
}

proptest! {
    #[test]
    fn eigenvector_ignores_labels_and_multiplicity(
        (n, edges) in digraph(),
        perm in Just((0..30).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let ident: Vec<usize> = (0..n).collect();
        let a = eigenvector_centrality(&cumulative(&ident, &edges)).unwrap();
        let b = eigenvector_centrality(&cumulative(&perm, &edges)).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for i in (0..n).filter(|&i| a.contains_key(&vocabulary_code(i))) {
            prop_assert!(close(a[&vocabulary_code(i)], b[&vocabulary_code(perm[i])], 1e-9));
        }
        // Listing every edge twice changes nothing.
        let doubled = CumulativeGraph::from_edges(
            edges.iter().chain(edges.iter()).map(|&(s, t)| (vocabulary_code(s), vocabulary_code(t))),
        );
        prop_assert_eq!(eigenvector_centrality(&doubled).unwrap(), a.clone());
        let max = a.values().cloned().fold(0.0, f64::max);
        prop_assert!(close(max, 1.0, 1e-12));
        prop_assert!(a.values().all(|v| *v >= 0.0));
    }

    #[test]
    fn pagerank_conserves_mass_and_matches_solve((n, edges) in digraph(), d in 0.05f64..0.95) {
        let ident: Vec<usize> = (0..n).collect();
        let g = cumulative(&ident, &edges);
        let pr = pagerank(&g, d).unwrap();
        prop_assert!(close(pr.values().sum::<f64>(), 1.0, 1e-9));
        // Nodes only count if they touch an edge; relabel onto that subset.
        let used: Vec<usize> = g.nodes().iter().map(|c| (0..n).find(|&i| &vocabulary_code(i) == c).unwrap()).collect();
        let local: BTreeSet<(usize, usize)> = edges
            .iter()
            .map(|&(s, t)| (used.iter().position(|&u| u == s).unwrap(), used.iter().position(|&u| u == t).unwrap()))
            .collect();
        let dense = dense_pagerank(used.len(), &local, d);
        for (k, &i) in used.iter().enumerate() {
            prop_assert!(close(pr[&vocabulary_code(i)], dense[k], 1e-8));
        }
    }

    #[test]
    fn standardized_columns_are_unit(values in prop::collection::vec(prop::option::of(-1e3f64..1e3), 0..60)) {
        let z = standardize(&values);
        prop_assert_eq!(z.len(), values.len());
        let present: Vec<f64> = z.iter().flatten().copied().collect();
        if present.is_empty() {
            return Ok(());
        }
        let n = present.len() as f64;
        let mean = present.iter().sum::<f64>() / n;
        let sd = (present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        prop_assert!(close(mean, 0.0, 1e-9));
        prop_assert!(close(sd, 1.0, 1e-9));
        for (a, b) in values.iter().zip(&z) {
            prop_assert_eq!(a.is_some(), b.is_some());
        }
    }

    #[test]
    fn later_papers_never_change_earlier_stats(seed in any::<u64>()) {
        let corpus = random_corpus(seed, 60, 4, 6);
        let cutoff = 2002;
        let early: Vec<_> = corpus.iter().filter(|r| r.year <= cutoff).cloned().collect();
        let params = MeasureParams::default();
        let all = compute_measures(&corpus, &params).unwrap();
        let part = compute_measures(&early, &params).unwrap();
        for row in &part.rows {
            let full_row = all.rows.iter().find(|r| r.paper_id == row.paper_id).unwrap();
            for view in View::ALL {
                let (a, b) = (row.view(view).unwrap(), full_row.view(view).unwrap());
                prop_assert_eq!(a.eigen, b.eigen);
                prop_assert_eq!(a.pagerank, b.pagerank);
                if let Some(s) = a.eigen {
                    prop_assert!(s.var >= 0.0);
                }
            }
        }
    }
}

#[test]
fn damping_outside_unit_interval_is_rejected() {
    let g = CumulativeGraph::from_edges([(vocabulary_code(0), vocabulary_code(1))]);
    assert!(pagerank(&g, 0.0).is_err());
    assert!(pagerank(&g, 1.0).is_err());
    assert!(pagerank(&g, DEFAULT_DAMPING).is_ok());
}
