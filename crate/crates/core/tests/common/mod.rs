//! Independent oracles shared by the integration tests. Nothing here calls
//! the library routine it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use claimgraph::graph::View;
use claimgraph::ingest::{ClaimEdge, MethodClassifier, PaperRecord, Relationship};
use claimgraph::ConceptCode;
use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn code(s: &str) -> ConceptCode {
    ConceptCode::new(s).unwrap()
}

/// Builds a record from `(source, sink, method)` triples.
pub fn record(id: &str, year: i32, edges: &[(&str, &str, &str)]) -> PaperRecord {
    let cls = MethodClassifier::default();
    PaperRecord::new(
        id,
        year,
        edges
            .iter()
            .map(|(s, t, m)| ClaimEdge::new(code(s), code(t), [*m], Relationship::Correlation, &cls))
            .collect(),
    )
}

/// Edge set of a view, straight from the claims.
pub fn view_edges(rec: &PaperRecord, view: View) -> BTreeSet<(ConceptCode, ConceptCode)> {
    rec.edges
        .iter()
        .filter(|e| e.source != e.sink)
        .filter(|e| match view {
            View::Full => true,
            View::Causal => e.is_causal(),
            View::NonCausal => !e.is_causal(),
        })
        .map(|e| (e.source.clone(), e.sink.clone()))
        .collect()
}

/// Every sequence of distinct nodes with 2..=`max_nodes` entries whose
/// consecutive pairs are all edges. Enumerates all such sequences without
/// pruning on edges.
pub fn simple_paths_bounded(n: usize, edges: &BTreeSet<(usize, usize)>, max_nodes: usize) -> Vec<Vec<usize>> {
    fn grow(
        n: usize,
        seq: &mut Vec<usize>,
        used: &mut Vec<bool>,
        edges: &BTreeSet<(usize, usize)>,
        max_nodes: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if seq.len() >= 2 && seq.windows(2).all(|w| edges.contains(&(w[0], w[1]))) {
            out.push(seq.clone());
        }
        if seq.len() == max_nodes {
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                seq.push(v);
                grow(n, seq, used, edges, max_nodes, out);
                seq.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    grow(n, &mut Vec::new(), &mut vec![false; n], edges, max_nodes, &mut out);
    out
}

pub fn all_simple_paths(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    simple_paths_bounded(n, edges, n)
}

/// `(count, longest)` over all simple paths.
pub fn path_oracle(n: usize, edges: &BTreeSet<(usize, usize)>) -> (u64, usize) {
    let paths = all_simple_paths(n, edges);
    (paths.len() as u64, paths.iter().map(|p| p.len() - 1).max().unwrap_or(0))
}

pub fn labeled_paths(edges: &BTreeSet<(ConceptCode, ConceptCode)>, max_len: usize) -> Vec<String> {
    let nodes: Vec<&ConceptCode> = edges.iter().flat_map(|(a, b)| [a, b]).collect::<BTreeSet<_>>().into_iter().collect();
    let idx: BTreeMap<&ConceptCode, usize> = nodes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let e: BTreeSet<(usize, usize)> = edges.iter().map(|(a, b)| (idx[a], idx[b])).collect();
    simple_paths_bounded(nodes.len(), &e, max_len + 1)
        .into_iter()
        .map(|p| p.iter().map(|&i| nodes[i].as_str()).collect::<Vec<_>>().join("->"))
        .collect()
}

fn all_perms(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..k)
                    .filter(|v| !p.contains(v))
                    .map(|v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// Is there a relabeling mapping `a` onto `b`?
pub fn isomorphic(k: usize, a: &BTreeSet<(usize, usize)>, b: &BTreeSet<(usize, usize)>) -> bool {
    a.len() == b.len()
        && all_perms(k)
            .iter()
            .any(|p| a.iter().all(|&(s, t)| b.contains(&(p[s], p[t]))))
}

/// Induced subgraphs on every `k`-subset of nodes that have an edge, as
/// local edge sets.
pub fn induced_subgraphs(edges: &BTreeSet<(ConceptCode, ConceptCode)>, k: usize) -> Vec<BTreeSet<(usize, usize)>> {
    let nodes: Vec<&ConceptCode> = edges.iter().flat_map(|(a, b)| [a, b]).collect::<BTreeSet<_>>().into_iter().collect();
    let n = nodes.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut local = BTreeSet::new();
        for (i, &u) in members.iter().enumerate() {
            for (j, &v) in members.iter().enumerate() {
                if edges.contains(&(nodes[u].clone(), nodes[v].clone())) {
                    local.insert((i, j));
                }
            }
        }
        if !local.is_empty() {
            out.push(local);
        }
    }
    out
}

/// Per-paper novelty recomputed from scratch: for every distinct year the
/// union over all papers of strictly earlier years is rebuilt, and each paper
/// of that year is compared with it. Returns `[(novel, total); 3]` for
/// edges, paths and subgraphs, keyed by paper id.
pub fn novelty_oracle(records: &[PaperRecord], view: View, path_len: usize, k: usize) -> BTreeMap<String, [(usize, usize); 3]> {
    let years: BTreeSet<i32> = records.iter().map(|r| r.year).collect();
    let mut out = BTreeMap::new();
    for year in years {
        let mut seen_edges = BTreeSet::new();
        let mut seen_paths = BTreeSet::new();
        let mut classes: Vec<BTreeSet<(usize, usize)>> = Vec::new();
        for q in records.iter().filter(|q| q.year < year) {
            let e = view_edges(q, view);
            seen_paths.extend(labeled_paths(&e, path_len));
            for s in induced_subgraphs(&e, k) {
                if !classes.iter().any(|c| isomorphic(k, c, &s)) {
                    classes.push(s);
                }
            }
            seen_edges.extend(e);
        }
        for p in records.iter().filter(|p| p.year == year) {
            let e = view_edges(p, view);
            let paths = labeled_paths(&e, path_len);
            let subs = induced_subgraphs(&e, k);
            out.insert(
                p.paper_id.clone(),
                [
                    (e.iter().filter(|x| !seen_edges.contains(*x)).count(), e.len()),
                    (paths.iter().filter(|x| !seen_paths.contains(*x)).count(), paths.len()),
                    (
                        subs.iter().filter(|s| !classes.iter().any(|c| isomorphic(k, c, s))).count(),
                        subs.len(),
                    ),
                ],
            );
        }
    }
    out
}

/// Gap share recounted from scratch over strictly earlier papers.
pub fn gap_oracle(records: &[PaperRecord], paper: &PaperRecord, view: View, tau: u64) -> Option<f64> {
    let nodes = |r: &PaperRecord| -> BTreeSet<ConceptCode> {
        view_edges(r, view).into_iter().flat_map(|(a, b)| [a, b]).collect()
    };
    let prior: Vec<BTreeSet<ConceptCode>> = records.iter().filter(|q| q.year < paper.year).map(nodes).collect();
    let mine: Vec<ConceptCode> = nodes(paper).into_iter().collect();
    let mut pairs = 0;
    let mut gaps = 0;
    for i in 0..mine.len() {
        for j in i + 1..mine.len() {
            pairs += 1;
            let count = prior.iter().filter(|ns| ns.contains(&mine[i]) && ns.contains(&mine[j])).count() as u64;
            if count < tau {
                gaps += 1;
            }
        }
    }
    (pairs > 0).then(|| gaps as f64 / pairs as f64)
}

/// Random corpus over `years` consecutive years with at most `max_nodes`
/// distinct codes per paper and a mix of causal and non-causal claims.
pub fn random_corpus(seed: u64, papers: usize, years: i32, max_nodes: usize) -> Vec<PaperRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..14).map(|i| format!("{}{}", (b'A' + i as u8) as char, 1 + i % 3)).collect();
    let methods = ["DiD", "OLS", "RCT", "Theoretical", "IV"];
    (0..papers)
        .map(|i| {
            let k = rng.random_range(2..=max_nodes);
            let nodes: Vec<&String> = vocab.choose_multiple(&mut rng, k).collect();
            let m = rng.random_range(0..=2 * k);
            let edges: Vec<(String, String, &str)> = (0..m)
                .map(|_| {
                    let s = nodes.choose(&mut rng).unwrap();
                    let t = nodes.choose(&mut rng).unwrap();
                    ((*s).clone(), (*t).clone(), *methods.choose(&mut rng).unwrap())
                })
                .collect();
            let borrowed: Vec<(&str, &str, &str)> = edges.iter().map(|(s, t, m)| (s.as_str(), t.as_str(), *m)).collect();
            record(&format!("r{i:04}"), 2000 + rng.random_range(0..years), &borrowed)
        })
        .collect()
}

/// Dominant eigenvector of a symmetric adjacency matrix, max-normalized.
pub fn dense_eigenvector(n: usize, undirected: &BTreeSet<(usize, usize)>) -> Vec<f64> {
    let mut a = DMatrix::<f64>::zeros(n, n);
    for &(i, j) in undirected {
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    let eig = a.symmetric_eigen();
    let top = (0..n)
        .max_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
        .unwrap();
    let v: Vec<f64> = eig.eigenvectors.column(top).iter().map(|x| x.abs()).collect();
    let max = v.iter().cloned().fold(0.0, f64::max);
    v.iter().map(|x| x / max).collect()
}

/// PageRank by a direct solve of `(I - d S) x = (1 - d) / n`, where `S` is
/// column-stochastic with uniform columns for dangling nodes.
pub fn dense_pagerank(n: usize, directed: &BTreeSet<(usize, usize)>, d: f64) -> Vec<f64> {
    let mut out_deg = vec![0usize; n];
    for &(s, _) in directed {
        out_deg[s] += 1;
    }
    let mut s = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        if out_deg[j] == 0 {
            for i in 0..n {
                s[(i, j)] = 1.0 / n as f64;
            }
        }
    }
    for &(src, dst) in directed {
        s[(dst, src)] += 1.0 / out_deg[src] as f64;
    }
    let m = DMatrix::<f64>::identity(n, n) - s * d;
    let b = DVector::<f64>::from_element(n, (1.0 - d) / n as f64);
    m.lu().solve(&b).unwrap().iter().copied().collect()
}

/// OLS via the explicit normal equations `X'X b = X'y`, returning `b` and
/// the CR0 sandwich variance scaled by `G/(G-1) (n-1)/(n-k)`.
pub fn dense_ols(x: &DMatrix<f64>, y: &DVector<f64>, clusters: &[i32]) -> (DVector<f64>, DMatrix<f64>) {
    let xtx = x.transpose() * x;
    let inv = xtx.clone().try_inverse().unwrap();
    let b = &inv * (x.transpose() * y);
    let e = y - x * &b;
    let k = x.ncols();
    let mut meat = DMatrix::<f64>::zeros(k, k);
    let groups: BTreeSet<i32> = clusters.iter().copied().collect();
    for g in &groups {
        let mut score = DVector::<f64>::zeros(k);
        for (i, c) in clusters.iter().enumerate() {
            if c == g {
                score += x.row(i).transpose() * e[i];
            }
        }
        meat += &score * score.transpose();
    }
    let (gf, n, kf) = (groups.len() as f64, x.nrows() as f64, k as f64);
    let v = &inv * meat * &inv * (gf / (gf - 1.0) * (n - 1.0) / (n - kf));
    (b, v)
}

/// Design with the regressor first, then one dummy per distinct year.
pub fn dummy_design(x: &[f64], years: &[i32]) -> DMatrix<f64> {
    let distinct: Vec<i32> = years.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    DMatrix::from_fn(x.len(), distinct.len() + 1, |i, j| {
        if j == 0 {
            x[i]
        } else if years[i] == distinct[j - 1] {
            1.0
        } else {
            0.0
        }
    })
}

// Double-double arithmetic for an extended-precision cosine.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn dd_add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(a.0, b.0);
    let e = e + a.1 + b.1;
    two_sum(s, e)
}

fn dd_dot(a: &[f64], b: &[f64]) -> (f64, f64) {
    a.iter().zip(b).fold((0.0, 0.0), |acc, (x, y)| dd_add(acc, two_prod(*x, *y)))
}

/// Cosine with the dot products and norms accumulated in double-double.
pub fn dd_cosine(a: &[f64], b: &[f64]) -> f64 {
    let ab = dd_dot(a, b);
    let aa = dd_dot(a, a);
    let bb = dd_dot(b, b);
    let (na, nb) = ((aa.0 + aa.1).sqrt(), (bb.0 + bb.1).sqrt());
    (ab.0 + ab.1) / (na * nb)
}
