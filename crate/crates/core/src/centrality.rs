//! Cumulative prior-year concept graphs and node centralities on them.

use std::collections::{BTreeMap, BTreeSet};

use crate::concept::ConceptCode;
use crate::error::{Error, Result};
use crate::graph::{build_graph, Edge, PaperGraph, View};
use crate::ingest::PaperRecord;

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 1000;

/// Union of collapsed edges of all papers absorbed so far, for one view.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CumulativeGraph {
    nodes: BTreeSet<ConceptCode>,
    edges: BTreeSet<Edge>,
    pub through_year: Option<i32>,
}

impl CumulativeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges<I: IntoIterator<Item = Edge>>(edges: I) -> Self {
        let mut g = CumulativeGraph::new();
        for (s, t) in edges {
            if s != t {
                g.nodes.insert(s.clone());
                g.nodes.insert(t.clone());
                g.edges.insert((s, t));
            }
        }
        g
    }

    pub fn nodes(&self) -> &BTreeSet<ConceptCode> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a year's papers. Years must strictly increase.
    pub fn absorb(&mut self, year: i32, papers: &[PaperGraph]) -> Result<()> {
        if let Some(through) = self.through_year {
            if year <= through {
                return Err(Error::YearRegression {
                    through_year: through,
                    year,
                });
            }
        }
        for p in papers {
            if p.year != year {
                return Err(Error::MixedYears {
                    first: year,
                    other: p.year,
                });
            }
            self.nodes.extend(p.nodes().iter().cloned());
            self.edges.extend(p.edge_keys().cloned());
        }
        self.through_year = Some(year);
        Ok(())
    }

    fn index(&self) -> (Vec<&ConceptCode>, BTreeMap<&ConceptCode, usize>) {
        let labels: Vec<&ConceptCode> = self.nodes.iter().collect();
        let pos = labels.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        (labels, pos)
    }

    /// Sorted, deduplicated neighbor lists of the undirected projection.
    pub fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let (labels, pos) = self.index();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); labels.len()];
        for (s, t) in &self.edges {
            let (i, j) = (pos[s], pos[t]);
            adj[i].insert(j);
            adj[j].insert(i);
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Directed out-neighbor lists.
    pub fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let (labels, pos) = self.index();
        let mut adj = vec![Vec::new(); labels.len()];
        for (s, t) in &self.edges {
            adj[pos[s]].push(pos[t]);
        }
        adj
    }

    fn label_scores(&self, scores: Vec<f64>) -> BTreeMap<ConceptCode, f64> {
        self.nodes.iter().cloned().zip(scores).collect()
    }
}

fn relative_l1_change(new: &[f64], old: &[f64]) -> f64 {
    let diff: f64 = new.iter().zip(old).map(|(a, b)| (a - b).abs()).sum();
    let scale: f64 = new.iter().map(|a| a.abs()).sum();
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Eigenvector centrality on the undirected projection, scaled so the
/// largest score is 1. Isolated nodes score 0.
///
/// Iterates with `A + I` rather than `A`: same eigenvectors, but the
/// dominant eigenvalue is strictly largest in magnitude even on bipartite
/// graphs, where plain power iteration oscillates.
///
/// Each connected component is iterated on its own and the pieces are
/// combined into the limit global power iteration from the all-ones vector
/// would reach: components whose spectral radius falls short of the largest
/// decay to 0, tied components keep their projection onto the start vector.
pub fn eigenvector_centrality(graph: &CumulativeGraph) -> Result<BTreeMap<ConceptCode, f64>> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let adj = graph.undirected_adjacency();
    let mut scores = vec![0.0; adj.len()];
    let mut parts = Vec::new();
    for comp in components(&adj) {
        let (x, radius) = component_eigenvector(&adj, &comp)?;
        parts.push((comp, x, radius));
    }
    let top = parts.iter().map(|p| p.2).fold(0.0, f64::max);
    for (comp, x, radius) in &parts {
        if *radius < top * (1.0 - 1e-9) {
            continue;
        }
        // Weight of the start vector along the unit eigenvector.
        let sum: f64 = x.iter().sum();
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        for (&i, v) in comp.iter().zip(x) {
            scores[i] = v * sum / norm2;
        }
    }
    let max = scores.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        scores.iter_mut().for_each(|v| *v /= max);
    }
    Ok(graph.label_scores(scores))
}

/// Connected components with at least one edge, nodes in ascending order.
fn components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    let mut out = Vec::new();
    for root in 0..adj.len() {
        if seen[root] || adj[root].is_empty() {
            continue;
        }
        seen[root] = true;
        let mut comp = vec![root];
        let mut next = 0;
        while next < comp.len() {
            for &j in &adj[comp[next]] {
                if !seen[j] {
                    seen[j] = true;
                    comp.push(j);
                }
            }
            next += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Max-normalized dominant eigenvector of `A + I` restricted to one
/// component, with its Rayleigh quotient.
fn component_eigenvector(adj: &[Vec<usize>], comp: &[usize]) -> Result<(Vec<f64>, f64)> {
    let local: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let nbrs: Vec<Vec<usize>> = comp.iter().map(|i| adj[*i].iter().map(|j| local[j]).collect()).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        for (k, ns) in nbrs.iter().enumerate() {
            out[k] = x[k] + ns.iter().map(|&j| x[j]).sum::<f64>();
        }
    };
    let mut x = vec![1.0; comp.len()];
    let mut next = vec![0.0; comp.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        apply(&x, &mut next);
        let max = next.iter().cloned().fold(0.0, f64::max);
        next.iter_mut().for_each(|v| *v /= max);
        residual = relative_l1_change(&next, &x);
        std::mem::swap(&mut x, &mut next);
        if residual < TOLERANCE {
            apply(&x, &mut next);
            let num: f64 = x.iter().zip(&next).map(|(a, b)| a * b).sum();
            let den: f64 = x.iter().map(|a| a * a).sum();
            return Ok((x, num / den));
        }
    }
    Err(Error::NoConvergence {
        method: "eigenvector centrality",
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// PageRank on the directed graph with uniform teleportation. Mass held by
/// nodes without out-edges is spread uniformly. Scores sum to 1.
pub fn pagerank(graph: &CumulativeGraph, damping: f64) -> Result<BTreeMap<ConceptCode, f64>> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::InvalidParameter {
            name: "damping",
            reason: format!("must lie in (0, 1), got {damping}"),
        });
    }
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let out = graph.out_adjacency();
    let n = out.len();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let dangling: f64 = out
            .iter()
            .zip(&x)
            .filter(|(o, _)| o.is_empty())
            .map(|(_, v)| v)
            .sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        next.iter_mut().for_each(|v| *v = base);
        for (j, targets) in out.iter().enumerate() {
            if targets.is_empty() {
                continue;
            }
            let share = damping * x[j] / targets.len() as f64;
            for &i in targets {
                next[i] += share;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        residual = relative_l1_change(&next, &x);
        std::mem::swap(&mut x, &mut next);
        if residual < TOLERANCE {
            return Ok(graph.label_scores(x));
        }
    }
    Err(Error::NoConvergence {
        method: "pagerank",
        iterations: MAX_ITERATIONS,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralityStats {
    pub mean: f64,
    /// Population variance (divides by the node count).
    pub var: f64,
}

/// Mean and population variance of prior-year scores over a paper's nodes.
/// Nodes absent from `scores` count as 0. `None` for an empty node set.
pub fn paper_centrality_stats(
    nodes: &BTreeSet<ConceptCode>,
    scores: &BTreeMap<ConceptCode, f64>,
) -> Option<CentralityStats> {
    if nodes.is_empty() {
        return None;
    }
    let values: Vec<f64> = nodes
        .iter()
        .map(|v| scores.get(v).copied().unwrap_or(0.0))
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(CentralityStats { mean, var })
}

/// Z-scores over the non-missing entries using the sample standard
/// deviation. Everything is missing if fewer than two values are present or
/// the values are constant.
pub fn standardize(values: &[Option<f64>]) -> Vec<Option<f64>> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let n = present.len();
    if n < 2 {
        return vec![None; values.len()];
    }
    let mean = present.iter().sum::<f64>() / n as f64;
    let sd = (present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return vec![None; values.len()];
    }
    values.iter().map(|v| v.map(|v| (v - mean) / sd)).collect()
}

/// Rescales to [0, 1] by `(x - min) / (max - min)`.
pub fn min_max_normalize(values: &[f64], node: &str) -> Result<Vec<f64>> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || max <= min {
        return Err(Error::DegenerateNormalization {
            node: node.to_string(),
        });
    }
    Ok(values.iter().map(|v| (v - min) / (max - min)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub year: i32,
    pub raw: f64,
    pub normalized: f64,
}

/// Yearly eigenvector centrality of `node` in the cumulative graph through
/// each year (inclusive), from the node's first appearance on, min-max
/// normalized.
pub fn node_centrality_series(
    records: &[PaperRecord],
    node: &ConceptCode,
    view: View,
) -> Result<Vec<SeriesPoint>> {
    let mut by_year: BTreeMap<i32, Vec<PaperGraph>> = BTreeMap::new();
    for r in records {
        by_year.entry(r.year).or_default().push(build_graph(r, view));
    }
    let mut cumulative = CumulativeGraph::new();
    let mut raw: Vec<(i32, f64)> = Vec::new();
    for (year, papers) in &by_year {
        cumulative.absorb(*year, papers)?;
        if !cumulative.nodes().contains(node) {
            continue;
        }
        let scores = eigenvector_centrality(&cumulative)?;
        raw.push((*year, scores[node]));
    }
    if raw.is_empty() {
        return Err(Error::UnknownNode(node.to_string()));
    }
    let values: Vec<f64> = raw.iter().map(|(_, v)| *v).collect();
    let normalized = min_max_normalize(&values, node.as_str())?;
    Ok(raw
        .into_iter()
        .zip(normalized)
        .map(|((year, raw), normalized)| SeriesPoint {
            year,
            raw,
            normalized,
        })
        .collect())
}
