//! Per-paper concept graphs and the narrative-complexity measures computed
//! on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::concept::ConceptCode;
use crate::error::{Error, Result};
use crate::ingest::PaperRecord;

/// Default cap on the number of simple paths enumerated per graph.
pub const DEFAULT_PATH_CAP: u64 = 1_000_000;

/// Claim-level edge filter applied before deduplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum View {
    Full,
    Causal,
    NonCausal,
}

impl View {
    pub const ALL: [View; 3] = [View::Full, View::Causal, View::NonCausal];

    pub fn as_str(self) -> &'static str {
        match self {
            View::Full => "full",
            View::Causal => "causal",
            View::NonCausal => "non-causal",
        }
    }

    /// Suffix used in column names (`num_paths_noncausal`).
    pub fn column_suffix(self) -> &'static str {
        match self {
            View::Full => "full",
            View::Causal => "causal",
            View::NonCausal => "noncausal",
        }
    }

    fn keeps(self, causal: bool) -> bool {
        match self {
            View::Full => true,
            View::Causal => causal,
            View::NonCausal => !causal,
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "full" | "all" => Ok(View::Full),
            "causal" => Ok(View::Causal),
            "non-causal" | "noncausal" => Ok(View::NonCausal),
            other => Err(Error::InvalidParameter {
                name: "view",
                reason: format!("unknown view {other:?}"),
            }),
        }
    }
}

/// Aggregated attributes of one collapsed edge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeInfo {
    pub claims: usize,
    pub causal_claims: usize,
}

impl EdgeInfo {
    pub fn is_causal(&self) -> bool {
        self.causal_claims > 0
    }
}

pub type Edge = (ConceptCode, ConceptCode);

/// Deduplicated directed concept graph of one paper under one view.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperGraph {
    pub paper_id: String,
    pub year: i32,
    pub view: View,
    nodes: BTreeSet<ConceptCode>,
    edges: BTreeMap<Edge, EdgeInfo>,
    claim_edges: usize,
    self_loops_dropped: usize,
}

impl PaperGraph {
    pub fn nodes(&self) -> &BTreeSet<ConceptCode> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<Edge, EdgeInfo> {
        &self.edges
    }

    pub fn edge_keys(&self) -> impl Iterator<Item = &Edge> {
        self.edges.keys()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_causal_edges(&self) -> usize {
        self.edges.values().filter(|e| e.is_causal()).count()
    }

    /// Claim edges kept by the view, before collapsing and excluding self-loops.
    pub fn claim_edges(&self) -> usize {
        self.claim_edges
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Builds a graph directly from edges; used by tests and synthetic data.
    pub fn from_edges<I>(paper_id: &str, year: i32, edges: I) -> Self
    where
        I: IntoIterator<Item = (ConceptCode, ConceptCode)>,
    {
        let mut g = PaperGraph {
            paper_id: paper_id.to_string(),
            year,
            view: View::Full,
            nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
            claim_edges: 0,
            self_loops_dropped: 0,
        };
        for (s, t) in edges {
            g.insert(s, t, false);
        }
        g
    }

    fn insert(&mut self, source: ConceptCode, sink: ConceptCode, causal: bool) {
        if source == sink {
            self.self_loops_dropped += 1;
            return;
        }
        self.claim_edges += 1;
        self.nodes.insert(source.clone());
        self.nodes.insert(sink.clone());
        let info = self.edges.entry((source, sink)).or_default();
        info.claims += 1;
        if causal {
            info.causal_claims += 1;
        }
    }

    /// Dense index form: node labels in sorted order, adjacency lists sorted.
    pub fn indexed(&self) -> IndexedGraph {
        let labels: Vec<ConceptCode> = self.nodes.iter().cloned().collect();
        let pos: BTreeMap<&ConceptCode, usize> =
            labels.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut adj = vec![Vec::new(); labels.len()];
        for (s, t) in self.edges.keys() {
            adj[pos[s]].push(pos[t]);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        IndexedGraph { labels, adj }
    }
}

/// Builds the view's graph: claims are filtered by the view, self-loops are
/// dropped and counted, and repeated (source, sink) pairs collapse.
pub fn build_graph(record: &PaperRecord, view: View) -> PaperGraph {
    let mut g = PaperGraph {
        paper_id: record.paper_id.clone(),
        year: record.year,
        view,
        nodes: BTreeSet::new(),
        edges: BTreeMap::new(),
        claim_edges: 0,
        self_loops_dropped: 0,
    };
    for e in record.edges.iter().filter(|e| view.keeps(e.is_causal())) {
        g.insert(e.source.clone(), e.sink.clone(), e.is_causal());
    }
    g
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedGraph {
    pub labels: Vec<ConceptCode>,
    pub adj: Vec<Vec<usize>>,
}

impl IndexedGraph {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn has_edge(&self, s: usize, t: usize) -> bool {
        self.adj[s].binary_search(&t).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStats {
    /// Distinct simple directed paths with at least one edge.
    pub num_paths: u64,
    /// Edge count of the longest simple directed path.
    pub longest: usize,
}

/// Counts simple paths by depth-first extension from every start node.
/// Returns `None` once more than `cap` paths have been seen.
pub fn count_simple_paths(adj: &[Vec<usize>], cap: u64) -> Option<PathStats> {
    struct Walk<'a> {
        adj: &'a [Vec<usize>],
        on_path: Vec<bool>,
        count: u64,
        longest: usize,
        cap: u64,
    }
    impl Walk<'_> {
        fn extend(&mut self, u: usize, depth: usize) -> bool {
            for &v in &self.adj[u] {
                if self.on_path[v] {
                    continue;
                }
                self.count += 1;
                if self.count > self.cap {
                    return false;
                }
                self.longest = self.longest.max(depth + 1);
                self.on_path[v] = true;
                let ok = self.extend(v, depth + 1);
                self.on_path[v] = false;
                if !ok {
                    return false;
                }
            }
            true
        }
    }
    let mut walk = Walk {
        adj,
        on_path: vec![false; adj.len()],
        count: 0,
        longest: 0,
        cap,
    };
    for start in 0..adj.len() {
        walk.on_path[start] = true;
        let ok = walk.extend(start, 0);
        walk.on_path[start] = false;
        if !ok {
            return None;
        }
    }
    Some(PathStats {
        num_paths: walk.count,
        longest: walk.longest,
    })
}

/// All simple paths of 1..=`max_len` edges, as node-index sequences, in
/// lexicographic order of start node then DFS order. `None` past `cap`.
pub fn simple_paths_up_to(adj: &[Vec<usize>], max_len: usize, cap: u64) -> Option<Vec<Vec<usize>>> {
    fn extend(
        adj: &[Vec<usize>],
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        max_len: usize,
        cap: u64,
        out: &mut Vec<Vec<usize>>,
    ) -> bool {
        let u = *path.last().expect("non-empty path");
        for &v in &adj[u] {
            if on_path[v] {
                continue;
            }
            path.push(v);
            out.push(path.clone());
            if out.len() as u64 > cap {
                return false;
            }
            if path.len() <= max_len {
                on_path[v] = true;
                let ok = extend(adj, path, on_path, max_len, cap, out);
                on_path[v] = false;
                if !ok {
                    return false;
                }
            }
            path.pop();
        }
        true
    }
    let mut out = Vec::new();
    let mut on_path = vec![false; adj.len()];
    for start in 0..adj.len() {
        let mut path = vec![start];
        on_path[start] = true;
        let ok = extend(adj, &mut path, &mut on_path, max_len, cap, &mut out);
        on_path[start] = false;
        if !ok {
            return None;
        }
    }
    Some(out)
}

/// Path statistics of one view's graph, or `None` if it has no edges.
pub fn path_stats(graph: &PaperGraph, cap: u64) -> Result<Option<PathStats>> {
    if graph.is_empty() {
        return Ok(None);
    }
    count_simple_paths(&graph.indexed().adj, cap)
        .map(Some)
        .ok_or_else(|| Error::ResourceCap {
            paper_id: graph.paper_id.clone(),
            what: "simple path count",
            cap,
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityMeasures {
    /// Claim edges, counted before collapsing (self-loops excluded).
    pub num_edges: usize,
    pub num_causal_edges: usize,
    pub prop_causal_edges: f64,
    pub full: Option<PathStats>,
    pub causal: Option<PathStats>,
    pub non_causal: Option<PathStats>,
}

impl ComplexityMeasures {
    pub fn view(&self, view: View) -> Option<PathStats> {
        match view {
            View::Full => self.full,
            View::Causal => self.causal,
            View::NonCausal => self.non_causal,
        }
    }
}

/// Complexity measures for a record, or `None` for a paper without edges.
pub fn complexity_measures(record: &PaperRecord, cap: u64) -> Result<Option<ComplexityMeasures>> {
    let full = build_graph(record, View::Full);
    if full.claim_edges() == 0 {
        return Ok(None);
    }
    let causal = build_graph(record, View::Causal);
    let non_causal = build_graph(record, View::NonCausal);
    let num_edges = full.claim_edges();
    let num_causal_edges = causal.claim_edges();
    Ok(Some(ComplexityMeasures {
        num_edges,
        num_causal_edges,
        prop_causal_edges: num_causal_edges as f64 / num_edges as f64,
        full: path_stats(&full, cap)?,
        causal: path_stats(&causal, cap)?,
        non_causal: path_stats(&non_causal, cap)?,
    }))
}

pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Nodes with positive out-degree over nodes with positive in-degree plus
/// `epsilon`.
pub fn source_sink_ratio(graph: &PaperGraph, epsilon: f64) -> Result<f64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be positive, got {epsilon}"),
        });
    }
    let sources: BTreeSet<&ConceptCode> = graph.edges.keys().map(|(s, _)| s).collect();
    let sinks: BTreeSet<&ConceptCode> = graph.edges.keys().map(|(_, t)| t).collect();
    Ok(sources.len() as f64 / (sinks.len() as f64 + epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::code;
    use crate::ingest::{ClaimEdge, MethodClassifier, Relationship};

    fn claim(s: &str, t: &str, methods: &[&str]) -> ClaimEdge {
        ClaimEdge::new(code(s), code(t), methods, Relationship::Correlation, &MethodClassifier::default())
    }

    fn chain(n: usize) -> Vec<Vec<usize>> {
        (0..=n).map(|i| if i < n { vec![i + 1] } else { vec![] }).collect()
    }

    #[test]
    fn chain_closed_form() {
        for n in 1..8 {
            let stats = count_simple_paths(&chain(n), DEFAULT_PATH_CAP).unwrap();
            assert_eq!(stats.num_paths, (n * (n + 1) / 2) as u64);
            assert_eq!(stats.longest, n);
        }
    }

    #[test]
    fn cycles_use_simple_paths() {
        // 0 -> 1 -> 2 -> 0: six paths, longest 2.
        let adj = vec![vec![1], vec![2], vec![0]];
        let stats = count_simple_paths(&adj, 100).unwrap();
        assert_eq!(stats, PathStats { num_paths: 6, longest: 2 });
    }

    #[test]
    fn cap_is_enforced() {
        let complete: Vec<Vec<usize>> = (0..7).map(|i| (0..7).filter(|&j| j != i).collect()).collect();
        assert!(count_simple_paths(&complete, 1000).is_none());
        let r = PaperRecord::new(
            "dense",
            2000,
            (1..8)
                .flat_map(|i| (1..8).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| claim(&format!("A{i}"), &format!("A{j}"), &[]))
                .collect(),
        );
        match complexity_measures(&r, 1000) {
            Err(Error::ResourceCap { paper_id, .. }) => assert_eq!(paper_id, "dense"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bounded_paths_match_counts() {
        let adj = vec![vec![1, 2], vec![2], vec![0]];
        let all = simple_paths_up_to(&adj, 10, 1000).unwrap();
        assert_eq!(all.len() as u64, count_simple_paths(&adj, 1000).unwrap().num_paths);
        let short = simple_paths_up_to(&adj, 1, 1000).unwrap();
        assert_eq!(short.len(), 4);
    }

    #[test]
    fn self_loops_dropped_and_counted() {
        let r = PaperRecord::new("p", 2000, vec![claim("A1", "A1", &[]), claim("A1", "B1", &[])]);
        let g = build_graph(&r, View::Full);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.self_loops_dropped(), 1);
        assert!(!g.edges().contains_key(&(code("A1"), code("A1"))));
    }

    #[test]
    fn mixed_evidence_edge_in_both_views() {
        let r = PaperRecord::new("p", 2000, vec![claim("A1", "B1", &["RCT"]), claim("A1", "B1", &["OLS"])]);
        let full = build_graph(&r, View::Full);
        assert_eq!(full.num_edges(), 1);
        assert_eq!(full.num_causal_edges(), 1);
        assert_eq!(build_graph(&r, View::Causal).num_edges(), 1);
        assert_eq!(build_graph(&r, View::NonCausal).num_edges(), 1);
    }

    #[test]
    fn edgeless_paper_is_missing() {
        let r = PaperRecord::new("p", 2000, vec![]);
        assert_eq!(complexity_measures(&r, 10).unwrap(), None);
        let g = build_graph(&r, View::Full);
        assert_eq!(source_sink_ratio(&g, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn single_edge_ratio() {
        let r = PaperRecord::new("p", 2000, vec![claim("A1", "B1", &[])]);
        let g = build_graph(&r, View::Full);
        let ratio = source_sink_ratio(&g, 1e-9).unwrap();
        assert!((ratio - 1.0).abs() < 1e-8);
        assert!(source_sink_ratio(&g, 0.0).is_err());
    }

    #[test]
    fn causal_view_has_missing_paths_when_empty() {
        let r = PaperRecord::new("p", 2000, vec![claim("A1", "B1", &["OLS"])]);
        let m = complexity_measures(&r, 100).unwrap().unwrap();
        assert_eq!(m.causal, None);
        assert_eq!(m.num_causal_edges, 0);
        assert_eq!(m.full, Some(PathStats { num_paths: 1, longest: 1 }));
    }
}
