//! Chronological frontier of previously seen edges, paths and subgraph
//! shapes, and novelty scores against it.
//!
//! The frontier is year-granular: every paper of year `t` is scored against
//! the union of all papers from years `< t`, and the year's own structures
//! are absorbed only after the whole year has been scored.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::concept::ConceptCode;
use crate::error::{Error, Result};
use crate::graph::{simple_paths_up_to, Edge, IndexedGraph, PaperGraph, View, DEFAULT_PATH_CAP};

pub const DEFAULT_PATH_LEN: usize = 3;
pub const DEFAULT_SUBGRAPH_SIZE: usize = 3;
pub const DEFAULT_SUBSET_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoveltyParams {
    pub path_len: usize,
    pub subgraph_size: usize,
    pub path_cap: u64,
    pub subset_cap: u64,
}

impl Default for NoveltyParams {
    fn default() -> Self {
        NoveltyParams {
            path_len: DEFAULT_PATH_LEN,
            subgraph_size: DEFAULT_SUBGRAPH_SIZE,
            path_cap: DEFAULT_PATH_CAP,
            subset_cap: DEFAULT_SUBSET_CAP,
        }
    }
}

impl NoveltyParams {
    pub fn validate(&self) -> Result<()> {
        if self.path_len < 1 {
            return Err(Error::InvalidPathLength);
        }
        check_subgraph_size(self.subgraph_size)
    }
}

fn check_subgraph_size(k: usize) -> Result<()> {
    if (2..=4).contains(&k) {
        Ok(())
    } else {
        Err(Error::UnsupportedSubgraphSize(k))
    }
}

/// Count of novel items and the denominator they are drawn from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NovelCount {
    pub novel: usize,
    pub total: usize,
}

impl NovelCount {
    /// `None` when the denominator is zero.
    pub fn prop(&self) -> Option<f64> {
        (self.total > 0).then(|| self.novel as f64 / self.total as f64)
    }
}

/// Novelty of one paper under one view.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Novelty {
    pub edges: NovelCount,
    pub paths: NovelCount,
    pub subgraphs: NovelCount,
}

/// Renders a node sequence as `u->v->w`.
pub fn path_string<'a, I>(codes: I) -> String
where
    I: IntoIterator<Item = &'a ConceptCode>,
{
    codes
        .into_iter()
        .map(ConceptCode::as_str)
        .collect::<Vec<_>>()
        .join("->")
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Canonical form of a `k`-node directed graph given as edges over local
/// indices `0..k`: the lexicographically smallest row-major adjacency
/// bitstring over all `k!` relabelings.
pub fn canonical_signature(k: usize, edges: &[(usize, usize)]) -> Result<String> {
    check_subgraph_size(k)?;
    let mut adj = vec![false; k * k];
    for &(s, t) in edges {
        if s >= k || t >= k {
            return Err(Error::InvalidParameter {
                name: "edges",
                reason: format!("edge ({s}, {t}) outside 0..{k}"),
            });
        }
        adj[s * k + t] = true;
    }
    Ok(min_relabeling(k, &adj, &permutations(k)))
}

fn min_relabeling(k: usize, adj: &[bool], perms: &[Vec<usize>]) -> String {
    let mut best: Option<Vec<u8>> = None;
    let mut bits = vec![0u8; k * k];
    for perm in perms {
        // perm[i] is the original node placed at position i.
        for i in 0..k {
            for j in 0..k {
                bits[i * k + j] = if adj[perm[i] * k + perm[j]] { b'1' } else { b'0' };
            }
        }
        if best.as_ref().is_none_or(|b| bits < *b) {
            best = Some(bits.clone());
        }
    }
    String::from_utf8(best.expect("k >= 2 has permutations")).expect("ascii")
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).unwrap_or(u64::MAX)
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Signatures of all induced `k`-node subgraphs that contain at least one
/// edge, one entry per node subset.
pub fn subgraph_signatures(graph: &PaperGraph, k: usize, subset_cap: u64) -> Result<Vec<String>> {
    check_subgraph_size(k)?;
    let g = graph.indexed();
    if binomial(g.len(), k) > subset_cap {
        return Err(Error::ResourceCap {
            paper_id: graph.paper_id.clone(),
            what: "node subset count",
            cap: subset_cap,
        });
    }
    let perms = permutations(k);
    let mut out = Vec::new();
    let mut adj = vec![false; k * k];
    for_each_combination(g.len(), k, |subset| {
        let mut any = false;
        for (i, &u) in subset.iter().enumerate() {
            for (j, &v) in subset.iter().enumerate() {
                let e = i != j && g.has_edge(u, v);
                adj[i * k + j] = e;
                any |= e;
            }
        }
        if any {
            out.push(min_relabeling(k, &adj, &perms));
        }
    });
    Ok(out)
}

/// Canonical strings of all simple paths with 1..=`max_len` edges.
pub fn path_strings(graph: &PaperGraph, max_len: usize, cap: u64) -> Result<Vec<String>> {
    if max_len < 1 {
        return Err(Error::InvalidPathLength);
    }
    let g: IndexedGraph = graph.indexed();
    let paths = simple_paths_up_to(&g.adj, max_len, cap).ok_or_else(|| Error::ResourceCap {
        paper_id: graph.paper_id.clone(),
        what: "bounded path count",
        cap,
    })?;
    Ok(paths
        .iter()
        .map(|p| path_string(p.iter().map(|&i| &g.labels[i])))
        .collect())
}

/// Exact sets of everything seen in strictly earlier years, for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerState {
    pub view: View,
    pub params: NoveltyParams,
    pub seen_edges: BTreeSet<Edge>,
    pub seen_paths: BTreeSet<String>,
    pub seen_signatures: BTreeSet<String>,
    /// Last year absorbed into the sets.
    pub through_year: Option<i32>,
}

struct Structures {
    edges: Vec<Edge>,
    paths: Vec<String>,
    signatures: Vec<String>,
}

impl LedgerState {
    pub fn new(view: View, params: NoveltyParams) -> Result<Self> {
        params.validate()?;
        Ok(LedgerState {
            view,
            params,
            seen_edges: BTreeSet::new(),
            seen_paths: BTreeSet::new(),
            seen_signatures: BTreeSet::new(),
            through_year: None,
        })
    }

    fn structures(&self, graph: &PaperGraph) -> Result<Structures> {
        Ok(Structures {
            edges: graph.edge_keys().cloned().collect(),
            paths: path_strings(graph, self.params.path_len, self.params.path_cap)?,
            signatures: subgraph_signatures(graph, self.params.subgraph_size, self.params.subset_cap)?,
        })
    }

    fn score_structures(&self, s: &Structures) -> Novelty {
        Novelty {
            edges: NovelCount {
                novel: s.edges.iter().filter(|e| !self.seen_edges.contains(*e)).count(),
                total: s.edges.len(),
            },
            paths: NovelCount {
                novel: s.paths.iter().filter(|p| !self.seen_paths.contains(*p)).count(),
                total: s.paths.len(),
            },
            subgraphs: NovelCount {
                novel: s
                    .signatures
                    .iter()
                    .filter(|p| !self.seen_signatures.contains(*p))
                    .count(),
                total: s.signatures.len(),
            },
        }
    }

    /// Scores one graph against the current frontier without updating it.
    pub fn score(&self, graph: &PaperGraph) -> Result<Novelty> {
        Ok(self.score_structures(&self.structures(graph)?))
    }

    /// Scores every paper of `year` against the prior-years frontier, then
    /// absorbs the year's structures. Papers within the year do not see each
    /// other.
    pub fn advance_year(&mut self, year: i32, papers: &[PaperGraph]) -> Result<Vec<Novelty>> {
        if let Some(through) = self.through_year {
            if year <= through {
                return Err(Error::YearRegression {
                    through_year: through,
                    year,
                });
            }
        }
        if let Some(p) = papers.iter().find(|p| p.year != year) {
            return Err(Error::MixedYears {
                first: year,
                other: p.year,
            });
        }
        let structures: Vec<Structures> = papers
            .par_iter()
            .map(|g| self.structures(g))
            .collect::<Result<_>>()?;
        let scores = structures
            .par_iter()
            .map(|s| self.score_structures(s))
            .collect();
        for s in structures {
            self.seen_edges.extend(s.edges);
            self.seen_paths.extend(s.paths);
            self.seen_signatures.extend(s.signatures);
        }
        self.through_year = Some(year);
        Ok(scores)
    }

    /// Writes the frontier as section-tagged sorted lines.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# claimgraph frontier")?;
        writeln!(out, "view={}", self.view)?;
        match self.through_year {
            Some(y) => writeln!(out, "through_year={y}")?,
            None => writeln!(out, "through_year=")?,
        }
        writeln!(out, "path_len={}", self.params.path_len)?;
        writeln!(out, "subgraph_size={}", self.params.subgraph_size)?;
        writeln!(out, "[edges]")?;
        for (s, t) in &self.seen_edges {
            writeln!(out, "{s}->{t}")?;
        }
        writeln!(out, "[paths]")?;
        for p in &self.seen_paths {
            writeln!(out, "{p}")?;
        }
        writeln!(out, "[signatures]")?;
        for s in &self.seen_signatures {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }

    /// Reads a frontier written by [`LedgerState::write_to`]. Caps come from
    /// `defaults`; path length and subgraph size come from the file.
    pub fn read_from<R: BufRead>(input: R, defaults: NoveltyParams) -> Result<Self> {
        let mut ledger = LedgerState::new(View::Full, defaults)?;
        let mut section = "";
        let bad = |line: usize, message: String| Error::Schema { line, message };
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let n = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[edges]" | "[paths]" | "[signatures]" => {
                    section = match line {
                        "[edges]" => "edges",
                        "[paths]" => "paths",
                        _ => "signatures",
                    };
                    continue;
                }
                _ => {}
            }
            match section {
                "" => {
                    let (key, value) = line
                        .split_once('=')
                        .ok_or_else(|| bad(n, format!("expected key=value, got {line:?}")))?;
                    let num = |v: &str| v.parse::<usize>().map_err(|_| bad(n, format!("bad {key}: {v:?}")));
                    match key {
                        "view" => ledger.view = value.parse()?,
                        "through_year" if value.is_empty() => ledger.through_year = None,
                        "through_year" => {
                            ledger.through_year =
                                Some(value.parse().map_err(|_| bad(n, format!("bad year {value:?}")))?)
                        }
                        "path_len" => ledger.params.path_len = num(value)?,
                        "subgraph_size" => ledger.params.subgraph_size = num(value)?,
                        _ => return Err(bad(n, format!("unknown key {key:?}"))),
                    }
                }
                "edges" => {
                    let (s, t) = line
                        .split_once("->")
                        .ok_or_else(|| bad(n, format!("bad edge {line:?}")))?;
                    ledger.seen_edges.insert((ConceptCode::new(s)?, ConceptCode::new(t)?));
                }
                "paths" => {
                    ledger.seen_paths.insert(line.to_string());
                }
                _ => {
                    ledger.seen_signatures.insert(line.to_string());
                }
            }
        }
        ledger.params.validate()?;
        Ok(ledger)
    }
}

/// Novel-path count and proportion for one graph against a ledger.
pub fn novel_paths(graph: &PaperGraph, ledger: &LedgerState, path_len: usize) -> Result<(usize, Option<f64>)> {
    let paths = path_strings(graph, path_len, ledger.params.path_cap)?;
    let c = NovelCount {
        novel: paths.iter().filter(|p| !ledger.seen_paths.contains(*p)).count(),
        total: paths.len(),
    };
    Ok((c.novel, c.prop()))
}

/// Novel-subgraph count and proportion for one graph against a ledger.
pub fn novel_subgraphs(graph: &PaperGraph, ledger: &LedgerState, k: usize) -> Result<(usize, Option<f64>)> {
    let sigs = subgraph_signatures(graph, k, ledger.params.subset_cap)?;
    let c = NovelCount {
        novel: sigs.iter().filter(|s| !ledger.seen_signatures.contains(*s)).count(),
        total: sigs.len(),
    };
    Ok((c.novel, c.prop()))
}
