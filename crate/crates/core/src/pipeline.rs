//! End-to-end measure computation and the artifact directory writer.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::centrality::{
    eigenvector_centrality, pagerank, paper_centrality_stats, standardize, CentralityStats, CumulativeGraph,
    DEFAULT_DAMPING,
};
use crate::concept::ConceptCode;
use crate::econometrics::{
    read_specs, run_specs, MeasureTable, Outcome, RegressionSpec, RESULT_HEADER,
};
use crate::error::{Error, Result};
use crate::frontier::{LedgerState, NoveltyParams, Novelty};
use crate::gaps::{gap_filling_prop, PairCountTable, DEFAULT_TAU};
use crate::graph::{build_graph, path_stats, source_sink_ratio, PaperGraph, PathStats, View, DEFAULT_EPSILON};
use crate::ingest::{
    merge_outcomes, read_corpus_file, IngestOptions, JournalRanks, MergeOptions, MethodClassifier, OutcomeTable,
    PaperRecord, PubTier,
};
use crate::trends::{aggregate_trends, GroupBy};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureParams {
    pub novelty: NoveltyParams,
    pub tau: u64,
    pub epsilon: f64,
    pub damping: f64,
    pub views: Vec<View>,
}

impl Default for MeasureParams {
    fn default() -> Self {
        MeasureParams {
            novelty: NoveltyParams::default(),
            tau: DEFAULT_TAU,
            epsilon: DEFAULT_EPSILON,
            damping: DEFAULT_DAMPING,
            views: View::ALL.to_vec(),
        }
    }
}

/// Measures of one paper under one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMeasures {
    pub view: View,
    pub paths: Option<PathStats>,
    pub source_sink: f64,
    pub novelty: Novelty,
    pub gap_prop: Option<f64>,
    /// Prior-year centrality over the paper's nodes; missing when no earlier
    /// year exists.
    pub eigen: Option<CentralityStats>,
    pub pagerank: Option<CentralityStats>,
    pub eigen_mean_z: Option<f64>,
    pub pagerank_mean_z: Option<f64>,
}

pub const VIEW_COLUMNS: [&str; 16] = [
    "num_paths",
    "longest_path",
    "source_sink_ratio",
    "novel_edges",
    "prop_novel_edges",
    "novel_paths",
    "prop_novel_paths",
    "novel_subgraphs",
    "prop_novel_subgraphs",
    "gap_prop",
    "eig_mean",
    "eig_var",
    "eig_mean_z",
    "pagerank_mean",
    "pagerank_var",
    "pagerank_mean_z",
];

impl ViewMeasures {
    fn values(&self) -> [Option<f64>; 16] {
        let n = &self.novelty;
        [
            self.paths.map(|p| p.num_paths as f64),
            self.paths.map(|p| p.longest as f64),
            Some(self.source_sink),
            Some(n.edges.novel as f64),
            n.edges.prop(),
            Some(n.paths.novel as f64),
            n.paths.prop(),
            Some(n.subgraphs.novel as f64),
            n.subgraphs.prop(),
            self.gap_prop,
            self.eigen.map(|s| s.mean),
            self.eigen.map(|s| s.var),
            self.eigen_mean_z,
            self.pagerank.map(|s| s.mean),
            self.pagerank.map(|s| s.var),
            self.pagerank_mean_z,
        ]
    }
}

/// One row of `measures.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureRow {
    pub paper_id: String,
    pub year: i32,
    /// Claim edges excluding self-loops; missing for edgeless papers.
    pub num_edges: Option<usize>,
    pub num_causal_edges: Option<usize>,
    pub views: Vec<ViewMeasures>,
    pub pub_tier: PubTier,
    pub citations: Option<u64>,
}

pub const BASE_COLUMNS: [&str; 3] = ["num_edges", "num_causal_edges", "prop_causal_edges"];

impl MeasureRow {
    pub fn view(&self, view: View) -> Option<&ViewMeasures> {
        self.views.iter().find(|v| v.view == view)
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        let mut out = vec![
            self.num_edges.map(|e| e as f64),
            self.num_causal_edges.map(|e| e as f64),
            self.num_edges
                .zip(self.num_causal_edges)
                .map(|(e, c)| c as f64 / e as f64),
        ];
        for v in &self.views {
            out.extend(v.values());
        }
        out
    }
}

/// Measure column names for the given views, in output order.
pub fn measure_columns(views: &[View]) -> Vec<String> {
    let mut cols: Vec<String> = BASE_COLUMNS.iter().map(|c| c.to_string()).collect();
    for v in views {
        cols.extend(VIEW_COLUMNS.iter().map(|c| format!("{c}_{}", v.column_suffix())));
    }
    cols
}

pub const NOVELTY_HEADER: [&str; 12] = [
    "paper_id",
    "year",
    "view",
    "novel_edges",
    "total_edges",
    "prop_novel_edges",
    "novel_paths",
    "total_paths",
    "prop_novel_paths",
    "novel_subgraphs",
    "total_subgraphs",
    "prop_novel_subgraphs",
];

pub fn novelty_cells(paper_id: &str, year: i32, view: View, n: &Novelty) -> Vec<String> {
    let mut rec = vec![paper_id.to_string(), year.to_string(), view.as_str().to_string()];
    for c in [n.edges, n.paths, n.subgraphs] {
        rec.push(c.novel.to_string());
        rec.push(c.total.to_string());
        rec.push(cell(c.prop()));
    }
    rec
}

pub const GAPS_HEADER: [&str; 5] = ["paper_id", "year", "view", "tau", "gap_prop"];

pub fn gap_cells(paper_id: &str, year: i32, view: View, tau: u64, prop: Option<f64>) -> [String; 5] {
    [paper_id.to_string(), year.to_string(), view.as_str().to_string(), tau.to_string(), cell(prop)]
}

/// Records sorted by (year, paper id) and grouped by year.
pub fn group_by_year(records: &[PaperRecord]) -> Vec<(i32, Vec<&PaperRecord>)> {
    let mut sorted: Vec<&PaperRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (a.year, &a.paper_id).cmp(&(b.year, &b.paper_id)));
    let mut out: Vec<(i32, Vec<&PaperRecord>)> = Vec::new();
    for r in sorted {
        match out.last_mut() {
            Some((y, v)) if *y == r.year => v.push(r),
            _ => out.push((r.year, vec![r])),
        }
    }
    out
}

/// Cumulative-graph scores through `year` (inclusive) for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityPoint {
    pub year: i32,
    pub view: View,
    pub code: ConceptCode,
    pub eigenvector: f64,
    pub pagerank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSet {
    pub params: MeasureParams,
    /// Sorted by year, then paper id.
    pub rows: Vec<MeasureRow>,
    pub centrality: Vec<CentralityPoint>,
}

fn year_ranges(records: &[&PaperRecord]) -> Vec<(i32, Range<usize>)> {
    let mut out: Vec<(i32, Range<usize>)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match out.last_mut() {
            Some((y, range)) if *y == r.year => range.end = i + 1,
            _ => out.push((r.year, i..i + 1)),
        }
    }
    out
}

struct ViewPass {
    novelty: Vec<Novelty>,
    gaps: Vec<Option<f64>>,
    eigen: Vec<Option<CentralityStats>>,
    pagerank: Vec<Option<CentralityStats>>,
    points: Vec<CentralityPoint>,
}

fn view_pass(graphs: &[PaperGraph], years: &[(i32, Range<usize>)], view: View, params: &MeasureParams) -> Result<ViewPass> {
    let mut ledger = LedgerState::new(view, params.novelty).map_err(|e| e.in_stage("novelty"))?;
    let mut pairs = PairCountTable::new();
    let mut cumulative = CumulativeGraph::new();
    let mut prior: Option<(BTreeMap<ConceptCode, f64>, BTreeMap<ConceptCode, f64>)> = None;
    let mut pass = ViewPass {
        novelty: Vec::with_capacity(graphs.len()),
        gaps: Vec::with_capacity(graphs.len()),
        eigen: Vec::with_capacity(graphs.len()),
        pagerank: Vec::with_capacity(graphs.len()),
        points: Vec::new(),
    };
    for (year, range) in years {
        let batch = &graphs[range.clone()];
        pass.novelty
            .extend(ledger.advance_year(*year, batch).map_err(|e| e.in_stage("novelty"))?);

        pass.gaps
            .extend(batch.iter().map(|g| gap_filling_prop(g, &pairs, params.tau)));
        pairs.update(*year, batch).map_err(|e| e.in_stage("gaps"))?;

        for g in batch {
            let (e, p) = match &prior {
                Some((eig, pr)) => (paper_centrality_stats(g.nodes(), eig), paper_centrality_stats(g.nodes(), pr)),
                None => (None, None),
            };
            pass.eigen.push(e);
            pass.pagerank.push(p);
        }
        cumulative.absorb(*year, batch).map_err(|e| e.in_stage("centrality"))?;
        if !cumulative.is_empty() {
            let eig = eigenvector_centrality(&cumulative).map_err(|e| e.in_stage("centrality"))?;
            let pr = pagerank(&cumulative, params.damping).map_err(|e| e.in_stage("centrality"))?;
            pass.points.extend(eig.iter().map(|(code, &ev)| CentralityPoint {
                year: *year,
                view,
                code: code.clone(),
                eigenvector: ev,
                pagerank: pr[code],
            }));
            prior = Some((eig, pr));
        }
    }
    Ok(pass)
}

/// Computes every per-paper measure. Records may arrive in any order; years
/// are processed chronologically and rows come back sorted by (year, id).
pub fn compute_measures(records: &[PaperRecord], params: &MeasureParams) -> Result<MeasureSet> {
    params.novelty.validate()?;
    if params.epsilon.is_nan() || params.epsilon <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be positive, got {}", params.epsilon),
        });
    }
    let mut sorted: Vec<&PaperRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (a.year, &a.paper_id).cmp(&(b.year, &b.paper_id)));
    let years = year_ranges(&sorted);

    let mut per_view: Vec<Vec<ViewMeasures>> = vec![Vec::with_capacity(params.views.len()); sorted.len()];
    let mut centrality = Vec::new();
    for &view in &params.views {
        let graphs: Vec<PaperGraph> = sorted.par_iter().map(|r| build_graph(r, view)).collect();
        let paths: Vec<Option<PathStats>> = graphs
            .par_iter()
            .map(|g| path_stats(g, params.novelty.path_cap))
            .collect::<Result<_>>()
            .map_err(|e| e.in_stage("measures"))?;
        let pass = view_pass(&graphs, &years, view, params)?;
        let eigen_z = standardize(&pass.eigen.iter().map(|s| s.map(|s| s.mean)).collect::<Vec<_>>());
        let pagerank_z = standardize(&pass.pagerank.iter().map(|s| s.map(|s| s.mean)).collect::<Vec<_>>());
        for (i, g) in graphs.iter().enumerate() {
            let source_sink = source_sink_ratio(g, params.epsilon).map_err(|e| e.in_stage("measures"))?;
            per_view[i].push(ViewMeasures {
                view,
                paths: paths[i],
                source_sink,
                novelty: pass.novelty[i],
                gap_prop: pass.gaps[i],
                eigen: pass.eigen[i],
                pagerank: pass.pagerank[i],
                eigen_mean_z: eigen_z[i],
                pagerank_mean_z: pagerank_z[i],
            });
        }
        centrality.extend(pass.points);
    }

    let rows = sorted
        .iter()
        .zip(per_view)
        .map(|(r, views)| {
            let full = build_graph(r, View::Full);
            let edged = full.claim_edges() > 0;
            MeasureRow {
                paper_id: r.paper_id.clone(),
                year: r.year,
                num_edges: edged.then(|| full.claim_edges()),
                num_causal_edges: edged.then(|| build_graph(r, View::Causal).claim_edges()),
                views,
                pub_tier: r.pub_tier,
                citations: r.citations,
            }
        })
        .collect();
    Ok(MeasureSet {
        params: params.clone(),
        rows,
        centrality,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MeasureSet {
    pub fn columns(&self) -> Vec<String> {
        measure_columns(&self.params.views)
    }

    /// Writes one row per paper. Missing values are empty cells.
    pub fn write_measures<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["paper_id".to_string(), "year".to_string()];
        header.extend(self.columns());
        header.extend(["pub_tier".to_string(), "citations".to_string()]);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.paper_id.clone(), r.year.to_string()];
            rec.extend(r.values().into_iter().map(cell));
            rec.push(r.pub_tier.as_str().to_string());
            rec.push(r.citations.map(|c| c.to_string()).unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long format: one row per paper and view.
    pub fn write_novelty<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(NOVELTY_HEADER)?;
        for r in &self.rows {
            for v in &r.views {
                w.write_record(novelty_cells(&r.paper_id, r.year, v.view, &v.novelty))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_gaps<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(GAPS_HEADER)?;
        for r in &self.rows {
            for v in &r.views {
                w.write_record(gap_cells(&r.paper_id, r.year, v.view, self.params.tau, v.gap_prop))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_centrality<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["through_year", "view", "code", "eigenvector", "pagerank"])?;
        for p in &self.centrality {
            w.write_record([
                &p.year.to_string(),
                p.view.as_str(),
                p.code.as_str(),
                &p.eigenvector.to_string(),
                &p.pagerank.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Column-oriented copy for the regression stage.
    pub fn to_table(&self) -> MeasureTable {
        let cols = self.columns();
        let mut columns: BTreeMap<String, Vec<Option<f64>>> =
            cols.iter().map(|c| (c.clone(), Vec::with_capacity(self.rows.len()))).collect();
        for r in &self.rows {
            for (c, v) in cols.iter().zip(r.values()) {
                columns.get_mut(c).expect("column listed").push(v);
            }
        }
        MeasureTable {
            paper_ids: self.rows.iter().map(|r| r.paper_id.clone()).collect(),
            years: self.rows.iter().map(|r| r.year).collect(),
            tiers: self.rows.iter().map(|r| r.pub_tier).collect(),
            citations: self.rows.iter().map(|r| r.citations).collect(),
            columns,
        }
    }
}

/// Regressions run when no spec file is configured: every outcome on edge
/// count and, per view, path count, novel-path share, gap share and
/// standardized prior centrality, each with and without year effects.
pub fn default_specs(views: &[View]) -> Vec<RegressionSpec> {
    let mut specs = Vec::new();
    for outcome in Outcome::ALL {
        specs.extend(RegressionSpec::paired(outcome, "num_edges", None));
        for &v in views {
            for m in ["num_paths", "prop_novel_paths", "gap_prop", "eig_mean_z"] {
                specs.extend(RegressionSpec::paired(outcome, m, Some(v)));
            }
        }
    }
    specs
}

/// Runs the specs and writes one row each. A spec that cannot be estimated
/// gets empty estimates and its reason in the `error` column.
pub fn write_regressions<W: Write>(table: &MeasureTable, specs: &[RegressionSpec], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = RESULT_HEADER.to_vec();
    header.push("error");
    w.write_record(&header)?;
    for (spec, res) in specs.iter().zip(run_specs(table, specs)) {
        match res {
            Ok(r) => {
                let mut rec = r.tidy_row().to_vec();
                rec.push(String::new());
                w.write_record(&rec)?;
            }
            Err(e) => {
                warn!("regression {} on {}: {e}", spec.outcome, spec.column());
                w.write_record([
                    spec.outcome.as_str(),
                    &spec.measure,
                    spec.view.map(View::as_str).unwrap_or(""),
                    &spec.fixed_effects.to_string(),
                    spec.clustering.as_str(),
                    "",
                    "",
                    "",
                    "",
                    "",
                    &e.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Run configuration, read from `key = value` lines. Relative paths are
/// resolved against the configuration file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub outcomes: Vec<PathBuf>,
    pub ranks: Option<PathBuf>,
    pub specs: Option<PathBuf>,
    pub params: MeasureParams,
    pub default_tier: PubTier,
    pub strict: bool,
    pub causal_methods: Option<Vec<String>>,
}

impl PipelineConfig {
    pub fn new(corpus: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            corpus: corpus.into(),
            outcomes: Vec::new(),
            ranks: None,
            specs: None,
            params: MeasureParams::default(),
            default_tier: MergeOptions::default().default_tier,
            strict: false,
            causal_methods: None,
        }
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut corpus = None;
        let mut cfg = PipelineConfig::new("");
        let resolve = |v: &str| {
            let p = Path::new(v);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let list = |v: &str| -> Vec<String> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
        };
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |what: &str| Error::Config(format!("line {}: {key}: invalid {what} {value:?}", n + 1));
            match key {
                "corpus" => corpus = Some(resolve(value)),
                "outcomes" => cfg.outcomes = list(value).iter().map(|v| resolve(v)).collect(),
                "ranks" => cfg.ranks = Some(resolve(value)),
                "specs" => cfg.specs = Some(resolve(value)),
                "path_len" => cfg.params.novelty.path_len = value.parse().map_err(|_| num("integer"))?,
                "subgraph_size" => cfg.params.novelty.subgraph_size = value.parse().map_err(|_| num("integer"))?,
                "path_cap" => cfg.params.novelty.path_cap = value.parse().map_err(|_| num("integer"))?,
                "subset_cap" => cfg.params.novelty.subset_cap = value.parse().map_err(|_| num("integer"))?,
                "tau" => cfg.params.tau = value.parse().map_err(|_| num("integer"))?,
                "epsilon" => cfg.params.epsilon = value.parse().map_err(|_| num("number"))?,
                "damping" => cfg.params.damping = value.parse().map_err(|_| num("number"))?,
                "views" => {
                    cfg.params.views = list(value).iter().map(|v| v.parse()).collect::<Result<_>>()?;
                    if cfg.params.views.is_empty() {
                        return Err(Error::Config("views: at least one view required".into()));
                    }
                }
                "default_tier" => cfg.default_tier = value.parse().map_err(Error::Config)?,
                "strict" => cfg.strict = value.parse().map_err(|_| num("boolean"))?,
                "causal_methods" => cfg.causal_methods = Some(list(value)),
                other => return Err(Error::Config(format!("line {}: unknown key {other:?}", n + 1))),
            }
        }
        cfg.corpus = corpus.ok_or_else(|| Error::Config("missing key: corpus".into()))?;
        cfg.params.novelty.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        PipelineConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn ingest_options(&self) -> IngestOptions {
        let mut opts = IngestOptions {
            strict: self.strict,
            ..IngestOptions::default()
        };
        if let Some(m) = &self.causal_methods {
            opts.classifier = MethodClassifier::with_whitelist(m);
        }
        opts
    }

    /// Parameter lines for the run manifest.
    pub fn parameter_lines(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let mut out = vec![
            ("path_len", p.novelty.path_len.to_string()),
            ("subgraph_size", p.novelty.subgraph_size.to_string()),
            ("path_cap", p.novelty.path_cap.to_string()),
            ("subset_cap", p.novelty.subset_cap.to_string()),
            ("tau", p.tau.to_string()),
            ("epsilon", p.epsilon.to_string()),
            ("damping", p.damping.to_string()),
            (
                "views",
                p.views.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(","),
            ),
            ("default_tier", self.default_tier.as_str().to_string()),
            ("strict", self.strict.to_string()),
            (
                "causal_methods",
                self.ingest_options().classifier.whitelist().collect::<Vec<_>>().join(","),
            ),
        ];
        out.extend([
            ("corpus", self.corpus.display().to_string()),
            (
                "outcomes",
                self.outcomes.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","),
            ),
            ("ranks", self.ranks.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
            ("specs", self.specs.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
        ]);
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub papers: usize,
    pub diagnostics: usize,
    pub outputs: Vec<PathBuf>,
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    let path = dir.join(name);
    fs::write(&path, buf).map_err(|e| Error::file(&path, e))?;
    Ok(path)
}

/// Loads, merges and measures the corpus, then writes every table and the
/// manifest into `out_dir`. The same inputs always give the same bytes.
pub fn run_pipeline(cfg: &PipelineConfig, out_dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out_dir).map_err(|e| Error::file(out_dir, e))?;

    let report = read_corpus_file(&cfg.corpus, &cfg.ingest_options()).map_err(|e| e.in_stage("ingest"))?;
    let mut records = report.records;
    info!("ingested {} papers ({} diagnostics)", records.len(), report.diagnostics.len());
    let tables: Vec<OutcomeTable> = cfg
        .outcomes
        .iter()
        .map(|p| OutcomeTable::from_path(p))
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("ingest"))?;
    if !tables.is_empty() {
        let ranks = match &cfg.ranks {
            Some(p) => JournalRanks::from_path(p).map_err(|e| e.in_stage("ingest"))?,
            None => JournalRanks::default(),
        };
        let conflicts = merge_outcomes(
            &mut records,
            &tables,
            &ranks,
            MergeOptions {
                default_tier: cfg.default_tier,
            },
        );
        for c in &conflicts {
            warn!(
                "{}: {} conflict, kept {:?} from source {}, discarded {:?} from source {}",
                c.paper_id, c.field, c.kept, c.kept_source, c.discarded, c.discarded_source
            );
        }
    }

    let set = compute_measures(&records, &cfg.params)?;
    let specs = match &cfg.specs {
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| Error::file(p, e).in_stage("regress"))?;
            read_specs(file).map_err(|e| e.in_stage("regress"))?
        }
        None => default_specs(&cfg.params.views),
    };

    let mut outputs = vec![
        write_file(out_dir, "measures.csv", |b| set.write_measures(b))?,
        write_file(out_dir, "novelty.csv", |b| set.write_novelty(b))?,
        write_file(out_dir, "gaps.csv", |b| set.write_gaps(b))?,
        write_file(out_dir, "centrality.csv", |b| set.write_centrality(b))?,
        write_file(out_dir, "regression.csv", |b| {
            write_regressions(&set.to_table(), &specs, b).map_err(|e| e.in_stage("regress"))
        })?,
    ];
    let by_year = aggregate_trends(&records, GroupBy::Year);
    let by_field = aggregate_trends(&records, GroupBy::Field);
    outputs.push(write_file(out_dir, "trends_year.csv", |b| by_year.write_csv(b))?);
    outputs.push(write_file(out_dir, "trends_field.csv", |b| by_field.write_csv(b))?);
    outputs.push(write_file(out_dir, "method_shares_year.csv", |b| by_year.write_method_csv(b))?);
    outputs.push(write_file(out_dir, "diagnostics.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["line", "message"])?;
        for d in &report.diagnostics {
            w.write_record([d.line.to_string(), d.message.clone()])?;
        }
        w.flush()?;
        Ok(())
    })?);

    let mut manifest = String::from("# claimgraph run manifest\n");
    manifest.push_str(&format!("version={}\n", env!("CARGO_PKG_VERSION")));
    for (k, v) in cfg.parameter_lines() {
        manifest.push_str(&format!("param.{k}={v}\n"));
    }
    let mut inputs = vec![("corpus".to_string(), cfg.corpus.clone())];
    inputs.extend(cfg.outcomes.iter().enumerate().map(|(i, p)| (format!("outcomes.{i}"), p.clone())));
    inputs.extend(cfg.ranks.iter().map(|p| ("ranks".to_string(), p.clone())));
    inputs.extend(cfg.specs.iter().map(|p| ("specs".to_string(), p.clone())));
    for (k, p) in &inputs {
        manifest.push_str(&format!("input.{k}.sha256={}\n", sha256_file(p)?));
    }
    manifest.push_str(&format!("papers={}\ndiagnostics={}\n", records.len(), report.diagnostics.len()));
    for p in &outputs {
        let name = p.file_name().expect("file path").to_string_lossy();
        manifest.push_str(&format!("output.{name}.sha256={}\n", sha256_file(p)?));
    }
    outputs.push(write_file(out_dir, "manifest.txt", |b| {
        b.extend_from_slice(manifest.as_bytes());
        Ok(())
    })?);

    Ok(RunSummary {
        papers: records.len(),
        diagnostics: report.diagnostics.len(),
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::code;
    use crate::ingest::{ClaimEdge, Relationship};

    fn rec(id: &str, year: i32, edges: &[(&str, &str, &str)]) -> PaperRecord {
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

    #[test]
    fn first_year_has_no_prior_centrality() {
        let recs = vec![
            rec("b", 2001, &[("A1", "B1", "OLS")]),
            rec("a", 2000, &[("A1", "B1", "OLS"), ("B1", "C1", "DiD")]),
        ];
        let set = compute_measures(&recs, &MeasureParams::default()).unwrap();
        assert_eq!(set.rows[0].paper_id, "a");
        let full0 = set.rows[0].view(View::Full).unwrap();
        assert!(full0.eigen.is_none());
        assert_eq!(full0.gap_prop, Some(1.0));
        assert_eq!(full0.novelty.edges.novel, 2);
        let full1 = set.rows[1].view(View::Full).unwrap();
        assert!(full1.eigen.is_some());
        assert_eq!(full1.novelty.edges.novel, 0);
        assert_eq!(set.rows[0].values().len(), measure_columns(&View::ALL).len());
    }

    #[test]
    fn edgeless_paper_has_missing_complexity() {
        let set = compute_measures(&[rec("a", 2000, &[])], &MeasureParams::default()).unwrap();
        let r = &set.rows[0];
        assert_eq!(r.num_edges, None);
        let mut buf = Vec::new();
        set.write_measures(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("a,2000,,,,,,0,"));
    }

    #[test]
    fn config_parsing() {
        let text = "# run\ncorpus = data/c.jsonl\noutcomes = o1.csv, /abs/o2.csv\ntau = 7\nviews = full,causal\nstrict = true\n";
        let cfg = PipelineConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.corpus, PathBuf::from("/base/data/c.jsonl"));
        assert_eq!(cfg.outcomes, vec![PathBuf::from("/base/o1.csv"), PathBuf::from("/abs/o2.csv")]);
        assert_eq!(cfg.params.tau, 7);
        assert_eq!(cfg.params.views, vec![View::Full, View::Causal]);
        assert!(cfg.strict);
        assert!(PipelineConfig::parse("tau = 3\n", Path::new(".")).is_err());
        assert!(PipelineConfig::parse("corpus = x\nbogus = 1\n", Path::new(".")).is_err());
        assert!(PipelineConfig::parse("corpus = x\nsubgraph_size = 5\n", Path::new(".")).is_err());
    }
}
