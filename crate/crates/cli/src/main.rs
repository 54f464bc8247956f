mod remote;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use claimgraph::centrality::node_centrality_series;
use claimgraph::econometrics::{read_specs, MeasureTable};
use claimgraph::embedding::{match_concept, match_concepts_above, read_vectors, EmbeddingIndex, EmbeddingProvider};
use claimgraph::frontier::{LedgerState, NoveltyParams};
use claimgraph::gaps::{gap_filling_prop, PairCountTable};
use claimgraph::graph::{build_graph, View};
use claimgraph::ingest::{
    merge_outcomes, read_corpus_file, write_corpus, IngestOptions, JournalRanks, MergeOptions, MethodClassifier,
    OutcomeTable, PaperRecord, PubTier,
};
use claimgraph::pipeline::{
    compute_measures, default_specs, gap_cells, group_by_year, novelty_cells, run_pipeline, write_regressions,
    MeasureParams, PipelineConfig, GAPS_HEADER, NOVELTY_HEADER,
};
use claimgraph::synthetic::{generate_corpus, SynthConfig};
use claimgraph::trends::{aggregate_trends, GroupBy};
use claimgraph::ConceptCode;

use remote::RemoteProvider;

#[derive(Parser)]
#[command(name = "claimgraph", version, about = "Knowledge-graph measures for claim corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArgs {
    /// Line-delimited JSON corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// Fail on the first malformed line instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Comma-separated causal method whitelist.
    #[arg(long, value_delimiter = ',')]
    causal_methods: Option<Vec<String>>,
}

impl CorpusArgs {
    fn load(&self) -> Result<Vec<PaperRecord>> {
        let mut opts = IngestOptions {
            strict: self.strict,
            ..IngestOptions::default()
        };
        if let Some(m) = &self.causal_methods {
            opts.classifier = MethodClassifier::with_whitelist(m);
        }
        let report = read_corpus_file(&self.corpus, &opts)?;
        for d in &report.diagnostics {
            log::warn!("line {}: {}", d.line, d.message);
        }
        info!("loaded {} papers", report.records.len());
        Ok(report.records)
    }
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, default_value_t = claimgraph::frontier::DEFAULT_PATH_LEN)]
    path_len: usize,
    #[arg(long, default_value_t = claimgraph::frontier::DEFAULT_SUBGRAPH_SIZE)]
    subgraph_size: usize,
    #[arg(long, default_value_t = claimgraph::gaps::DEFAULT_TAU)]
    tau: u64,
    #[arg(long, default_value_t = claimgraph::graph::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = claimgraph::centrality::DEFAULT_DAMPING)]
    damping: f64,
    #[arg(long, default_value_t = claimgraph::graph::DEFAULT_PATH_CAP)]
    path_cap: u64,
    #[arg(long, default_value_t = claimgraph::frontier::DEFAULT_SUBSET_CAP)]
    subset_cap: u64,
    /// Comma-separated views: full, causal, non-causal.
    #[arg(long, value_delimiter = ',', default_value = "full,causal,non-causal")]
    views: Vec<View>,
}

impl ParamArgs {
    fn novelty(&self) -> NoveltyParams {
        NoveltyParams {
            path_len: self.path_len,
            subgraph_size: self.subgraph_size,
            path_cap: self.path_cap,
            subset_cap: self.subset_cap,
        }
    }

    fn measure_params(&self) -> MeasureParams {
        MeasureParams {
            novelty: self.novelty(),
            tau: self.tau,
            epsilon: self.epsilon,
            damping: self.damping,
            views: self.views.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a corpus, merge outcome tables and write the enriched corpus.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Outcome CSVs in priority order.
        #[arg(long, value_delimiter = ',')]
        outcomes: Vec<PathBuf>,
        /// Journal-to-tier CSV.
        #[arg(long)]
        ranks: Option<PathBuf>,
        #[arg(long, default_value = "unpublished")]
        default_tier: PubTier,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-paper measures table.
    Measures {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chronological novelty of edges, paths and subgraphs for one view.
    Novelty {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "full")]
        view: View,
        /// Frontier from an earlier run to continue from.
        #[arg(long)]
        ledger_in: Option<PathBuf>,
        #[arg(long)]
        ledger_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gap-filling proportions for one view.
    Gaps {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = claimgraph::gaps::DEFAULT_TAU)]
        tau: u64,
        #[arg(long, default_value = "full")]
        view: View,
        /// Pair counts from an earlier run (code1,code2,count).
        #[arg(long, requires = "through_year")]
        pairs_in: Option<PathBuf>,
        /// Last year covered by `--pairs-in`.
        #[arg(long)]
        through_year: Option<i32>,
        #[arg(long)]
        pairs_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Yearly cumulative-graph centrality scores per concept.
    Centrality {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Yearly centrality of one concept, raw and min-max normalized.
    NodeSeries {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        node: ConceptCode,
        #[arg(long, default_value = "full")]
        view: View,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Outcome regressions on a measures table.
    Regress {
        #[arg(long)]
        measures: PathBuf,
        /// Spec CSV (outcome,measure,view,fe,cluster); defaults to the
        /// standard set.
        #[arg(long)]
        specs: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Causal-share and method-share aggregates.
    Trends {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "year")]
        group_by: GroupBy,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the method-share table.
        #[arg(long)]
        methods_out: Option<PathBuf>,
    },
    /// Map query vectors or texts to their nearest concept codes.
    Match {
        /// Concept embedding table (code,v1,...,vD).
        #[arg(long)]
        index: PathBuf,
        /// Query vectors (id,v1,...,vD).
        #[arg(long, conflicts_with = "texts")]
        queries: Option<PathBuf>,
        /// One text per line, embedded via the remote provider.
        #[arg(long)]
        texts: Option<PathBuf>,
        /// Report every code at or above this cosine instead of the best.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline from a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a seeded synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 1000)]
        papers: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1990)]
        first_year: i32,
        #[arg(long, default_value_t = 20)]
        years: i32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            corpus,
            outcomes,
            ranks,
            default_tier,
            out,
        } => {
            let mut records = corpus.load()?;
            let tables: Vec<OutcomeTable> = outcomes
                .iter()
                .map(|p| OutcomeTable::from_path(p))
                .collect::<claimgraph::Result<_>>()?;
            if !tables.is_empty() {
                let ranks = match ranks {
                    Some(p) => JournalRanks::from_path(&p)?,
                    None => JournalRanks::default(),
                };
                for c in merge_outcomes(&mut records, &tables, &ranks, MergeOptions { default_tier }) {
                    log::warn!(
                        "{}: {} conflict, kept {:?} (source {}), discarded {:?} (source {})",
                        c.paper_id,
                        c.field,
                        c.kept,
                        c.kept_source,
                        c.discarded,
                        c.discarded_source
                    );
                }
            }
            write_corpus(&records, output(&out)?)?;
        }
        Command::Measures { corpus, params, out } => {
            let set = compute_measures(&corpus.load()?, &params.measure_params())?;
            set.write_measures(output(&out)?)?;
        }
        Command::Centrality { corpus, params, out } => {
            let set = compute_measures(&corpus.load()?, &params.measure_params())?;
            set.write_centrality(output(&out)?)?;
        }
        Command::Novelty {
            corpus,
            params,
            view,
            ledger_in,
            ledger_out,
            out,
        } => {
            let records = corpus.load()?;
            let mut ledger = match ledger_in {
                Some(p) => {
                    let l = LedgerState::read_from(BufReader::new(open(&p)?), params.novelty())?;
                    if l.view != view {
                        bail!("ledger {} holds view {}, not {view}", p.display(), l.view);
                    }
                    l
                }
                None => LedgerState::new(view, params.novelty())?,
            };
            let mut w = csv_writer(&out)?;
            w.write_record(NOVELTY_HEADER)?;
            for (year, papers) in group_by_year(&records) {
                let graphs: Vec<_> = papers.iter().map(|r| build_graph(r, view)).collect();
                for (g, n) in graphs.iter().zip(ledger.advance_year(year, &graphs)?) {
                    w.write_record(novelty_cells(&g.paper_id, year, view, &n))?;
                }
            }
            w.flush()?;
            if let Some(p) = ledger_out {
                let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                ledger.write_to(BufWriter::new(f))?;
            }
        }
        Command::Gaps {
            corpus,
            tau,
            view,
            pairs_in,
            through_year,
            pairs_out,
            out,
        } => {
            let records = corpus.load()?;
            let mut table = match pairs_in {
                Some(p) => PairCountTable::read_csv(open(&p)?, through_year)?,
                None => PairCountTable::new(),
            };
            let mut w = csv_writer(&out)?;
            w.write_record(GAPS_HEADER)?;
            for (year, papers) in group_by_year(&records) {
                let graphs: Vec<_> = papers.iter().map(|r| build_graph(r, view)).collect();
                for g in &graphs {
                    w.write_record(gap_cells(&g.paper_id, year, view, tau, gap_filling_prop(g, &table, tau)))?;
                }
                table.update(year, &graphs)?;
            }
            w.flush()?;
            if let Some(p) = pairs_out {
                table.write_csv(File::create(&p).with_context(|| format!("creating {}", p.display()))?)?;
            }
        }
        Command::NodeSeries {
            corpus,
            node,
            view,
            out,
        } => {
            let series = node_centrality_series(&corpus.load()?, &node, view)?;
            let mut w = csv_writer(&out)?;
            w.write_record(["code", "view", "year", "eigenvector", "normalized"])?;
            for p in series {
                w.write_record([
                    node.as_str(),
                    view.as_str(),
                    &p.year.to_string(),
                    &p.raw.to_string(),
                    &p.normalized.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Command::Regress { measures, specs, out } => {
            let table = MeasureTable::from_path(&measures)?;
            let specs = match specs {
                Some(p) => read_specs(open(&p)?)?,
                None => {
                    let views: Vec<View> = View::ALL
                        .into_iter()
                        .filter(|v| table.columns.contains_key(&format!("num_paths_{}", v.column_suffix())))
                        .collect();
                    default_specs(&views)
                }
            };
            write_regressions(&table, &specs, output(&out)?)?;
        }
        Command::Trends {
            corpus,
            group_by,
            out,
            methods_out,
        } => {
            let table = aggregate_trends(&corpus.load()?, group_by);
            for note in &table.notes {
                log::warn!("{note}");
            }
            table.write_csv(output(&out)?)?;
            if let Some(p) = methods_out {
                table.write_method_csv(File::create(&p).with_context(|| format!("creating {}", p.display()))?)?;
            }
        }
        Command::Match {
            index,
            queries,
            texts,
            threshold,
            out,
        } => {
            let index = EmbeddingIndex::from_path(&index)?;
            let queries: Vec<(String, Vec<f64>)> = match (queries, texts) {
                (Some(q), _) => read_vectors(open(&q)?)?,
                (None, Some(t)) => {
                    let provider = RemoteProvider::from_env().with_context(|| {
                        format!("--texts needs an embedding endpoint in {}", remote::URL_VAR)
                    })?;
                    let lines: Vec<String> = std::fs::read_to_string(&t)
                        .with_context(|| format!("reading {}", t.display()))?
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(String::from)
                        .collect();
                    let vectors = provider.embed(&lines)?;
                    lines.into_iter().zip(vectors).collect()
                }
                (None, None) => bail!("one of --queries or --texts is required"),
            };
            let mut w = csv_writer(&out)?;
            w.write_record(["query", "code", "score"])?;
            for (id, v) in &queries {
                let hits = match threshold {
                    Some(t) => match_concepts_above(v, &index, t)?,
                    None => vec![match_concept(v, &index)?],
                };
                for (code, score) in hits {
                    w.write_record([id.as_str(), code.as_str(), &score.to_string()])?;
                }
            }
            w.flush()?;
        }
        Command::Run { config, out } => {
            let cfg = PipelineConfig::from_path(&config)?;
            let summary = run_pipeline(&cfg, &out)?;
            info!(
                "{} papers, {} diagnostics, {} files written to {}",
                summary.papers,
                summary.diagnostics,
                summary.outputs.len(),
                out.display()
            );
        }
        Command::Synth {
            papers,
            seed,
            first_year,
            years,
            out,
        } => {
            let records = generate_corpus(&SynthConfig {
                seed,
                papers,
                first_year,
                years,
                ..SynthConfig::default()
            })?;
            write_corpus(&records, output(&out)?)?;
        }
    }
    Ok(())
}

fn csv_writer(out: &Option<PathBuf>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(output(out)?))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
