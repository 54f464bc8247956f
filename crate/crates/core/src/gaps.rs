//! Cumulative concept-pair co-occurrence counts and gap-filling proportions.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::concept::ConceptCode;
use crate::error::{Error, Result};
use crate::graph::PaperGraph;

pub const DEFAULT_TAU: u64 = 5;

/// Unordered pair, stored with the smaller code first.
pub type ConceptPair = (ConceptCode, ConceptCode);

fn pair(a: &ConceptCode, b: &ConceptCode) -> ConceptPair {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

fn node_pairs(graph: &PaperGraph) -> impl Iterator<Item = (&ConceptCode, &ConceptCode)> {
    let nodes: Vec<&ConceptCode> = graph.nodes().iter().collect();
    (0..nodes.len()).flat_map(move |i| {
        let nodes = nodes.clone();
        (i + 1..nodes.len()).map(move |j| (nodes[i], nodes[j]))
    })
}

/// Per-paper co-occurrence counts of concept pairs through `through_year`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairCountTable {
    counts: BTreeMap<ConceptPair, u64>,
    pub through_year: Option<i32>,
}

impl PairCountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, a: &ConceptCode, b: &ConceptCode) -> u64 {
        self.counts.get(&pair(a, b)).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<ConceptPair, u64> {
        &self.counts
    }

    /// Adds one count per paper for every unordered pair of distinct nodes
    /// in that paper.
    pub fn update(&mut self, year: i32, papers: &[PaperGraph]) -> Result<()> {
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
        for paper in papers {
            for (a, b) in node_pairs(paper) {
                *self.counts.entry((a.clone(), b.clone())).or_default() += 1;
            }
        }
        self.through_year = Some(year);
        Ok(())
    }

    /// Writes `code1,code2,count` rows, codes sorted within each row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["code1", "code2", "count"])?;
        for ((a, b), c) in &self.counts {
            w.write_record([a.as_str(), b.as_str(), &c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, through_year: Option<i32>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let mut table = PairCountTable {
            counts: BTreeMap::new(),
            through_year,
        };
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = || Error::Schema {
                line: i + 2,
                message: "expected code1,code2,count".into(),
            };
            let a = ConceptCode::new(rec.get(0).ok_or_else(bad)?)?;
            let b = ConceptCode::new(rec.get(1).ok_or_else(bad)?)?;
            let c: u64 = rec.get(2).and_then(|c| c.parse().ok()).ok_or_else(bad)?;
            if a == b {
                return Err(bad());
            }
            *table.counts.entry(pair(&a, &b)).or_default() += c;
        }
        Ok(table)
    }
}

/// Fraction of the paper's node pairs whose prior count is below `tau`.
/// `None` for papers with fewer than two nodes.
pub fn gap_filling_prop(paper: &PaperGraph, table: &PairCountTable, tau: u64) -> Option<f64> {
    let mut total = 0usize;
    let mut below = 0usize;
    for (a, b) in node_pairs(paper) {
        total += 1;
        if table.count(a, b) < tau {
            below += 1;
        }
    }
    (total > 0).then(|| below as f64 / total as f64)
}
