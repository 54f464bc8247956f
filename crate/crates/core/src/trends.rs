//! Corpus-level aggregation of causal-edge shares and method usage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::PaperRecord;

const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupBy {
    Year,
    Field,
    YearField,
    Method,
}

impl GroupBy {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::Year => "year",
            GroupBy::Field => "field",
            GroupBy::YearField => "year-field",
            GroupBy::Method => "method",
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "year" => Ok(GroupBy::Year),
            "field" => Ok(GroupBy::Field),
            "year-field" | "year_field" | "yearxfield" | "year×field" => Ok(GroupBy::YearField),
            "method" => Ok(GroupBy::Method),
            other => Err(Error::InvalidParameter {
                name: "group_by",
                reason: format!("unknown grouping {other:?}"),
            }),
        }
    }
}

/// Running count, mean and sum of squared deviations. Merging two
/// accumulators gives the same moments as accumulating their union.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let d = other.mean - self.mean;
        self.mean += d * nb / n;
        self.m2 += other.m2 + d * d * na * nb / n;
        self.n += other.n;
    }

    pub fn sample_sd(&self) -> Option<f64> {
        (self.n >= 2).then(|| (self.m2.max(0.0) / (self.n - 1) as f64).sqrt())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct GroupAcc {
    papers: u64,
    prop: Moments,
    methods: BTreeMap<String, u64>,
}

impl GroupAcc {
    fn push(&mut self, rec: &PaperRecord) {
        self.papers += 1;
        if let Some(p) = rec.prop_causal() {
            self.prop.push(p);
        }
        for tag in rec.method_tags() {
            *self.methods.entry(tag.to_string()).or_default() += 1;
        }
    }

    fn merge(&mut self, other: &GroupAcc) {
        self.papers += other.papers;
        self.prop.merge(&other.prop);
        for (tag, c) in &other.methods {
            *self.methods.entry(tag.clone()).or_default() += c;
        }
    }
}

/// Mergeable per-group accumulator; build one per shard and combine with
/// [`TrendAccumulator::merge`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrendAccumulator {
    group_by: GroupBy,
    groups: BTreeMap<String, GroupAcc>,
    ungrouped: u64,
}

impl TrendAccumulator {
    pub fn new(group_by: GroupBy) -> Self {
        TrendAccumulator {
            group_by,
            groups: BTreeMap::new(),
            ungrouped: 0,
        }
    }

    fn keys(&self, rec: &PaperRecord) -> Vec<String> {
        match self.group_by {
            GroupBy::Year => vec![rec.year.to_string()],
            GroupBy::Field => rec.fields.iter().cloned().collect(),
            GroupBy::YearField => rec.fields.iter().map(|f| format!("{}|{f}", rec.year)).collect(),
            GroupBy::Method => rec.method_tags().into_iter().map(String::from).collect(),
        }
    }

    pub fn push(&mut self, rec: &PaperRecord) {
        let keys = self.keys(rec);
        if keys.is_empty() {
            self.ungrouped += 1;
        }
        for k in keys {
            self.groups.entry(k).or_default().push(rec);
        }
    }

    pub fn merge(&mut self, other: &TrendAccumulator) -> Result<()> {
        if self.group_by != other.group_by {
            return Err(Error::InvalidParameter {
                name: "group_by",
                reason: format!("cannot merge {} with {}", self.group_by, other.group_by),
            });
        }
        for (k, g) in &other.groups {
            self.groups.entry(k.clone()).or_default().merge(g);
        }
        self.ungrouped += other.ungrouped;
        Ok(())
    }

    pub fn finish(&self) -> TrendTable {
        let tags: BTreeSet<&String> = self.groups.values().flat_map(|g| g.methods.keys()).collect();
        let mut rows = Vec::new();
        let mut method_rows = Vec::new();
        for (key, g) in &self.groups {
            let n = g.prop.n;
            rows.push(TrendRow {
                group: key.clone(),
                n_papers: g.papers,
                n_with_edges: n,
                mean_prop_causal: (n > 0).then_some(g.prop.mean),
                ci_half_width: g.prop.sample_sd().map(|sd| Z95 * sd / (n as f64).sqrt()),
            });
            for tag in &tags {
                let count = g.methods.get(*tag).copied().unwrap_or(0);
                let share = count as f64 / g.papers as f64;
                method_rows.push(MethodShareRow {
                    group: key.clone(),
                    method: (*tag).clone(),
                    n_papers: g.papers,
                    count,
                    share,
                    ci_half_width: Z95 * (share * (1.0 - share) / g.papers as f64).sqrt(),
                });
            }
        }
        let mut notes = Vec::new();
        if self.ungrouped > 0 {
            notes.push(format!(
                "{} papers have no {} and were omitted",
                self.ungrouped,
                match self.group_by {
                    GroupBy::Method => "method tag",
                    _ => "field",
                }
            ));
        }
        for row in rows.iter().filter(|r| r.n_with_edges == 0) {
            notes.push(format!("group {} has no papers with edges; mean omitted", row.group));
        }
        TrendTable {
            group_by: self.group_by,
            rows,
            method_rows,
            notes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub group: String,
    pub n_papers: u64,
    /// Papers contributing a defined causal share.
    pub n_with_edges: u64,
    pub mean_prop_causal: Option<f64>,
    pub ci_half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodShareRow {
    pub group: String,
    pub method: String,
    pub n_papers: u64,
    pub count: u64,
    pub share: f64,
    pub ci_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendTable {
    pub group_by: GroupBy,
    pub rows: Vec<TrendRow>,
    pub method_rows: Vec<MethodShareRow>,
    pub notes: Vec<String>,
}

impl TrendTable {
    pub fn row(&self, group: &str) -> Option<&TrendRow> {
        self.rows.iter().find(|r| r.group == group)
    }

    pub fn share(&self, group: &str, method: &str) -> Option<f64> {
        self.method_rows
            .iter()
            .find(|r| r.group == group && r.method == method)
            .map(|r| r.share)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group_by", "group", "n_papers", "n_with_edges", "mean_prop_causal", "ci_half_width"])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                self.group_by.as_str(),
                &r.group,
                &r.n_papers.to_string(),
                &r.n_with_edges.to_string(),
                &opt(r.mean_prop_causal),
                &opt(r.ci_half_width),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_method_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group_by", "group", "method", "n_papers", "count", "share", "ci_half_width"])?;
        for r in &self.method_rows {
            w.write_record([
                self.group_by.as_str(),
                &r.group,
                &r.method,
                &r.n_papers.to_string(),
                &r.count.to_string(),
                &r.share.to_string(),
                &r.ci_half_width.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn aggregate_trends(records: &[PaperRecord], group_by: GroupBy) -> TrendTable {
    let mut acc = TrendAccumulator::new(group_by);
    for r in records {
        acc.push(r);
    }
    acc.finish()
}
