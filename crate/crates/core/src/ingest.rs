//! Claim corpus ingestion: line-delimited JSON records, method-tag
//! normalization, causal classification and outcome merging.
//!
//! Each input line holds one working paper:
//!
//! ```json
//! {"paper_id":"w1","year":2014,"fields":["Labor"],
//!  "edges":[{"source_code":"D31","sink_code":"J62","source_text":"...",
//!            "sink_text":"...","methods":["OLS"],"relationship":"correlation"}]}
//! ```
//!
//! Optional keys `title`, `pub_tier`, `citations` and `outcome_source` are
//! accepted so that enriched output of `ingest` can be read back.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::concept::ConceptCode;
use crate::error::{Error, Result};

/// Canonical method names. The first six form the default causal whitelist.
pub const CANONICAL_METHODS: &[&str] = &[
    "DiD",
    "IV/2SLS",
    "RCT/Experiment",
    "RDD",
    "Event Study",
    "Synthetic Control",
    "OLS",
    "Panel Regression",
    "TWFE",
    "Structural Estimation",
    "Simulation",
    "Theoretical/Non-Empirical",
    "Descriptive",
    "Time Series",
    "Machine Learning",
    "Qualitative",
];

pub const DEFAULT_CAUSAL_METHODS: &[&str] = &[
    "DiD",
    "IV/2SLS",
    "RCT/Experiment",
    "RDD",
    "Event Study",
    "Synthetic Control",
];

// Keys are already uppercased and trimmed.
const METHOD_ALIASES: &[(&str, &str)] = &[
    ("DIFFERENCE-IN-DIFFERENCES", "DiD"),
    ("DIFFERENCE IN DIFFERENCES", "DiD"),
    ("DIFF-IN-DIFF", "DiD"),
    ("DD", "DiD"),
    ("IV", "IV/2SLS"),
    ("2SLS", "IV/2SLS"),
    ("TSLS", "IV/2SLS"),
    ("INSTRUMENTAL VARIABLES", "IV/2SLS"),
    ("INSTRUMENTAL VARIABLE", "IV/2SLS"),
    ("RCT", "RCT/Experiment"),
    ("RCTS", "RCT/Experiment"),
    ("EXPERIMENT", "RCT/Experiment"),
    ("EXPERIMENTS", "RCT/Experiment"),
    ("FIELD EXPERIMENT", "RCT/Experiment"),
    ("RANDOMIZED CONTROLLED TRIAL", "RCT/Experiment"),
    ("REGRESSION DISCONTINUITY", "RDD"),
    ("REGRESSION DISCONTINUITY DESIGN", "RDD"),
    ("RD", "RDD"),
    ("EVENT-STUDY", "Event Study"),
    ("SYNTHETIC CONTROLS", "Synthetic Control"),
    ("SCM", "Synthetic Control"),
    ("REGRESSION", "OLS"),
    ("LINEAR REGRESSION", "OLS"),
    ("PANEL", "Panel Regression"),
    ("TWO-WAY FIXED EFFECTS", "TWFE"),
    ("STRUCTURAL", "Structural Estimation"),
    ("SIMULATIONS", "Simulation"),
    ("CALIBRATION", "Simulation"),
    ("THEORY", "Theoretical/Non-Empirical"),
    ("THEORETICAL", "Theoretical/Non-Empirical"),
    ("NON-EMPIRICAL", "Theoretical/Non-Empirical"),
    ("ML", "Machine Learning"),
];

/// Normalizes a free-text method label to its canonical name, or `None` if
/// the tag is outside the closed vocabulary.
pub fn canonical_method(tag: &str) -> Option<&'static str> {
    let key = tag.trim().to_ascii_uppercase();
    CANONICAL_METHODS
        .iter()
        .find(|m| m.to_ascii_uppercase() == key)
        .copied()
        .or_else(|| {
            METHOD_ALIASES
                .iter()
                .find(|(alias, _)| *alias == key)
                .map(|(_, canon)| *canon)
        })
}

/// Decides which method tags make a claim causal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodClassifier {
    whitelist: BTreeSet<String>,
}

impl Default for MethodClassifier {
    fn default() -> Self {
        MethodClassifier {
            whitelist: DEFAULT_CAUSAL_METHODS.iter().map(|m| m.to_string()).collect(),
        }
    }
}

impl MethodClassifier {
    /// Explicit whitelist override. Entries are normalized like edge tags.
    pub fn with_whitelist<I, S>(methods: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        MethodClassifier {
            whitelist: methods
                .into_iter()
                .map(|m| normalize_method_tag(m.as_ref()))
                .collect(),
        }
    }

    pub fn whitelist(&self) -> impl Iterator<Item = &str> {
        self.whitelist.iter().map(String::as_str)
    }

    pub fn is_causal<'a, I>(&self, methods: I) -> bool
    where
        I: IntoIterator<Item = &'a String>,
    {
        methods.into_iter().any(|m| self.whitelist.contains(m))
    }
}

/// Canonical name for known tags, trimmed uppercase text otherwise.
pub fn normalize_method_tag(tag: &str) -> String {
    canonical_method(tag)
        .map(str::to_string)
        .unwrap_or_else(|| tag.trim().to_ascii_uppercase())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relationship {
    DirectCausal,
    IndirectCausal,
    Mediation,
    Confounding,
    Theorized,
    Correlation,
}

impl FromStr for Relationship {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        Ok(match key.as_str() {
            "direct-causal" => Relationship::DirectCausal,
            "indirect-causal" => Relationship::IndirectCausal,
            "mediation" => Relationship::Mediation,
            "confounding" => Relationship::Confounding,
            "theorized" => Relationship::Theorized,
            "correlation" => Relationship::Correlation,
            _ => return Err(format!("unknown relationship {s:?}")),
        })
    }
}

/// One extracted claim. `is_causal` is derived from `methods` at
/// construction and cannot be set independently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimEdge {
    pub source: ConceptCode,
    pub sink: ConceptCode,
    pub source_text: String,
    pub sink_text: String,
    pub methods: BTreeSet<String>,
    pub relationship: Relationship,
    is_causal: bool,
}

impl ClaimEdge {
    pub fn new<I, S>(
        source: ConceptCode,
        sink: ConceptCode,
        methods: I,
        relationship: Relationship,
        classifier: &MethodClassifier,
    ) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let methods: BTreeSet<String> = methods
            .into_iter()
            .map(|m| normalize_method_tag(m.as_ref()))
            .collect();
        let is_causal = classifier.is_causal(&methods);
        ClaimEdge {
            source,
            sink,
            source_text: String::new(),
            sink_text: String::new(),
            methods,
            relationship,
            is_causal,
        }
    }

    pub fn with_text(mut self, source_text: &str, sink_text: &str) -> Self {
        self.source_text = source_text.to_string();
        self.sink_text = sink_text.to_string();
        self
    }

    pub fn is_causal(&self) -> bool {
        self.is_causal
    }

    pub fn is_self_loop(&self) -> bool {
        self.source == self.sink
    }
}

/// Pure causal test over an edge's methods.
pub fn classify_edge_causality(edge: &ClaimEdge, classifier: &MethodClassifier) -> bool {
    classifier.is_causal(&edge.methods)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum PubTier {
    Top5,
    Top6to20,
    Top21to100,
    Other,
    Unpublished,
    #[default]
    Unknown,
}

impl PubTier {
    pub fn as_str(self) -> &'static str {
        match self {
            PubTier::Top5 => "Top5",
            PubTier::Top6to20 => "Top6to20",
            PubTier::Top21to100 => "Top21to100",
            PubTier::Other => "Other",
            PubTier::Unpublished => "Unpublished",
            PubTier::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for PubTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PubTier {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "top5" => PubTier::Top5,
            "top6to20" | "top620" => PubTier::Top6to20,
            "top21to100" | "top21100" => PubTier::Top21to100,
            "other" => PubTier::Other,
            "unpublished" => PubTier::Unpublished,
            "unknown" => PubTier::Unknown,
            _ => return Err(format!("unknown publication tier {s:?}")),
        })
    }
}

/// Which merge input supplied a record's publication tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutcomeSource {
    /// No merge has run, or the paper was absent from every source.
    #[default]
    Default,
    /// 1-based priority position of the outcome table.
    Source(usize),
}

impl fmt::Display for OutcomeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeSource::Default => f.write_str("default"),
            OutcomeSource::Source(i) => write!(f, "source#{i}"),
        }
    }
}

impl FromStr for OutcomeSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "default" {
            return Ok(OutcomeSource::Default);
        }
        s.strip_prefix("source#")
            .and_then(|n| n.parse().ok())
            .filter(|&n: &usize| n > 0)
            .map(OutcomeSource::Source)
            .ok_or_else(|| format!("bad outcome source {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaperRecord {
    pub paper_id: String,
    pub year: i32,
    pub title: Option<String>,
    pub fields: BTreeSet<String>,
    pub edges: Vec<ClaimEdge>,
    pub pub_tier: PubTier,
    pub citations: Option<u64>,
    pub outcome_source: OutcomeSource,
}

impl PaperRecord {
    pub fn new(paper_id: impl Into<String>, year: i32, edges: Vec<ClaimEdge>) -> Self {
        PaperRecord {
            paper_id: paper_id.into(),
            year,
            title: None,
            fields: BTreeSet::new(),
            edges,
            pub_tier: PubTier::Unknown,
            citations: None,
            outcome_source: OutcomeSource::Default,
        }
    }

    pub fn num_causal_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_causal()).count()
    }

    /// Share of claim edges that are causal; `None` for edgeless papers.
    pub fn prop_causal(&self) -> Option<f64> {
        if self.edges.is_empty() {
            None
        } else {
            Some(self.num_causal_edges() as f64 / self.edges.len() as f64)
        }
    }

    /// Union of method tags across the paper's edges.
    pub fn method_tags(&self) -> BTreeSet<&str> {
        self.edges
            .iter()
            .flat_map(|e| e.methods.iter().map(String::as_str))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub strict: bool,
    pub min_year: i32,
    pub max_year: i32,
    pub classifier: MethodClassifier,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            strict: false,
            min_year: 1980,
            max_year: 2023,
            classifier: MethodClassifier::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub records: Vec<PaperRecord>,
    pub diagnostics: Vec<Diagnostic>,
    /// Method tags outside the closed vocabulary, with occurrence counts.
    pub unknown_tags: BTreeMap<String, usize>,
}

impl ParseReport {
    pub fn causal_share(&self) -> Option<f64> {
        let total: usize = self.records.iter().map(|r| r.edges.len()).sum();
        let causal: usize = self.records.iter().map(PaperRecord::num_causal_edges).sum();
        (total > 0).then(|| causal as f64 / total as f64)
    }
}

#[derive(Deserialize)]
struct WireEdge {
    source_code: String,
    sink_code: String,
    #[serde(default)]
    source_text: String,
    #[serde(default)]
    sink_text: String,
    #[serde(default)]
    methods: Vec<String>,
    relationship: String,
}

#[derive(Deserialize)]
struct WireRecord {
    paper_id: String,
    year: i64,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    fields: Vec<String>,
    edges: Vec<WireEdge>,
    #[serde(default)]
    pub_tier: Option<String>,
    #[serde(default)]
    citations: Option<i64>,
    #[serde(default)]
    outcome_source: Option<String>,
}

struct ParsedLine {
    record: PaperRecord,
    unknown_tags: Vec<String>,
}

fn parse_line(text: &str, opts: &IngestOptions) -> std::result::Result<ParsedLine, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("record is not a JSON object")?;
    for required in ["paper_id", "year", "edges"] {
        if !obj.contains_key(required) {
            return Err(format!("missing field: {required}"));
        }
    }
    let wire: WireRecord =
        serde_json::from_value(value).map_err(|e| format!("schema violation: {e}"))?;

    if wire.paper_id.trim().is_empty() {
        return Err("empty paper_id".into());
    }
    let year = i32::try_from(wire.year).map_err(|_| format!("year out of range: {}", wire.year))?;
    if year < opts.min_year || year > opts.max_year {
        return Err(format!(
            "year {year} outside [{}, {}]",
            opts.min_year, opts.max_year
        ));
    }

    let mut unknown_tags = Vec::new();
    let mut edges = Vec::with_capacity(wire.edges.len());
    for (i, e) in wire.edges.into_iter().enumerate() {
        let source = ConceptCode::new(&e.source_code).map_err(|err| format!("edge {i}: {err}"))?;
        let sink = ConceptCode::new(&e.sink_code).map_err(|err| format!("edge {i}: {err}"))?;
        let relationship: Relationship =
            e.relationship.parse().map_err(|err| format!("edge {i}: {err}"))?;
        for m in &e.methods {
            if canonical_method(m).is_none() {
                unknown_tags.push(normalize_method_tag(m));
            }
        }
        edges.push(
            ClaimEdge::new(source, sink, &e.methods, relationship, &opts.classifier)
                .with_text(&e.source_text, &e.sink_text),
        );
    }

    let citations = match wire.citations {
        Some(c) if c < 0 => return Err(format!("negative citations: {c}")),
        Some(c) => Some(c as u64),
        None => None,
    };
    let pub_tier = match wire.pub_tier {
        Some(t) => t.parse()?,
        None => PubTier::Unknown,
    };
    let outcome_source = match wire.outcome_source {
        Some(s) => s.parse()?,
        None => OutcomeSource::Default,
    };

    Ok(ParsedLine {
        record: PaperRecord {
            paper_id: wire.paper_id,
            year,
            title: wire.title,
            fields: wire.fields.into_iter().collect(),
            edges,
            pub_tier,
            citations,
            outcome_source,
        },
        unknown_tags,
    })
}

/// Parses a line-delimited corpus. Blank lines are ignored. Malformed lines
/// become diagnostics unless `opts.strict`, in which case the first one is
/// returned as an error.
pub fn parse_corpus<R: BufRead>(input: R, opts: &IngestOptions) -> Result<ParseReport> {
    let lines: Vec<(usize, String)> = input
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .collect::<std::io::Result<_>>()?;

    let parsed: Vec<(usize, std::result::Result<ParsedLine, String>)> = lines
        .par_iter()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| (*n, parse_line(l, opts)))
        .collect();

    let mut report = ParseReport::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (line, result) in parsed {
        match result {
            Ok(parsed) => {
                let id = parsed.record.paper_id.clone();
                if let Some(&first_line) = seen.get(&id) {
                    let err = Error::DuplicatePaper {
                        paper_id: id,
                        first_line,
                        second_line: line,
                    };
                    if opts.strict {
                        return Err(err);
                    }
                    report.diagnostics.push(Diagnostic {
                        line,
                        message: err.to_string(),
                    });
                    continue;
                }
                seen.insert(id, line);
                for tag in parsed.unknown_tags {
                    log::warn!("line {line}: unknown method tag {tag:?}");
                    *report.unknown_tags.entry(tag).or_default() += 1;
                }
                report.records.push(parsed.record);
            }
            Err(message) => {
                if opts.strict {
                    return Err(Error::Schema { line, message });
                }
                report.diagnostics.push(Diagnostic { line, message });
            }
        }
    }
    Ok(report)
}

pub fn read_corpus_file(path: &Path, opts: &IngestOptions) -> Result<ParseReport> {
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    parse_corpus(std::io::BufReader::new(file), opts)
}

#[derive(Serialize)]
struct WireEdgeOut<'a> {
    source_code: &'a str,
    sink_code: &'a str,
    source_text: &'a str,
    sink_text: &'a str,
    methods: Vec<&'a str>,
    relationship: Relationship,
}

#[derive(Serialize)]
struct WireRecordOut<'a> {
    paper_id: &'a str,
    year: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    title: Option<&'a str>,
    fields: Vec<&'a str>,
    edges: Vec<WireEdgeOut<'a>>,
    pub_tier: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    citations: Option<u64>,
    outcome_source: String,
}

/// Writes records in the same line-delimited format `parse_corpus` reads.
pub fn write_corpus<W: Write>(records: &[PaperRecord], mut out: W) -> Result<()> {
    for r in records {
        let wire = WireRecordOut {
            paper_id: &r.paper_id,
            year: r.year,
            title: r.title.as_deref(),
            fields: r.fields.iter().map(String::as_str).collect(),
            edges: r
                .edges
                .iter()
                .map(|e| WireEdgeOut {
                    source_code: e.source.as_str(),
                    sink_code: e.sink.as_str(),
                    source_text: &e.source_text,
                    sink_text: &e.sink_text,
                    methods: e.methods.iter().map(String::as_str).collect(),
                    relationship: e.relationship,
                })
                .collect(),
            pub_tier: r.pub_tier.as_str(),
            citations: r.citations,
            outcome_source: r.outcome_source.to_string(),
        };
        serde_json::to_writer(&mut out, &wire)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Lowercases, keeps alphanumerics, and collapses whitespace. Used for both
/// titles and journal names.
pub fn normalize_title(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutcomeRow {
    pub paper_id: Option<String>,
    pub title: Option<String>,
    pub journal: Option<String>,
    pub citations: Option<u64>,
}

/// One outcome source, e.g. a verified publication list or a citation dump.
#[derive(Debug, Clone, Default)]
pub struct OutcomeTable {
    pub name: String,
    by_id: HashMap<String, usize>,
    by_title: HashMap<String, usize>,
    rows: Vec<OutcomeRow>,
}

impl OutcomeTable {
    pub fn new(name: impl Into<String>, rows: Vec<OutcomeRow>) -> Self {
        let mut by_id = HashMap::new();
        let mut by_title = HashMap::new();
        for (i, row) in rows.iter().enumerate() {
            if let Some(id) = &row.paper_id {
                by_id.entry(id.clone()).or_insert(i);
            }
            if let Some(t) = &row.title {
                by_title.entry(normalize_title(t)).or_insert(i);
            }
        }
        OutcomeTable {
            name: name.into(),
            by_id,
            by_title,
            rows,
        }
    }

    /// Reads a delimited table with header `paper_id,journal,citations` and an
    /// optional `title` column. Empty cells are missing values.
    pub fn from_csv<R: std::io::Read>(name: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let (id_col, journal_col, cites_col, title_col) =
            (col("paper_id"), col("journal"), col("citations"), col("title"));
        if id_col.is_none() && title_col.is_none() {
            return Err(Error::Config(
                "outcome table needs a paper_id or title column".into(),
            ));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let cell = |c: Option<usize>| {
                c.and_then(|c| rec.get(c))
                    .filter(|v| !v.is_empty())
                    .map(str::to_string)
            };
            let citations = match cell(cites_col) {
                Some(c) => Some(c.parse::<u64>().map_err(|_| Error::Schema {
                    line: i + 2,
                    message: format!("bad citation count {c:?}"),
                })?),
                None => None,
            };
            rows.push(OutcomeRow {
                paper_id: cell(id_col),
                title: cell(title_col),
                journal: cell(journal_col),
                citations,
            });
        }
        Ok(OutcomeTable::new(name, rows))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        OutcomeTable::from_csv(path.display().to_string(), file)
    }

    fn lookup(&self, record: &PaperRecord) -> Option<&OutcomeRow> {
        self.by_id
            .get(&record.paper_id)
            .or_else(|| {
                record
                    .title
                    .as_ref()
                    .and_then(|t| self.by_title.get(&normalize_title(t)))
            })
            .map(|&i| &self.rows[i])
    }
}

/// Journal name to publication tier.
#[derive(Debug, Clone, Default)]
pub struct JournalRanks {
    tiers: HashMap<String, PubTier>,
}

impl JournalRanks {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, PubTier)>,
        S: AsRef<str>,
    {
        JournalRanks {
            tiers: entries
                .into_iter()
                .map(|(j, t)| (normalize_title(j.as_ref()), t))
                .collect(),
        }
    }

    /// Header `journal,tier`.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let (Some(journal), Some(tier)) = (rec.get(0), rec.get(1)) else {
                return Err(Error::Schema {
                    line: i + 2,
                    message: "expected journal,tier".into(),
                });
            };
            let tier: PubTier = tier.parse().map_err(|message| Error::Schema {
                line: i + 2,
                message,
            })?;
            entries.push((journal.to_string(), tier));
        }
        Ok(JournalRanks::new(entries))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        JournalRanks::from_csv(file)
    }

    /// Journals missing from the table map to `Other`.
    pub fn tier(&self, journal: &str) -> PubTier {
        self.tiers
            .get(&normalize_title(journal))
            .copied()
            .unwrap_or(PubTier::Other)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeConflict {
    pub paper_id: String,
    pub field: &'static str,
    pub kept: String,
    pub kept_source: usize,
    pub discarded: String,
    pub discarded_source: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct MergeOptions {
    /// Tier for papers absent from every source.
    pub default_tier: PubTier,
}

impl Default for MergeOptions {
    fn default() -> Self {
        MergeOptions {
            default_tier: PubTier::Unpublished,
        }
    }
}

/// Fills `pub_tier`, `citations` and `outcome_source` from prioritized
/// sources (index 0 is highest priority). Each field comes from the first
/// source holding a non-missing value for it. Existing values on the records
/// are ignored, so merging twice gives the same result.
pub fn merge_outcomes(
    records: &mut [PaperRecord],
    sources: &[OutcomeTable],
    ranks: &JournalRanks,
    opts: MergeOptions,
) -> Vec<MergeConflict> {
    let mut conflicts = Vec::new();
    for record in records.iter_mut() {
        let hits: Vec<(usize, &OutcomeRow)> = sources
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.lookup(record).map(|row| (i + 1, row)))
            .collect();

        let tiers: Vec<(usize, PubTier)> = hits
            .iter()
            .filter_map(|(i, row)| row.journal.as_deref().map(|j| (*i, ranks.tier(j))))
            .collect();
        match tiers.first() {
            Some(&(src, tier)) => {
                record.pub_tier = tier;
                record.outcome_source = OutcomeSource::Source(src);
                for &(other, t) in &tiers[1..] {
                    if t != tier {
                        conflicts.push(MergeConflict {
                            paper_id: record.paper_id.clone(),
                            field: "pub_tier",
                            kept: tier.to_string(),
                            kept_source: src,
                            discarded: t.to_string(),
                            discarded_source: other,
                        });
                    }
                }
            }
            None => match hits.first() {
                // Known to some source, but no journal anywhere.
                Some(&(src, _)) => {
                    record.pub_tier = PubTier::Unpublished;
                    record.outcome_source = OutcomeSource::Source(src);
                }
                None => {
                    record.pub_tier = opts.default_tier;
                    record.outcome_source = OutcomeSource::Default;
                }
            },
        }

        let cites: Vec<(usize, u64)> = hits
            .iter()
            .filter_map(|(i, row)| row.citations.map(|c| (*i, c)))
            .collect();
        record.citations = cites.first().map(|&(_, c)| c);
        if let Some(&(src, kept)) = cites.first() {
            for &(other, c) in &cites[1..] {
                if c != kept {
                    conflicts.push(MergeConflict {
                        paper_id: record.paper_id.clone(),
                        field: "citations",
                        kept: kept.to_string(),
                        kept_source: src,
                        discarded: c.to_string(),
                        discarded_source: other,
                    });
                }
            }
        }
    }
    for c in &conflicts {
        log::info!(
            "{}: {} conflict, kept {} (source#{}) over {} (source#{})",
            c.paper_id,
            c.field,
            c.kept,
            c.kept_source,
            c.discarded,
            c.discarded_source
        );
    }
    conflicts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::code;

    fn edge(methods: &[&str]) -> ClaimEdge {
        ClaimEdge::new(
            code("A1"),
            code("B2"),
            methods,
            Relationship::DirectCausal,
            &MethodClassifier::default(),
        )
    }

    #[test]
    fn causal_whitelist() {
        assert!(edge(&["RCT"]).is_causal());
        assert!(!edge(&["OLS"]).is_causal());
        assert!(!edge(&[]).is_causal());
        assert!(edge(&[" 2sls "]).is_causal());
        assert!(edge(&["experiment"]).is_causal());
        assert!(edge(&["OLS", "Event Study"]).is_causal());
        assert!(!edge(&["made-up method"]).is_causal());
    }

    #[test]
    fn whitelist_override() {
        let only_ols = MethodClassifier::with_whitelist(["regression"]);
        let e = edge(&["OLS"]);
        assert!(classify_edge_causality(&e, &only_ols));
        assert!(!classify_edge_causality(&edge(&["RCT"]), &only_ols));
    }

    #[test]
    fn aliases_normalize() {
        assert_eq!(normalize_method_tag("2SLS"), "IV/2SLS");
        assert_eq!(normalize_method_tag("experiment"), "RCT/Experiment");
        assert_eq!(normalize_method_tag(" did "), "DiD");
        assert_eq!(normalize_method_tag("bespoke"), "BESPOKE");
    }

    const LINE: &str = r#"{"paper_id":"w1","year":2014,"fields":["Labor"],"edges":[
        {"source_code":"D31","sink_code":"J62","source_text":"a","sink_text":"b","methods":["OLS"],"relationship":"correlation"},
        {"source_code":"I21","sink_code":"J62","source_text":"c","sink_text":"b","methods":["RCT"],"relationship":"direct-causal"}]}"#;

    fn one_line(s: &str) -> String {
        s.replace('\n', " ")
    }

    #[test]
    fn parses_two_edge_line() {
        let report = parse_corpus(one_line(LINE).as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!(report.records.len(), 1);
        let r = &report.records[0];
        assert_eq!(r.year, 2014);
        assert_eq!(r.edges.len(), 2);
        assert!(!r.edges[0].is_causal());
        assert!(r.edges[1].is_causal());
    }

    #[test]
    fn missing_year_is_a_diagnostic() {
        let input = format!(
            "{}\n{}\n",
            r#"{"paper_id":"w0","edges":[]}"#,
            one_line(LINE)
        );
        let report = parse_corpus(input.as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(
            report.diagnostics,
            vec![Diagnostic {
                line: 1,
                message: "missing field: year".into()
            }]
        );
        let strict = IngestOptions {
            strict: true,
            ..Default::default()
        };
        assert!(matches!(
            parse_corpus(input.as_bytes(), &strict),
            Err(Error::Schema { line: 1, .. })
        ));
    }

    #[test]
    fn duplicate_ids_name_both_lines() {
        let input = format!("{}\n\n{}\n", one_line(LINE), one_line(LINE));
        let report = parse_corpus(input.as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!(report.records.len(), 1);
        assert!(report.diagnostics[0].message.contains("line 1"));
        assert!(report.diagnostics[0].message.contains("line 3"));
    }

    #[test]
    fn bad_values_rejected() {
        let cases = [
            r#"{"paper_id":"x","year":1970,"edges":[]}"#,
            r#"{"paper_id":"x","year":2000,"edges":[],"citations":-1}"#,
            r#"{"paper_id":"x","year":2000,"edges":[{"source_code":"??","sink_code":"A1","relationship":"mediation"}]}"#,
            r#"{"paper_id":"x","year":2000,"edges":[{"source_code":"A1","sink_code":"A2","relationship":"vibes"}]}"#,
            r#"not json"#,
        ];
        for c in cases {
            let report = parse_corpus(c.as_bytes(), &IngestOptions::default()).unwrap();
            assert!(report.records.is_empty(), "{c}");
            assert_eq!(report.diagnostics.len(), 1, "{c}");
        }
    }

    #[test]
    fn unknown_tags_reported_but_edge_kept() {
        let line = r#"{"paper_id":"x","year":2000,"edges":[{"source_code":"A1","sink_code":"A2","methods":["Bayesian wizardry"],"relationship":"mediation"}]}"#;
        let report = parse_corpus(line.as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!(report.records[0].edges.len(), 1);
        assert!(!report.records[0].edges[0].is_causal());
        assert_eq!(report.unknown_tags.get("BAYESIAN WIZARDRY"), Some(&1));
    }

    fn table(name: &str, rows: &[(&str, Option<&str>, Option<u64>)]) -> OutcomeTable {
        OutcomeTable::new(
            name,
            rows.iter()
                .map(|(id, j, c)| OutcomeRow {
                    paper_id: Some(id.to_string()),
                    title: None,
                    journal: j.map(str::to_string),
                    citations: *c,
                })
                .collect(),
        )
    }

    fn ranks() -> JournalRanks {
        JournalRanks::new([
            ("American Economic Review", PubTier::Top5),
            ("Journal of Public Economics", PubTier::Top6to20),
            ("Journal of Urban Economics", PubTier::Top21to100),
        ])
    }

    #[test]
    fn priority_and_fallback() {
        let mut records = vec![PaperRecord::new("p1", 2000, vec![]), PaperRecord::new("p2", 2000, vec![])];
        let sources = [
            table("s1", &[("p1", Some("american economic review"), None)]),
            table("s2", &[]),
            table("s3", &[("p1", Some("Some Field Journal"), Some(12))]),
        ];
        let conflicts = merge_outcomes(&mut records, &sources, &ranks(), MergeOptions::default());
        assert_eq!(records[0].pub_tier, PubTier::Top5);
        assert_eq!(records[0].outcome_source, OutcomeSource::Source(1));
        assert_eq!(records[0].citations, Some(12));
        assert_eq!(records[1].pub_tier, PubTier::Unpublished);
        assert_eq!(records[1].outcome_source, OutcomeSource::Default);
        assert_eq!(conflicts.len(), 1);
        assert_eq!(conflicts[0].discarded, "Other");

        let unknown_default = MergeOptions {
            default_tier: PubTier::Unknown,
        };
        merge_outcomes(&mut records, &sources, &ranks(), unknown_default);
        assert_eq!(records[1].pub_tier, PubTier::Unknown);
    }

    #[test]
    fn title_match_is_exact_after_normalization() {
        let mut r = PaperRecord::new("nope", 2000, vec![]);
        r.title = Some("The Land of Opportunity!".into());
        let src = OutcomeTable::new(
            "t",
            vec![OutcomeRow {
                paper_id: None,
                title: Some("the  land of opportunity".into()),
                journal: Some("Journal of Urban Economics".into()),
                citations: Some(3),
            }],
        );
        let mut records = vec![r];
        merge_outcomes(&mut records, &[src], &ranks(), MergeOptions::default());
        assert_eq!(records[0].pub_tier, PubTier::Top21to100);
    }

    #[test]
    fn outcome_csv_reads_missing_cells() {
        let csv = "paper_id,journal,citations\np1,American Economic Review,\np2,,7\n";
        let t = OutcomeTable::from_csv("t", csv.as_bytes()).unwrap();
        assert_eq!(t.rows[0].citations, None);
        assert_eq!(t.rows[1].journal, None);
        assert_eq!(t.rows[1].citations, Some(7));
        let ranks = JournalRanks::from_csv("journal,tier\nAmerican Economic Review,Top5\n".as_bytes()).unwrap();
        assert_eq!(ranks.tier("AMERICAN ECONOMIC REVIEW"), PubTier::Top5);
        assert_eq!(ranks.tier("Unlisted"), PubTier::Other);
    }
}
