use std::path::PathBuf;

/// Errors produced by the measure pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid concept code {0:?}: expected one letter followed by one or two digits")]
    InvalidConceptCode(String),

    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("duplicate paper_id {paper_id:?}: first seen on line {first_line}, again on line {second_line}")]
    DuplicatePaper {
        paper_id: String,
        first_line: usize,
        second_line: usize,
    },

    #[error("dimension mismatch: id={id} (expected {expected}, found {found})")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate embedding id {0}")]
    DuplicateEmbedding(String),

    #[error("embedding table is empty")]
    EmptyIndex,

    #[error("query vector has zero norm")]
    ZeroNormQuery,

    #[error("non-finite value in embedding row {id}")]
    NonFiniteEmbedding { id: String },

    #[error("paper {paper_id}: {what} exceeds cap of {cap}")]
    ResourceCap {
        paper_id: String,
        what: &'static str,
        cap: u64,
    },

    #[error("year regression: ledger already holds year {through_year}, got {year}")]
    YearRegression { through_year: i32, year: i32 },

    #[error("papers of one batch must share a year: found {first} and {other}")]
    MixedYears { first: i32, other: i32 },

    #[error("subgraph size {0} unsupported: expected 2..=4")]
    UnsupportedSubgraphSize(usize),

    #[error("path length must be at least 1")]
    InvalidPathLength,

    #[error("graph is empty")]
    EmptyGraph,

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate normalization: series for {node} is constant")]
    DegenerateNormalization { node: String },

    #[error("node {0} never appears in the corpus")]
    UnknownNode(String),

    #[error("collinear with fixed effects: measure has no within-year variation")]
    CollinearWithFixedEffects,

    #[error("measure has zero variance")]
    ZeroVariance,

    #[error("too few observations: n={n}, parameters={params}")]
    TooFewObservations { n: usize, params: usize },

    #[error("fixed effects need at least two distinct years")]
    TooFewYears,

    #[error("clustered standard errors need at least two clusters, found {0}")]
    TooFewClusters(usize),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("outcome {0} cannot be derived: no non-missing values")]
    UnderivableOutcome(String),

    #[error("unknown measure column {0:?}")]
    UnknownMeasure(String),

    #[error("config: {0}")]
    Config(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
