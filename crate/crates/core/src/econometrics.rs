//! Bivariate outcome regressions with optional year fixed effects and
//! year-clustered standard errors.
//!
//! The model is `y = alpha + beta * m + delta_year + e`. With fixed effects
//! the slope comes from the within transformation (demeaning `y` and `m` by
//! year), which gives the same `beta` as a regression on a full set of year
//! dummies.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::View;
use crate::ingest::PubTier;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    /// Parameters in the equivalent dummy-variable model: 2 without fixed
    /// effects, one intercept per year plus the slope with them.
    pub params: usize,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub fixed_effects: bool,
    /// Input positions of the rows used, aligned with `residuals`.
    pub rows: Vec<usize>,
    input_len: usize,
    // Regressor net of the intercept or year means.
    x_resid: Vec<f64>,
    sxx: f64,
}

impl OlsFit {
    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum()
    }
}

/// Fits the bivariate model. Rows where `y` or `x` is missing (or
/// non-finite) are dropped pairwise.
pub fn ols_fit(y: &[Option<f64>], x: &[Option<f64>], year: &[i32], fixed_effects: bool) -> Result<OlsFit> {
    if y.len() != x.len() || y.len() != year.len() {
        return Err(Error::LengthMismatch(format!(
            "y={}, x={}, year={}",
            y.len(),
            x.len(),
            year.len()
        )));
    }
    let rows: Vec<usize> = (0..y.len())
        .filter(|&i| matches!((y[i], x[i]), (Some(a), Some(b)) if a.is_finite() && b.is_finite()))
        .collect();
    let ys: Vec<f64> = rows.iter().map(|&i| y[i].unwrap()).collect();
    let xs: Vec<f64> = rows.iter().map(|&i| x[i].unwrap()).collect();
    let n = rows.len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let (x_dev, y_dev, params) = if fixed_effects {
        let mut groups: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (k, &i) in rows.iter().enumerate() {
            groups.entry(year[i]).or_default().push(k);
        }
        if groups.len() < 2 {
            return Err(Error::TooFewYears);
        }
        let mut xd = xs.clone();
        let mut yd = ys.clone();
        for members in groups.values() {
            let m = members.len() as f64;
            let xm = members.iter().map(|&k| xs[k]).sum::<f64>() / m;
            let ym = members.iter().map(|&k| ys[k]).sum::<f64>() / m;
            for &k in members {
                xd[k] -= xm;
                yd[k] -= ym;
            }
        }
        (xd, yd, groups.len() + 1)
    } else {
        if n == 0 {
            return Err(Error::TooFewObservations { n, params: 2 });
        }
        let (xm, ym) = (mean(&xs), mean(&ys));
        (
            xs.iter().map(|v| v - xm).collect(),
            ys.iter().map(|v| v - ym).collect(),
            2,
        )
    };
    if n <= params {
        return Err(Error::TooFewObservations { n, params });
    }

    let sxx: f64 = x_dev.iter().map(|v| v * v).sum();
    let x_mean = mean(&xs);
    let total_x: f64 = xs.iter().map(|v| (v - x_mean).powi(2)).sum();
    if total_x == 0.0 {
        return Err(if fixed_effects {
            Error::CollinearWithFixedEffects
        } else {
            Error::ZeroVariance
        });
    }
    if sxx <= 1e-12 * total_x {
        return Err(Error::CollinearWithFixedEffects);
    }
    let sxy: f64 = x_dev.iter().zip(&y_dev).map(|(a, b)| a * b).sum();
    let beta = sxy / sxx;
    let y_mean = mean(&ys);
    let alpha = y_mean - beta * x_mean;
    let residuals: Vec<f64> = y_dev.iter().zip(&x_dev).map(|(yd, xd)| yd - beta * xd).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let tss: f64 = ys.iter().map(|v| (v - y_mean).powi(2)).sum();
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };

    Ok(OlsFit {
        alpha,
        beta,
        n,
        params,
        r_squared,
        residuals,
        fixed_effects,
        rows,
        input_len: y.len(),
        x_resid: x_dev,
        sxx,
    })
}

/// Conventional (homoskedastic) standard error of `beta`.
pub fn plain_se(fit: &OlsFit) -> f64 {
    let sigma2 = fit.rss() / (fit.n - fit.params) as f64;
    (sigma2 / fit.sxx).sqrt()
}

/// Cluster-robust standard error of `beta` (CR0 sandwich scaled by
/// `G/(G-1) * (n-1)/(n-k)`). `clusters` is aligned with the input rows
/// passed to [`ols_fit`].
pub fn clustered_se(fit: &OlsFit, clusters: &[i32]) -> Result<f64> {
    if clusters.len() != fit.input_len {
        return Err(Error::LengthMismatch(format!(
            "clusters={}, rows={}",
            clusters.len(),
            fit.input_len
        )));
    }
    let mut scores: BTreeMap<i32, f64> = BTreeMap::new();
    for ((&row, &xr), &e) in fit.rows.iter().zip(&fit.x_resid).zip(&fit.residuals) {
        *scores.entry(clusters[row]).or_default() += xr * e;
    }
    let g = scores.len();
    if g < 2 {
        return Err(Error::TooFewClusters(g));
    }
    let meat: f64 = scores.values().map(|s| s * s).sum();
    let (gf, nf, kf) = (g as f64, fit.n as f64, fit.params as f64);
    let correction = gf / (gf - 1.0) * (nf - 1.0) / (nf - kf);
    Ok((correction * meat).sqrt() / fit.sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Top5,
    Top6to20,
    Top21to100,
    LogCitesPlus1,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::Top5,
        Outcome::Top6to20,
        Outcome::Top21to100,
        Outcome::LogCitesPlus1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Top5 => "top5",
            Outcome::Top6to20 => "top6to20",
            Outcome::Top21to100 => "top21to100",
            Outcome::LogCitesPlus1 => "log_cites_plus1",
        }
    }

    /// Outcome value for one paper. Tier indicators are missing only for an
    /// `Unknown` tier; unpublished papers count as 0.
    pub fn value(self, tier: PubTier, citations: Option<u64>) -> Option<f64> {
        let indicator = |target: PubTier| match tier {
            PubTier::Unknown => None,
            t => Some(if t == target { 1.0 } else { 0.0 }),
        };
        match self {
            Outcome::Top5 => indicator(PubTier::Top5),
            Outcome::Top6to20 => indicator(PubTier::Top6to20),
            Outcome::Top21to100 => indicator(PubTier::Top21to100),
            Outcome::LogCitesPlus1 => citations.map(|c| (c as f64 + 1.0).ln()),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "top5" => Ok(Outcome::Top5),
            "top6to20" | "top620" => Ok(Outcome::Top6to20),
            "top21to100" | "top21100" => Ok(Outcome::Top21to100),
            "logcitesplus1" | "logcites" | "logcites1" => Ok(Outcome::LogCitesPlus1),
            _ => Err(Error::InvalidParameter {
                name: "outcome",
                reason: format!("unknown outcome {s:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Clustering {
    None,
    ByYear,
}

impl Clustering {
    pub fn as_str(self) -> &'static str {
        match self {
            Clustering::None => "none",
            Clustering::ByYear => "year",
        }
    }
}

impl FromStr for Clustering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "none" | "no" => Ok(Clustering::None),
            "year" | "by_year" | "by-year" => Ok(Clustering::ByYear),
            other => Err(Error::InvalidParameter {
                name: "cluster",
                reason: format!("unknown clustering {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegressionSpec {
    pub outcome: Outcome,
    pub measure: String,
    /// `None` for measures that are not view-specific.
    pub view: Option<View>,
    pub fixed_effects: bool,
    pub clustering: Clustering,
}

impl RegressionSpec {
    pub fn column(&self) -> String {
        match self.view {
            Some(v) => format!("{}_{}", self.measure, v.column_suffix()),
            None => self.measure.clone(),
        }
    }

    /// Both variants reported in the outcome regressions: year fixed effects
    /// with year-clustered errors, and neither.
    pub fn paired(outcome: Outcome, measure: &str, view: Option<View>) -> [RegressionSpec; 2] {
        [
            RegressionSpec {
                outcome,
                measure: measure.to_string(),
                view,
                fixed_effects: true,
                clustering: Clustering::ByYear,
            },
            RegressionSpec {
                outcome,
                measure: measure.to_string(),
                view,
                fixed_effects: false,
                clustering: Clustering::None,
            },
        ]
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" | "fe" => Ok(true),
        "0" | "false" | "no" | "n" | "" => Ok(false),
        other => Err(Error::InvalidParameter {
            name: "fe",
            reason: format!("expected a boolean, got {other:?}"),
        }),
    }
}

/// Reads a spec file with header `outcome,measure,view,fe,cluster`. An empty
/// view (or `none`) selects a view-free column.
pub fn read_specs<R: Read>(input: R) -> Result<Vec<RegressionSpec>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut specs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let view = match get(2).to_ascii_lowercase().as_str() {
            "" | "none" | "-" => None,
            v => Some(v.parse()?),
        };
        specs.push(RegressionSpec {
            outcome: get(0).parse()?,
            measure: get(1).to_string(),
            view,
            fixed_effects: parse_bool(get(3))?,
            clustering: get(4).parse()?,
        });
    }
    Ok(specs)
}

/// Paper-level measures plus the outcome fields, column-oriented.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasureTable {
    pub paper_ids: Vec<String>,
    pub years: Vec<i32>,
    pub tiers: Vec<PubTier>,
    pub citations: Vec<Option<u64>>,
    pub columns: BTreeMap<String, Vec<Option<f64>>>,
}

const ID_COLUMNS: [&str; 4] = ["paper_id", "year", "pub_tier", "citations"];

impl MeasureTable {
    pub fn len(&self) -> usize {
        self.paper_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paper_ids.is_empty()
    }

    /// Reads a measures table; lines starting with `#` are skipped, empty
    /// cells are missing.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(input);
        let headers = rdr.headers()?.clone();
        let idx = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::UnknownMeasure(name.to_string()))
        };
        let (id_i, year_i, tier_i, cites_i) = (idx("paper_id")?, idx("year")?, idx("pub_tier")?, idx("citations")?);
        let mut table = MeasureTable::default();
        let measure_cols: Vec<(usize, String)> = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| !ID_COLUMNS.contains(h))
            .map(|(i, h)| (i, h.to_string()))
            .collect();
        for (_, name) in &measure_cols {
            table.columns.insert(name.clone(), Vec::new());
        }
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |message: String| Error::Schema {
                line: line + 2,
                message,
            };
            let cell = |i: usize| rec.get(i).unwrap_or("");
            table.paper_ids.push(cell(id_i).to_string());
            table
                .years
                .push(cell(year_i).parse().map_err(|_| bad(format!("bad year {:?}", cell(year_i))))?);
            table.tiers.push(if cell(tier_i).is_empty() {
                PubTier::Unknown
            } else {
                cell(tier_i).parse().map_err(bad)?
            });
            table.citations.push(match cell(cites_i) {
                "" => None,
                c => Some(c.parse().map_err(|_| bad(format!("bad citations {c:?}")))?),
            });
            for (i, name) in &measure_cols {
                let v = match cell(*i) {
                    "" => None,
                    c => Some(c.parse::<f64>().map_err(|_| bad(format!("{name}: not numeric: {c:?}")))?),
                };
                table.columns.get_mut(name).expect("inserted").push(v);
            }
        }
        Ok(table)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        MeasureTable::from_csv(file)
    }

    pub fn outcome(&self, outcome: Outcome) -> Vec<Option<f64>> {
        self.tiers
            .iter()
            .zip(&self.citations)
            .map(|(t, c)| outcome.value(*t, *c))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub spec: RegressionSpec,
    pub alpha: f64,
    pub beta: f64,
    pub se_beta: f64,
    pub n: usize,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

pub fn run_spec(table: &MeasureTable, spec: &RegressionSpec) -> Result<RegressionResult> {
    let column = spec.column();
    let x = table
        .columns
        .get(&column)
        .ok_or_else(|| Error::UnknownMeasure(column.clone()))?;
    let y = table.outcome(spec.outcome);
    if y.iter().all(Option::is_none) {
        return Err(Error::UnderivableOutcome(spec.outcome.to_string()));
    }
    let fit = ols_fit(&y, x, &table.years, spec.fixed_effects)?;
    let se_beta = match spec.clustering {
        Clustering::None => plain_se(&fit),
        Clustering::ByYear => clustered_se(&fit, &table.years)?,
    };
    Ok(RegressionResult {
        spec: spec.clone(),
        alpha: fit.alpha,
        beta: fit.beta,
        se_beta,
        n: fit.n,
        r_squared: fit.r_squared,
        residuals: fit.residuals,
    })
}

/// Runs independent specs in parallel; results keep the input order.
pub fn run_specs(table: &MeasureTable, specs: &[RegressionSpec]) -> Vec<Result<RegressionResult>> {
    specs.par_iter().map(|s| run_spec(table, s)).collect()
}

pub const RESULT_HEADER: [&str; 10] = [
    "outcome", "measure", "view", "fe", "cluster", "alpha", "beta", "se", "n", "r_squared",
];

impl RegressionResult {
    pub fn tidy_row(&self) -> [String; 10] {
        [
            self.spec.outcome.to_string(),
            self.spec.measure.clone(),
            self.spec.view.map(|v| v.as_str().to_string()).unwrap_or_default(),
            self.spec.fixed_effects.to_string(),
            self.spec.clustering.as_str().to_string(),
            self.alpha.to_string(),
            self.beta.to_string(),
            self.se_beta.to_string(),
            self.n.to_string(),
            self.r_squared.to_string(),
        ]
    }
}
