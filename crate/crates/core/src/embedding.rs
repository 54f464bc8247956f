//! Nearest-concept lookup by cosine similarity over precomputed embeddings.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::concept::ConceptCode;
use crate::error::{Error, Result};

/// Compensated (Neumaier) sum of products. Keeps long dot products accurate
/// to within a few ulps of the exact result.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let term = x * y;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity clamped to [-1, 1]. Returns `None` if either vector has
/// zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Reads `id,v1,...,vD` rows (no header). All rows must share the dimension
/// of the first.
pub fn read_vectors<R: Read>(reader: R) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    let mut dimension = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut cells = rec.iter();
        let Some(id) = cells.next().filter(|id| !id.is_empty()) else {
            continue;
        };
        let values = cells
            .map(|c| {
                c.parse::<f64>().map_err(|_| Error::Schema {
                    line: i + 1,
                    message: format!("non-numeric value {c:?} for id={id}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEmbedding { id: id.to_string() });
        }
        let expected = *dimension.get_or_insert(values.len());
        if values.len() != expected || expected == 0 {
            return Err(Error::DimensionMismatch {
                id: id.to_string(),
                expected,
                found: values.len(),
            });
        }
        rows.push((id.to_string(), values));
    }
    Ok(rows)
}

/// Immutable index from concept code to embedding vector.
#[derive(Debug, Clone)]
pub struct EmbeddingIndex {
    dimension: usize,
    entries: BTreeMap<ConceptCode, Vec<f64>>,
}

impl EmbeddingIndex {
    pub fn new(rows: Vec<(ConceptCode, Vec<f64>)>) -> Result<Self> {
        let Some(dimension) = rows.first().map(|(_, v)| v.len()) else {
            return Err(Error::EmptyIndex);
        };
        let mut entries = BTreeMap::new();
        for (id, values) in rows {
            if values.len() != dimension {
                return Err(Error::DimensionMismatch {
                    id: id.to_string(),
                    expected: dimension,
                    found: values.len(),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEmbedding { id: id.to_string() });
            }
            if entries.contains_key(&id) {
                return Err(Error::DuplicateEmbedding(id.to_string()));
            }
            entries.insert(id, values);
        }
        Ok(EmbeddingIndex { dimension, entries })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let rows = read_vectors(reader)?
            .into_iter()
            .map(|(id, v)| Ok((ConceptCode::new(&id)?, v)))
            .collect::<Result<Vec<_>>>()?;
        EmbeddingIndex::new(rows)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        EmbeddingIndex::from_reader(file)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, code: &ConceptCode) -> Option<&[f64]> {
        self.entries.get(code).map(Vec::as_slice)
    }

    pub fn codes(&self) -> impl Iterator<Item = &ConceptCode> {
        self.entries.keys()
    }

    fn scores<'a>(&'a self, query: &'a [f64]) -> Result<impl Iterator<Item = (&'a ConceptCode, f64)> + 'a> {
        if query.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                id: "query".into(),
                expected: self.dimension,
                found: query.len(),
            });
        }
        let qn = norm(query);
        if qn == 0.0 {
            return Err(Error::ZeroNormQuery);
        }
        Ok(self.entries.iter().map(move |(code, v)| {
            let vn = norm(v);
            let s = if vn == 0.0 {
                0.0
            } else {
                (dot(query, v) / (qn * vn)).clamp(-1.0, 1.0)
            };
            (code, s)
        }))
    }
}

/// Best-matching concept for `query`. Ties go to the lexicographically
/// smallest code.
pub fn match_concept(query: &[f64], index: &EmbeddingIndex) -> Result<(ConceptCode, f64)> {
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let mut best: Option<(&ConceptCode, f64)> = None;
    for (code, s) in index.scores(query)? {
        // BTreeMap iteration is in code order, so strict > keeps the first tie.
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((code, s));
        }
    }
    let (code, s) = best.expect("non-empty index");
    Ok((code.clone(), s))
}

/// All concepts with similarity at or above `threshold`, best first.
pub fn match_concepts_above(
    query: &[f64],
    index: &EmbeddingIndex,
    threshold: f64,
) -> Result<Vec<(ConceptCode, f64)>> {
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let mut hits: Vec<(ConceptCode, f64)> = index
        .scores(query)?
        .filter(|(_, s)| *s >= threshold)
        .map(|(c, s)| (c.clone(), s))
        .collect();
    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(hits)
}

/// Source of embedding vectors for free-text queries, such as a remote
/// embedding service.
pub trait EmbeddingProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;
}
