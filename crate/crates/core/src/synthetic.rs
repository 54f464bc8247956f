//! Seeded synthetic corpora for benchmarks and tests.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::concept::ConceptCode;
use crate::error::{Error, Result};
use crate::ingest::{ClaimEdge, MethodClassifier, PaperRecord, PubTier, Relationship};

const CAUSAL_TAGS: &[&str] = &["DiD", "IV/2SLS", "RCT/Experiment", "RDD", "Event Study", "Synthetic Control"];
const OTHER_TAGS: &[&str] = &["OLS", "Panel Regression", "Structural Estimation", "Theoretical/Non-Empirical", "Descriptive"];
const RELATIONSHIPS: &[Relationship] = &[
    Relationship::DirectCausal,
    Relationship::IndirectCausal,
    Relationship::Mediation,
    Relationship::Confounding,
    Relationship::Theorized,
    Relationship::Correlation,
];
const FIELDS: &[&str] = &["C", "D", "E", "F", "G", "H", "I", "J", "L", "O", "Q", "R"];

/// `i`-th code of a fixed synthetic vocabulary: A1, B1, ..., Z1, A2, ...
pub fn vocabulary_code(i: usize) -> ConceptCode {
    let letter = (b'A' + (i % 26) as u8) as char;
    ConceptCode::new(&format!("{letter}{}", 1 + i / 26)).expect("vocabulary stays within two digits")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub papers: usize,
    pub first_year: i32,
    pub years: i32,
    /// Number of distinct concept codes; popularity follows 1/rank.
    pub vocabulary: usize,
    pub max_nodes: usize,
    pub max_edges: usize,
    /// Causal edge probability in the first and last year, linear between.
    pub causal_share: (f64, f64),
    pub self_loop_rate: f64,
    pub edgeless_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            papers: 1000,
            first_year: 1990,
            years: 20,
            vocabulary: 120,
            max_nodes: 8,
            max_edges: 10,
            causal_share: (0.05, 0.3),
            self_loop_rate: 0.01,
            edgeless_rate: 0.01,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.years < 1 {
            return bad("years", "must be at least 1");
        }
        if !(2..=26 * 99).contains(&self.vocabulary) {
            return bad("vocabulary", "must be between 2 and 2574");
        }
        if self.max_nodes < 2 || self.max_nodes > self.vocabulary {
            return bad("max_nodes", "must be between 2 and the vocabulary size");
        }
        if self.max_edges < 1 {
            return bad("max_edges", "must be at least 1");
        }
        Ok(())
    }
}

fn random_tier(rng: &mut ChaCha8Rng) -> PubTier {
    match rng.random_range(0..100) {
        0..5 => PubTier::Top5,
        5..15 => PubTier::Top6to20,
        15..35 => PubTier::Top21to100,
        35..70 => PubTier::Other,
        _ => PubTier::Unpublished,
    }
}

/// Generates a corpus sorted by year then paper id. Identical configs give
/// identical corpora.
pub fn generate_corpus(cfg: &SynthConfig) -> Result<Vec<PaperRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let classifier = MethodClassifier::default();
    let vocab: Vec<ConceptCode> = (0..cfg.vocabulary).map(vocabulary_code).collect();
    let popularity = WeightedIndex::new((0..cfg.vocabulary).map(|i| 1.0 / (i as f64 + 1.0))).expect("positive weights");

    let mut records = Vec::with_capacity(cfg.papers);
    for i in 0..cfg.papers {
        let year = cfg.first_year + rng.random_range(0..cfg.years);
        let t = if cfg.years > 1 {
            (year - cfg.first_year) as f64 / (cfg.years - 1) as f64
        } else {
            0.0
        };
        let p_causal = cfg.causal_share.0 + (cfg.causal_share.1 - cfg.causal_share.0) * t;

        let mut edges = Vec::new();
        if !rng.random_bool(cfg.edgeless_rate) {
            let k = rng.random_range(2..=cfg.max_nodes);
            let mut nodes: Vec<usize> = Vec::with_capacity(k);
            while nodes.len() < k {
                let n = popularity.sample(&mut rng);
                if !nodes.contains(&n) {
                    nodes.push(n);
                }
            }
            let m = rng.random_range(1..=cfg.max_edges);
            for _ in 0..m {
                let s = *nodes.choose(&mut rng).expect("non-empty");
                let d = if rng.random_bool(cfg.self_loop_rate) {
                    s
                } else {
                    **nodes.iter().filter(|&&n| n != s).collect::<Vec<_>>().choose(&mut rng).expect("k >= 2")
                };
                let tag = if rng.random_bool(p_causal) {
                    CAUSAL_TAGS.choose(&mut rng)
                } else {
                    OTHER_TAGS.choose(&mut rng)
                }
                .expect("non-empty");
                let rel = *RELATIONSHIPS.choose(&mut rng).expect("non-empty");
                edges.push(ClaimEdge::new(vocab[s].clone(), vocab[d].clone(), [tag], rel, &classifier));
            }
        }

        let mut rec = PaperRecord::new(format!("syn{i:06}"), year, edges);
        let mut fields: Vec<&str> = FIELDS.to_vec();
        fields.shuffle(&mut rng);
        rec.fields = fields[..rng.random_range(1..=2)].iter().map(|f| f.to_string()).collect();
        rec.title = Some(format!("Synthetic paper {i}"));
        rec.pub_tier = random_tier(&mut rng);
        rec.citations = (!rng.random_bool(0.05)).then(|| {
            let u: f64 = rng.random();
            (-(1.0 - u).ln() * 40.0).floor() as u64
        });
        records.push(rec);
    }
    records.sort_by(|a, b| (a.year, &a.paper_id).cmp(&(b.year, &b.paper_id)));
    Ok(records)
}

/// Corpus whose per-year mean causal share is planted exactly. For each
/// `(year, mean)` there are `papers_per_year` papers of `edges_per_paper`
/// claims each; `mean * papers_per_year * edges_per_paper` must be an
/// integer so the target is attainable.
pub fn planted_share_corpus(
    seed: u64,
    plan: &[(i32, f64)],
    papers_per_year: usize,
    edges_per_paper: usize,
) -> Result<Vec<PaperRecord>> {
    if papers_per_year == 0 || edges_per_paper == 0 {
        return Err(Error::InvalidParameter {
            name: "papers_per_year",
            reason: "papers and edges per paper must be positive".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classifier = MethodClassifier::default();
    let slots = papers_per_year * edges_per_paper;
    let mut records = Vec::new();
    for &(year, mean) in plan {
        let target = mean * slots as f64;
        let causal_total = target.round();
        if (target - causal_total).abs() > 1e-9 || !(0.0..=slots as f64).contains(&causal_total) {
            return Err(Error::InvalidParameter {
                name: "plan",
                reason: format!("mean {mean} for {year} is not attainable with {slots} claim slots"),
            });
        }
        // Spread the causal claims randomly over all (paper, edge) slots.
        let mut flags = vec![false; slots];
        flags[..causal_total as usize].iter_mut().for_each(|f| *f = true);
        flags.shuffle(&mut rng);
        for (p, chunk) in flags.chunks(edges_per_paper).enumerate() {
            let edges = chunk
                .iter()
                .enumerate()
                .map(|(j, &causal)| {
                    let s = vocabulary_code(j % 8);
                    let d = vocabulary_code((j + 1 + rng.random_range(0..6)) % 8);
                    let d = if d == s { vocabulary_code((j + 1) % 8) } else { d };
                    let tag = if causal { CAUSAL_TAGS } else { OTHER_TAGS }
                        .choose(&mut rng)
                        .expect("non-empty");
                    ClaimEdge::new(s, d, [tag], Relationship::Correlation, &classifier)
                })
                .collect();
            let mut rec = PaperRecord::new(format!("pl{year}-{p:04}"), year, edges);
            rec.fields.insert(FIELDS[p % FIELDS.len()].to_string());
            records.push(rec);
        }
    }
    Ok(records)
}
