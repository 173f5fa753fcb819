//! Gene weighting and convergence scoring.
//!
//! Each supporting gene contributes `w_rank * w_idf`, where `w_rank`
//! favors genes ranked early in the cell sentence and `w_idf` downweights
//! genes that reach many candidate targets in the current traversal. A
//! candidate's score sums these contributions per hop bin, scaled by a
//! non-increasing hop-decay weight. The IDF denominator is the traversal's
//! own df, never a global corpus statistic.
//!
//! Determinism: summation runs hop-ascending then rank-ascending, and the
//! final ordering breaks score ties by target node id, so repeated runs
//! produce byte-identical rankings.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::graph::PropertyGraph;
use crate::grounding::GroundedGeneSet;
use crate::traversal::SupportTable;

/// Hop-decay weights: either a geometric family `alpha_h = gamma^(h-1)` or
/// an explicit per-hop list. Both must be positive and non-increasing.
#[derive(Debug, Clone, Serialize)]
pub enum AlphaSpec {
    Geometric(f64),
    Explicit(Vec<f64>),
}

impl AlphaSpec {
    fn validate(&self) -> Result<(), ScoreError> {
        match self {
            AlphaSpec::Geometric(gamma) => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return Err(ScoreError::InvalidAlpha(format!(
                        "gamma must be in (0, 1], got {gamma}"
                    )));
                }
            }
            AlphaSpec::Explicit(alphas) => {
                if alphas.is_empty() {
                    return Err(ScoreError::InvalidAlpha("empty alpha list".into()));
                }
                for (i, &a) in alphas.iter().enumerate() {
                    if a <= 0.0 || !a.is_finite() {
                        return Err(ScoreError::InvalidAlpha(format!(
                            "alpha_{} must be a positive finite number, got {a}",
                            i + 1
                        )));
                    }
                }
                if alphas.windows(2).any(|w| w[1] > w[0]) {
                    return Err(ScoreError::InvalidAlpha(
                        "alpha weights must be non-increasing in hop count".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Decay weight for hop `h >= 1`.
    pub fn at(&self, hop: usize) -> Result<f64, ScoreError> {
        debug_assert!(hop >= 1);
        match self {
            AlphaSpec::Geometric(gamma) => Ok(gamma.powi(hop as i32 - 1)),
            AlphaSpec::Explicit(alphas) => alphas
                .get(hop - 1)
                .copied()
                .ok_or(ScoreError::MissingAlpha { hop }),
        }
    }
}

/// Scoring parameters. `top_k` is the number of convergence nodes kept as
/// evidence.
#[derive(Debug, Clone, Serialize)]
pub struct ScoringConfig {
    pub alpha: AlphaSpec,
    pub top_k: usize,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            alpha: AlphaSpec::Geometric(0.5),
            top_k: 10,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        self.alpha.validate()?;
        if self.top_k < 1 {
            return Err(ScoreError::InvalidTopK(self.top_k));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("rank weight is undefined for df = 0")]
    ZeroDf,
    #[error("df {df} exceeds candidate set size {t_size}")]
    DfExceedsTargets { df: usize, t_size: usize },
    #[error("invalid hop-decay weights: {0}")]
    InvalidAlpha(String),
    #[error("no alpha weight configured for hop {hop}")]
    MissingAlpha { hop: usize },
    #[error("top-k must be at least 1, got {0}")]
    InvalidTopK(usize),
    #[error("support table and grounded set disagree: {0}")]
    InconsistentInputs(String),
}

/// Rank-importance weight `1 / log2(rank + 2)` over zero-based ranks:
/// rank 0 weighs 1.0 and the weight decays logarithmically.
pub fn rank_weight(rank: usize) -> f64 {
    1.0 / (rank as f64 + 2.0).log2()
}

/// Graph-specificity weight `ln(|T| / df + 1)`, computed against this
/// traversal's candidate set. Genes that reach every candidate still keep
/// weight `ln 2`.
pub fn idf_weight(df: usize, t_size: usize) -> Result<f64, ScoreError> {
    if df == 0 {
        return Err(ScoreError::ZeroDf);
    }
    if df > t_size {
        return Err(ScoreError::DfExceedsTargets { df, t_size });
    }
    Ok((t_size as f64 / df as f64 + 1.0).ln())
}

/// Per-gene weight components for one scored sample.
#[derive(Debug, Clone, Serialize)]
pub struct GeneWeight {
    pub symbol: String,
    pub rank: usize,
    pub w_rank: f64,
    pub w_idf: f64,
    pub combined: f64,
}

/// Weights for every grounded gene that reached at least one target;
/// genes with df = 0 are listed separately and contribute nothing.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GeneWeights {
    pub entries: BTreeMap<usize, GeneWeight>,
    pub zero_df_ranks: Vec<usize>,
}

/// Computes combined weights from the table's df counts. Fails when the
/// table was built from a different grounded set.
pub fn gene_weights(
    table: &SupportTable,
    grounded: &GroundedGeneSet,
) -> Result<GeneWeights, ScoreError> {
    if table.source_count() != grounded.len() {
        return Err(ScoreError::InconsistentInputs(format!(
            "table has {} sources, grounded set has {}",
            table.source_count(),
            grounded.len()
        )));
    }
    let t_size = table.candidate_count();
    let mut weights = GeneWeights::default();
    for gene in &grounded.genes {
        let df = table
            .reachable_target_count(gene.rank)
            .map_err(|_| {
                ScoreError::InconsistentInputs(format!(
                    "gene rank {} missing from support table",
                    gene.rank
                ))
            })?;
        if df == 0 {
            weights.zero_df_ranks.push(gene.rank);
            continue;
        }
        let w_rank = rank_weight(gene.rank);
        let w_idf = idf_weight(df, t_size)?;
        weights.entries.insert(
            gene.rank,
            GeneWeight {
                symbol: gene.symbol.clone(),
                rank: gene.rank,
                w_rank,
                w_idf,
                combined: w_rank * w_idf,
            },
        );
    }
    Ok(weights)
}

/// One supporting gene of a scored candidate.
#[derive(Debug, Clone, Serialize)]
pub struct Supporter {
    pub symbol: String,
    pub rank: usize,
    pub weight: f64,
}

/// A convergence node with its score and supporter coalition, hop-binned.
#[derive(Debug, Clone, Serialize)]
pub struct ScoredCandidate {
    #[serde(rename = "target")]
    pub target_id: String,
    pub name: String,
    pub score: f64,
    pub supporters: BTreeMap<u8, Vec<Supporter>>,
    #[serde(skip)]
    pub supporter_count: usize,
}

/// Scores every candidate target and returns the full ranking: score
/// descending, ties broken by target id ascending.
pub fn score_candidates(
    graph: &PropertyGraph,
    table: &SupportTable,
    grounded: &GroundedGeneSet,
    config: &ScoringConfig,
) -> Result<Vec<ScoredCandidate>, ScoreError> {
    config.validate()?;
    let weights = gene_weights(table, grounded)?;
    let mut out = Vec::with_capacity(table.candidate_count());
    for (target, bins) in table.iter() {
        let mut score = 0.0f64;
        let mut supporters: BTreeMap<u8, Vec<Supporter>> = BTreeMap::new();
        let mut supporter_count = 0usize;
        for (&hop, ranks) in bins {
            let alpha = config.alpha.at(usize::from(hop))?;
            let mut bin_supporters = Vec::with_capacity(ranks.len());
            for &rank in ranks {
                let w = weights.entries.get(&rank).ok_or_else(|| {
                    ScoreError::InconsistentInputs(format!(
                        "rank {rank} appears in a bin but has no weight"
                    ))
                })?;
                score += alpha * w.combined;
                bin_supporters.push(Supporter {
                    symbol: w.symbol.clone(),
                    rank,
                    weight: w.combined,
                });
                supporter_count += 1;
            }
            supporters.insert(hop, bin_supporters);
        }
        let node = graph.node(target);
        out.push(ScoredCandidate {
            target_id: node.id.clone(),
            name: node.name.clone(),
            score,
            supporters,
            supporter_count,
        });
    }
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.target_id.cmp(&b.target_id))
    });
    Ok(out)
}

/// Keeps the first `min(k, len)` candidates of an already-ranked list.
pub fn select_top_k(
    mut ranked: Vec<ScoredCandidate>,
    k: usize,
) -> Result<Vec<ScoredCandidate>, ScoreError> {
    if k < 1 {
        return Err(ScoreError::InvalidTopK(k));
    }
    ranked.truncate(k);
    Ok(ranked)
}
