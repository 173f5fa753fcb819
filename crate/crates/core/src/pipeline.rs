//! Retrieval pipeline: ground, traverse, score, select.
//!
//! Everything here is pure graph computation; no LLM client is reachable
//! from any code path in this module.

use serde::Serialize;
use thiserror::Error;

use crate::graph::PropertyGraph;
use crate::grounding::{ground_with_resolver, CellSentence, FilterConfig, GeneResolver, GroundedGeneSet};
use crate::scoring::{score_candidates, select_top_k, ScoreError, ScoredCandidate, ScoringConfig};
use crate::traversal::{multi_source_traverse, SupportTable, TraversalConfig, TraverseError};

/// Knobs for the full retrieval pipeline.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PipelineConfig {
    pub filter: FilterConfig,
    pub traversal: TraversalConfig,
    pub scoring: ScoringConfig,
}

#[derive(Debug, Error)]
pub enum RetrieveError {
    #[error(transparent)]
    Traverse(#[from] TraverseError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// Everything retrieval produces for one sample.
#[derive(Debug)]
pub struct Retrieval {
    pub grounded: GroundedGeneSet,
    pub table: SupportTable,
    pub ranked: Vec<ScoredCandidate>,
    pub top: Vec<ScoredCandidate>,
}

/// Runs the retrieval stages for one sentence. The resolver must have been
/// built over the same graph.
pub fn retrieve(
    graph: &PropertyGraph,
    resolver: &GeneResolver,
    sentence: &CellSentence,
    config: &PipelineConfig,
) -> Result<Retrieval, RetrieveError> {
    let grounded = ground_with_resolver(sentence, graph, resolver, &config.filter);
    let table = multi_source_traverse(graph, &grounded, &config.traversal)?;
    let ranked = score_candidates(graph, &table, &grounded, &config.scoring)?;
    let top = select_top_k(ranked.clone(), config.scoring.top_k)?;
    Ok(Retrieval {
        grounded,
        table,
        ranked,
        top,
    })
}
