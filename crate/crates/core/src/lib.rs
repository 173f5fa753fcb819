//! Convergence-centric retrieval over typed knowledge graphs.
//!
//! Queries here are hyper-entity queries: tens of gene symbols whose joint
//! neighborhood, not any single member, determines the answer. The engine
//! grounds the symbols to graph nodes, expands all of them simultaneously
//! under a type-alternation constraint, and ranks the nodes where the
//! expansions converge. The top convergence nodes, with their supporting
//! gene coalitions, form a compact evidence context for a single LLM call
//! per sample; retrieval itself never calls the LLM.
//!
//! Modules follow the pipeline order:
//!
//! - [`graph`]: immutable typed property graph loaded from TSV.
//! - [`obo`]: minimal OBO parser and `is_a` DAG queries.
//! - [`grounding`]: cell-sentence ingestion and symbol resolution.
//! - [`traversal`]: multi-source k-hop expansion with hop-binned support.
//! - [`scoring`]: rank/IDF gene weighting and convergence scoring.
//! - [`pipeline`]: ground -> traverse -> score -> select, end to end.
//! - [`annotate`]: evidence context, prompt, chat clients, one call.
//! - [`eval`]: exact match, ancestor match, call/evidence accounting.
//! - [`synth`]: synthetic graphs with planted convergence structure.
//! - [`oracle`]: brute-force reference implementations for the test suites.

pub mod annotate;
pub mod eval;
pub mod graph;
pub mod grounding;
pub mod obo;
pub mod oracle;
pub mod pipeline;
pub mod scoring;
pub mod synth;
pub mod traversal;

pub use annotate::{
    annotate, annotate_dry_run, assemble_prompt, build_evidence, AnnotateOptions,
    AnnotationResult, ChatClient, CountingClient, EvidenceContext, HttpChatClient, LlmRequest,
    LlmResponse, MockChatClient, ResultRecord, TransportError,
};
pub use eval::{ancestor_match, evaluate, exact_match, EvalError, MetricsReport};
pub use graph::{
    GraphBuilder, GraphError, GraphNode, LoadError, Neighbor, NodeIdx, PropertyGraph,
    SemanticTypeSet, StatsReport,
};
pub use grounding::{
    ground, ground_with_resolver, parse_cell_sentences, CellSentence, DatasetError, FilterConfig,
    GeneResolver, GroundedGene, GroundedGeneSet,
};
pub use obo::{OboError, OntologyDag, OntologyTerm};
pub use pipeline::{retrieve, PipelineConfig, Retrieval, RetrieveError};
pub use scoring::{
    gene_weights, idf_weight, rank_weight, score_candidates, select_top_k, AlphaSpec, GeneWeights,
    ScoreError, ScoredCandidate, ScoringConfig, Supporter,
};
pub use synth::{generate, Manifest, PlantedSupporter, PlantedTarget, SynthError, SynthSpec};
pub use traversal::{
    multi_source_traverse, representative_path, RepresentativePath, SupportTable,
    TraversalConfig, TraverseError,
};
