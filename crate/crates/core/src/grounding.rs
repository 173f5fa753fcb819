//! Cell-sentence ingestion and gene grounding.
//!
//! A cell sentence is an ordered list of gene symbols, most discriminative
//! first. Grounding resolves each symbol to a Gene node of the graph after
//! dropping housekeeping genes, and keeps the original zero-based rank of
//! every surviving symbol (weights downstream depend on the position in the
//! unfiltered sentence, not the position after filtering).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeIdx, PropertyGraph};

/// One input sample: ordered ranked gene symbols plus an optional gold
/// label (Cell Ontology id or name).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSentence {
    pub cell_id: String,
    pub gene_symbols: Vec<String>,
    pub gold_label: Option<String>,
}

/// A sentence symbol resolved to a Gene node. `rank` is the position in
/// the original sentence, zero-based, kept through filtering.
#[derive(Debug, Clone, Serialize)]
pub struct GroundedGene {
    pub symbol: String,
    pub node_id: String,
    pub rank: usize,
}

/// Grounding output: surviving genes in sentence order plus the dropped
/// symbols with their reasons.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GroundedGeneSet {
    pub genes: Vec<GroundedGene>,
    pub housekeeping_dropped: Vec<String>,
    pub unmatched: Vec<String>,
    pub total_symbols: usize,
}

impl GroundedGeneSet {
    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

/// Housekeeping-gene filter. The default prefixes are ribosomal (`RPL`)
/// and mitochondrial (`MT-`) symbols; matching is case-insensitive unless
/// configured otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterConfig {
    pub housekeeping_prefixes: Vec<String>,
    pub case_sensitive: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            housekeeping_prefixes: vec!["RPL".to_string(), "MT-".to_string()],
            case_sensitive: false,
        }
    }
}

impl FilterConfig {
    /// Prefixes must be non-empty; an empty prefix would match everything.
    pub fn validate(&self) -> Result<(), String> {
        if self.housekeeping_prefixes.iter().any(|p| p.is_empty()) {
            return Err("housekeeping prefixes must be non-empty".to_string());
        }
        Ok(())
    }

    pub fn is_housekeeping(&self, symbol: &str) -> bool {
        if self.case_sensitive {
            self.housekeeping_prefixes
                .iter()
                .any(|p| symbol.starts_with(p.as_str()))
        } else {
            let lower = symbol.to_lowercase();
            self.housekeeping_prefixes
                .iter()
                .any(|p| lower.starts_with(&p.to_lowercase()))
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed dataset line: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: cell {cell_id:?} has an empty gene list")]
    EmptyGeneList {
        path: String,
        line: usize,
        cell_id: String,
    },
    #[error("{path}:{line}: cell {cell_id:?} repeats gene symbol {symbol:?}")]
    DuplicateSymbol {
        path: String,
        line: usize,
        cell_id: String,
        symbol: String,
    },
}

#[derive(Deserialize)]
struct RawSentence {
    cell_id: String,
    genes: Vec<String>,
    #[serde(default)]
    label: Option<String>,
}

/// Reads a JSONL dataset: one `{"cell_id", "genes", "label"}` object per
/// line. Duplicate symbols within a sentence are rejected
/// case-insensitively, since grounding itself is case-insensitive.
pub fn parse_cell_sentences(path: impl AsRef<Path>) -> Result<Vec<CellSentence>, DatasetError> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path_str.clone(),
        source,
    })?;
    let mut sentences = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: path_str.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawSentence =
            serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
                path: path_str.clone(),
                line: lineno,
                reason: e.to_string(),
            })?;
        if raw.genes.is_empty() {
            return Err(DatasetError::EmptyGeneList {
                path: path_str.clone(),
                line: lineno,
                cell_id: raw.cell_id,
            });
        }
        let mut seen = HashMap::new();
        for symbol in &raw.genes {
            if let Some(_prev) = seen.insert(symbol.to_lowercase(), symbol) {
                return Err(DatasetError::DuplicateSymbol {
                    path: path_str.clone(),
                    line: lineno,
                    cell_id: raw.cell_id,
                    symbol: symbol.clone(),
                });
            }
        }
        sentences.push(CellSentence {
            cell_id: raw.cell_id,
            gene_symbols: raw.genes,
            gold_label: raw.label,
        });
    }
    Ok(sentences)
}

/// Case-insensitive symbol lookup over the Gene nodes of one graph.
///
/// Built once per graph and shared across sentences; resolution uses only
/// node names, ids, and synonyms, never adjacency. Priority: canonical
/// name, then node id, then synonyms. Ambiguous matches within one tier
/// resolve to the lexicographically smallest node id.
pub struct GeneResolver {
    by_name: HashMap<String, NodeIdx>,
    by_id: HashMap<String, NodeIdx>,
    by_synonym: HashMap<String, NodeIdx>,
}

impl GeneResolver {
    pub fn new(graph: &PropertyGraph) -> GeneResolver {
        Self::with_gene_type(graph, "Gene")
    }

    /// Builds a resolver over nodes of the given semantic type name.
    pub fn with_gene_type(graph: &PropertyGraph, gene_type: &str) -> GeneResolver {
        let mut by_name: HashMap<String, NodeIdx> = HashMap::new();
        let mut by_id: HashMap<String, NodeIdx> = HashMap::new();
        let mut by_synonym: HashMap<String, NodeIdx> = HashMap::new();
        let Some(gene_ty) = graph.type_set().get(gene_type) else {
            return GeneResolver {
                by_name,
                by_id,
                by_synonym,
            };
        };
        let insert = |map: &mut HashMap<String, NodeIdx>, key: String, idx: NodeIdx| {
            match map.get(&key) {
                Some(&existing) => {
                    let keep = if graph.node(existing).id <= graph.node(idx).id {
                        existing
                    } else {
                        idx
                    };
                    if keep != existing {
                        map.insert(key.clone(), keep);
                    }
                    warn!(
                        "gene symbol {key:?} is ambiguous between {} and {}; keeping {}",
                        graph.node(existing).id,
                        graph.node(idx).id,
                        graph.node(keep).id
                    );
                }
                None => {
                    map.insert(key, idx);
                }
            }
        };
        for (i, node) in graph.nodes().enumerate() {
            if node.semantic_type != gene_ty {
                continue;
            }
            let idx = NodeIdx(i as u32);
            insert(&mut by_name, node.name.to_lowercase(), idx);
            insert(&mut by_id, node.id.to_lowercase(), idx);
            for syn in &node.synonyms {
                insert(&mut by_synonym, syn.to_lowercase(), idx);
            }
        }
        GeneResolver {
            by_name,
            by_id,
            by_synonym,
        }
    }

    pub fn resolve(&self, symbol: &str) -> Option<NodeIdx> {
        let key = symbol.to_lowercase();
        self.by_name
            .get(&key)
            .or_else(|| self.by_id.get(&key))
            .or_else(|| self.by_synonym.get(&key))
            .copied()
    }
}

/// Grounds one sentence: housekeeping symbols are dropped first, the rest
/// resolve against Gene nodes or are dropped as unmatched. Ranks are the
/// original sentence positions.
pub fn ground_with_resolver(
    sentence: &CellSentence,
    graph: &PropertyGraph,
    resolver: &GeneResolver,
    filter: &FilterConfig,
) -> GroundedGeneSet {
    let mut out = GroundedGeneSet {
        total_symbols: sentence.gene_symbols.len(),
        ..Default::default()
    };
    for (rank, symbol) in sentence.gene_symbols.iter().enumerate() {
        if filter.is_housekeeping(symbol) {
            out.housekeeping_dropped.push(symbol.clone());
            continue;
        }
        match resolver.resolve(symbol) {
            Some(idx) => out.genes.push(GroundedGene {
                symbol: symbol.clone(),
                node_id: graph.node(idx).id.clone(),
                rank,
            }),
            None => out.unmatched.push(symbol.clone()),
        }
    }
    out
}

/// One-off grounding that builds a throwaway resolver. Batch callers
/// should build a [`GeneResolver`] once and use [`ground_with_resolver`].
pub fn ground(
    sentence: &CellSentence,
    graph: &PropertyGraph,
    filter: &FilterConfig,
) -> GroundedGeneSet {
    let resolver = GeneResolver::new(graph);
    ground_with_resolver(sentence, graph, &resolver, filter)
}
