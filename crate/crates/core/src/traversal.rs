//! Multi-source, relation-agnostic, type-alternating k-hop traversal.
//!
//! Every grounded gene is expanded breadth-first over the graph, treating
//! all edge types as traversable in both directions. An edge is usable only
//! if its endpoints differ in semantic type (when alternation is enforced),
//! which rules out degenerate same-type chains. For each node of the target
//! type reached within the horizon, the gene is recorded in the hop bin of
//! its minimal constrained distance, so a gene supports a candidate at
//! exactly one hop count.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Direction, NodeIdx, PropertyGraph};
use crate::grounding::GroundedGeneSet;

/// Traversal parameters. `k` is the hop horizon; targets are the nodes of
/// `target_type`; `enforce_type_alternation` applies the consecutive-type
/// filter (disabling it is only meant for ablation studies).
#[derive(Debug, Clone, Serialize)]
pub struct TraversalConfig {
    pub k: usize,
    pub target_type: String,
    pub enforce_type_alternation: bool,
}

impl Default for TraversalConfig {
    fn default() -> Self {
        TraversalConfig {
            k: 2,
            target_type: "CellType".to_string(),
            enforce_type_alternation: true,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraverseError {
    #[error("traversal horizon k must be at least 1")]
    InvalidHorizon,
    #[error("target type {0:?} is not in the graph's semantic type set")]
    UnknownTargetType(String),
    #[error("grounded gene {symbol:?} refers to unknown node id {node_id:?}")]
    UnknownSourceNode { symbol: String, node_id: String },
    #[error("unknown gene rank {0}")]
    UnknownGeneRank(usize),
}

/// Work counters kept for the complexity guardrail and CLI diagnostics.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct TraversalWork {
    /// Largest per-gene visited set, bounded by the node count.
    pub max_visited: usize,
    /// Total adjacency entries scanned across all source genes.
    pub edges_scanned: usize,
}

/// Hop-binned support per candidate target, plus per-gene df counts.
///
/// For each target `t` and hop `h`, `bins` holds the ranks of the grounded
/// genes whose minimal constrained distance to `t` is exactly `h`; a gene
/// therefore appears in at most one bin per target. `df(g)` is the number
/// of distinct targets a gene reaches within the horizon.
#[derive(Debug, Clone, Default)]
pub struct SupportTable {
    support: BTreeMap<NodeIdx, BTreeMap<u8, Vec<usize>>>,
    df: BTreeMap<usize, usize>,
    source_count: usize,
    k: usize,
    work: TraversalWork,
}

impl SupportTable {
    /// Assembles a table from raw bins, recomputing df. Intended for
    /// tests and diagnostics that need hand-built support patterns.
    pub fn from_bins(
        support: BTreeMap<NodeIdx, BTreeMap<u8, Vec<usize>>>,
        source_ranks: &[usize],
        k: usize,
    ) -> SupportTable {
        let mut df: BTreeMap<usize, usize> = source_ranks.iter().map(|&r| (r, 0)).collect();
        for bins in support.values() {
            for ranks in bins.values() {
                for &rank in ranks {
                    *df.entry(rank).or_insert(0) += 1;
                }
            }
        }
        SupportTable {
            support,
            df,
            source_count: source_ranks.len(),
            k,
            work: TraversalWork::default(),
        }
    }

    /// Overrides the df table; only meaningful in tests that freeze df
    /// while editing bins.
    pub fn with_frozen_df(mut self, df: BTreeMap<usize, usize>) -> SupportTable {
        self.df = df;
        self
    }

    pub fn candidate_count(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn candidates(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        self.support.keys().copied()
    }

    pub fn contains(&self, target: NodeIdx) -> bool {
        self.support.contains_key(&target)
    }

    pub fn bins(&self, target: NodeIdx) -> Option<&BTreeMap<u8, Vec<usize>>> {
        self.support.get(&target)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeIdx, &BTreeMap<u8, Vec<usize>>)> {
        self.support.iter().map(|(&t, bins)| (t, bins))
    }

    /// df(g): distinct targets reachable from the gene with this rank.
    pub fn reachable_target_count(&self, gene_rank: usize) -> Result<usize, TraverseError> {
        self.df
            .get(&gene_rank)
            .copied()
            .ok_or(TraverseError::UnknownGeneRank(gene_rank))
    }

    pub fn df_entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.df.iter().map(|(&r, &d)| (r, d))
    }

    pub fn source_count(&self) -> usize {
        self.source_count
    }

    pub fn horizon(&self) -> usize {
        self.k
    }

    pub fn work(&self) -> TraversalWork {
        self.work
    }

    /// Debug view: target id -> hop -> supporter gene symbols.
    pub fn dump(
        &self,
        graph: &PropertyGraph,
        grounded: &GroundedGeneSet,
    ) -> BTreeMap<String, BTreeMap<String, Vec<String>>> {
        let by_rank: HashMap<usize, &str> = grounded
            .genes
            .iter()
            .map(|g| (g.rank, g.symbol.as_str()))
            .collect();
        self.support
            .iter()
            .map(|(&target, bins)| {
                let hops = bins
                    .iter()
                    .map(|(&hop, ranks)| {
                        let symbols = ranks
                            .iter()
                            .map(|r| by_rank.get(r).copied().unwrap_or("?").to_string())
                            .collect();
                        (hop.to_string(), symbols)
                    })
                    .collect();
                (graph.node(target).id.clone(), hops)
            })
            .collect()
    }
}

/// Breadth-first distances from `start` over the filtered graph, up to
/// `max_depth` hops. Sparse map: only reached nodes appear.
fn bfs_distances(
    graph: &PropertyGraph,
    start: NodeIdx,
    max_depth: usize,
    enforce_alternation: bool,
    work: Option<&mut TraversalWork>,
) -> HashMap<NodeIdx, u8> {
    let mut dist: HashMap<NodeIdx, u8> = HashMap::new();
    let mut queue: VecDeque<NodeIdx> = VecDeque::new();
    dist.insert(start, 0);
    queue.push_back(start);
    let mut scanned = 0usize;
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if usize::from(du) == max_depth {
            continue;
        }
        let tu = graph.semantic_type_of(u);
        for entry in graph.adjacency_of(u) {
            scanned += 1;
            let v = entry.neighbor;
            if enforce_alternation && graph.semantic_type_of(v) == tu {
                continue;
            }
            if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(v) {
                slot.insert(du + 1);
                queue.push_back(v);
            }
        }
    }
    if let Some(work) = work {
        work.edges_scanned += scanned;
        work.max_visited = work.max_visited.max(dist.len());
    }
    dist
}

/// Stage 1: expands every grounded gene up to `k` hops and records
/// hop-binned support over the discovered targets. Grounded source nodes
/// are never targets, even when another gene reaches them.
pub fn multi_source_traverse(
    graph: &PropertyGraph,
    grounded: &GroundedGeneSet,
    config: &TraversalConfig,
) -> Result<SupportTable, TraverseError> {
    if config.k < 1 {
        return Err(TraverseError::InvalidHorizon);
    }
    if grounded.is_empty() {
        return Ok(SupportTable {
            k: config.k,
            ..Default::default()
        });
    }
    let target_ty = graph
        .type_set()
        .get(&config.target_type)
        .ok_or_else(|| TraverseError::UnknownTargetType(config.target_type.clone()))?;

    let mut sources = Vec::with_capacity(grounded.len());
    for gene in &grounded.genes {
        let idx = graph
            .node_index(&gene.node_id)
            .ok_or_else(|| TraverseError::UnknownSourceNode {
                symbol: gene.symbol.clone(),
                node_id: gene.node_id.clone(),
            })?;
        sources.push((gene.rank, idx));
    }
    let excluded: std::collections::HashSet<NodeIdx> =
        sources.iter().map(|&(_, idx)| idx).collect();

    let mut table = SupportTable {
        source_count: grounded.len(),
        k: config.k,
        ..Default::default()
    };
    for &(rank, source) in &sources {
        let dist = bfs_distances(
            graph,
            source,
            config.k,
            config.enforce_type_alternation,
            Some(&mut table.work),
        );
        let mut df_count = 0usize;
        // BTreeMap iteration keeps per-gene recording deterministic; the
        // per-(gene,target) result itself is schedule-independent.
        let ordered: BTreeMap<NodeIdx, u8> = dist.into_iter().collect();
        for (node, hop) in ordered {
            if hop == 0 || excluded.contains(&node) {
                continue;
            }
            if graph.semantic_type_of(node) != target_ty {
                continue;
            }
            table
                .support
                .entry(node)
                .or_default()
                .entry(hop)
                .or_default()
                .push(rank);
            df_count += 1;
        }
        table.df.insert(rank, df_count);
    }
    Ok(table)
}

/// One minimal-length constrained path, chosen deterministically.
#[derive(Debug, Clone)]
pub struct RepresentativePath {
    pub nodes: Vec<NodeIdx>,
    /// Relation index and stored direction of the edge joining consecutive
    /// nodes (direction is relative to the earlier node).
    pub links: Vec<(u16, Direction)>,
}

impl RepresentativePath {
    pub fn hops(&self) -> usize {
        self.links.len()
    }

    /// Renders the path as a node-name/relation chain, e.g.
    /// `G -PARTICIPATES_IN-> P <-CAPABLE_OF- C`.
    pub fn render(&self, graph: &PropertyGraph) -> String {
        let mut out = String::new();
        out.push_str(&graph.node(self.nodes[0]).name);
        for (i, &(rel, dir)) in self.links.iter().enumerate() {
            let rel_name = graph.relation_name(rel);
            match dir {
                Direction::Outgoing => {
                    out.push_str(" -");
                    out.push_str(rel_name);
                    out.push_str("-> ");
                }
                Direction::Incoming => {
                    out.push_str(" <-");
                    out.push_str(rel_name);
                    out.push_str("- ");
                }
            }
            out.push_str(&graph.node(self.nodes[i + 1]).name);
        }
        out
    }
}

/// Finds the minimal constrained path from `source` to `target` within
/// `k` hops whose node-id sequence is lexicographically smallest among all
/// minimal paths. Returns `None` when the target is out of reach.
///
/// Precomputed distance maps from [`distances_from`] can be reused across
/// calls via [`representative_path_with`].
pub fn representative_path(
    graph: &PropertyGraph,
    source: NodeIdx,
    target: NodeIdx,
    config: &TraversalConfig,
) -> Option<RepresentativePath> {
    let from_source = distances_from(graph, source, config);
    let from_target = distances_from(graph, target, config);
    representative_path_with(graph, source, target, config, &from_source, &from_target)
}

/// Distance map used for path reconstruction; `k` hops from `start`.
pub fn distances_from(
    graph: &PropertyGraph,
    start: NodeIdx,
    config: &TraversalConfig,
) -> HashMap<NodeIdx, u8> {
    bfs_distances(graph, start, config.k, config.enforce_type_alternation, None)
}

pub fn representative_path_with(
    graph: &PropertyGraph,
    source: NodeIdx,
    target: NodeIdx,
    config: &TraversalConfig,
    from_source: &HashMap<NodeIdx, u8>,
    from_target: &HashMap<NodeIdx, u8>,
) -> Option<RepresentativePath> {
    let total = *from_source.get(&target)?;
    if usize::from(total) > config.k {
        return None;
    }
    let mut nodes = vec![source];
    let mut links = Vec::with_capacity(usize::from(total));
    let mut current = source;
    for step in 0..total {
        let want_from_source = step + 1;
        let want_from_target = total - step - 1;
        let tu = graph.semantic_type_of(current);
        // Adjacency is sorted by neighbor id, so the first admissible
        // neighbor is the lexicographically smallest continuation.
        let mut chosen: Option<(NodeIdx, u16, Direction)> = None;
        for entry in graph.adjacency_of(current) {
            let v = entry.neighbor;
            if let Some(&(prev, _, _)) = chosen.as_ref() {
                if v != prev {
                    break;
                }
                // Same neighbor again: first entry already had the smallest
                // (relation, direction) pair.
                continue;
            }
            if config.enforce_type_alternation && graph.semantic_type_of(v) == tu {
                continue;
            }
            if from_source.get(&v) != Some(&want_from_source) {
                continue;
            }
            if from_target.get(&v) != Some(&want_from_target) {
                continue;
            }
            chosen = Some((v, entry.relation, entry.direction));
        }
        let (next, rel, dir) = chosen?;
        nodes.push(next);
        links.push((rel, dir));
        current = next;
    }
    Some(RepresentativePath { nodes, links })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, SemanticTypeSet};
    use crate::grounding::GroundedGene;

    fn grounded_from(pairs: &[(&str, &str, usize)]) -> GroundedGeneSet {
        GroundedGeneSet {
            genes: pairs
                .iter()
                .map(|(symbol, node_id, rank)| GroundedGene {
                    symbol: symbol.to_string(),
                    node_id: node_id.to_string(),
                    rank: *rank,
                })
                .collect(),
            housekeeping_dropped: vec![],
            unmatched: vec![],
            total_symbols: pairs.len(),
        }
    }

    /// Gene G is a direct marker for C and participates in P, which C is
    /// capable of; gene H links only through P.
    fn toy() -> PropertyGraph {
        let mut b = GraphBuilder::new(SemanticTypeSet::default());
        b.add_node("G:1", "Gene", "G", vec![]).unwrap();
        b.add_node("G:2", "Gene", "H", vec![]).unwrap();
        b.add_node("BP:1", "BiologicalProcess", "P", vec![]).unwrap();
        b.add_node("CL:1", "CellType", "C", vec![]).unwrap();
        b.add_edge("G:1", "IS_MARKER_FOR", "CL:1").unwrap();
        b.add_edge("G:1", "PARTICIPATES_IN", "BP:1").unwrap();
        b.add_edge("G:2", "PARTICIPATES_IN", "BP:1").unwrap();
        b.add_edge("CL:1", "CAPABLE_OF", "BP:1").unwrap();
        b.freeze()
    }

    #[test]
    fn one_hop_marker_binned_at_one() {
        let g = toy();
        let grounded = grounded_from(&[("G", "G:1", 0)]);
        let table = multi_source_traverse(&g, &grounded, &TraversalConfig::default()).unwrap();
        let cl = g.node_index("CL:1").unwrap();
        assert_eq!(table.candidate_count(), 1);
        assert_eq!(table.bins(cl).unwrap()[&1], vec![0]);
        // Reaches C at hop 1 directly and hop 2 via P; binned once at 1.
        assert_eq!(table.bins(cl).unwrap().len(), 1);
        assert_eq!(table.reachable_target_count(0).unwrap(), 1);
    }

    #[test]
    fn two_hop_functional_path() {
        let g = toy();
        let grounded = grounded_from(&[("H", "G:2", 0)]);
        let table = multi_source_traverse(&g, &grounded, &TraversalConfig::default()).unwrap();
        let cl = g.node_index("CL:1").unwrap();
        assert_eq!(table.bins(cl).unwrap()[&2], vec![0]);
    }

    #[test]
    fn same_type_edges_are_filtered() {
        let mut b = GraphBuilder::new(SemanticTypeSet::default());
        b.add_node("G:1", "Gene", "G", vec![]).unwrap();
        b.add_node("G:2", "Gene", "G2", vec![]).unwrap();
        b.add_node("CL:1", "CellType", "C", vec![]).unwrap();
        b.add_edge("G:1", "INTERACTS_WITH", "G:2").unwrap();
        b.add_edge("G:2", "IS_MARKER_FOR", "CL:1").unwrap();
        let g = b.freeze();

        let grounded = grounded_from(&[("G", "G:1", 0)]);
        let table = multi_source_traverse(&g, &grounded, &TraversalConfig::default()).unwrap();
        // Gene->Gene edge is not traversable, so C is unreachable from G.
        assert!(table.is_empty());
        assert_eq!(table.reachable_target_count(0).unwrap(), 0);

        // With alternation disabled the 2-hop path exists.
        let cfg = TraversalConfig {
            enforce_type_alternation: false,
            ..Default::default()
        };
        let table = multi_source_traverse(&g, &grounded, &cfg).unwrap();
        let cl = g.node_index("CL:1").unwrap();
        assert_eq!(table.bins(cl).unwrap()[&2], vec![0]);
    }

    #[test]
    fn empty_grounded_set_yields_empty_table() {
        let g = toy();
        let table = multi_source_traverse(
            &g,
            &GroundedGeneSet::default(),
            &TraversalConfig::default(),
        )
        .unwrap();
        assert!(table.is_empty());
        assert_eq!(table.source_count(), 0);
    }

    #[test]
    fn source_nodes_are_never_targets() {
        // Two cell-type sources one hop apart through a gene: neither may
        // appear as a target of the other.
        let mut b = GraphBuilder::new(SemanticTypeSet::default());
        b.add_node("CL:1", "CellType", "C1", vec![]).unwrap();
        b.add_node("CL:2", "CellType", "C2", vec![]).unwrap();
        b.add_node("G:1", "Gene", "G", vec![]).unwrap();
        b.add_edge("G:1", "IS_MARKER_FOR", "CL:1").unwrap();
        b.add_edge("G:1", "IS_MARKER_FOR", "CL:2").unwrap();
        let g = b.freeze();
        let cfg = TraversalConfig::default();

        // G and the node behind CL:1 are both sources; CL:1 must not be a
        // candidate even though G reaches it.
        let grounded = grounded_from(&[("G", "G:1", 0), ("X", "CL:1", 1)]);
        let table = multi_source_traverse(&g, &grounded, &cfg).unwrap();
        let cl1 = g.node_index("CL:1").unwrap();
        let cl2 = g.node_index("CL:2").unwrap();
        assert!(!table.contains(cl1));
        assert!(table.contains(cl2));
    }

    #[test]
    fn unknown_target_type_errors() {
        let g = toy();
        let grounded = grounded_from(&[("G", "G:1", 0)]);
        let cfg = TraversalConfig {
            target_type: "Widget".into(),
            ..Default::default()
        };
        assert_eq!(
            multi_source_traverse(&g, &grounded, &cfg).unwrap_err(),
            TraverseError::UnknownTargetType("Widget".into())
        );
    }

    #[test]
    fn unknown_rank_errors() {
        let g = toy();
        let grounded = grounded_from(&[("G", "G:1", 3)]);
        let table = multi_source_traverse(&g, &grounded, &TraversalConfig::default()).unwrap();
        assert!(table.reachable_target_count(3).is_ok());
        assert_eq!(
            table.reachable_target_count(0).unwrap_err(),
            TraverseError::UnknownGeneRank(0)
        );
    }

    #[test]
    fn representative_path_two_hop() {
        let g = toy();
        let cfg = TraversalConfig::default();
        let src = g.node_index("G:2").unwrap();
        let dst = g.node_index("CL:1").unwrap();
        let path = representative_path(&g, src, dst, &cfg).unwrap();
        assert_eq!(path.hops(), 2);
        assert_eq!(path.render(&g), "H -PARTICIPATES_IN-> P <-CAPABLE_OF- C");
    }

    #[test]
    fn representative_path_prefers_smallest_ids() {
        // Two minimal 2-hop routes via BP:A and BP:B; BP:A wins on id.
        let mut b = GraphBuilder::new(SemanticTypeSet::default());
        b.add_node("G:1", "Gene", "G", vec![]).unwrap();
        b.add_node("BP:B", "BiologicalProcess", "PB", vec![]).unwrap();
        b.add_node("BP:A", "BiologicalProcess", "PA", vec![]).unwrap();
        b.add_node("CL:1", "CellType", "C", vec![]).unwrap();
        b.add_edge("G:1", "PARTICIPATES_IN", "BP:B").unwrap();
        b.add_edge("G:1", "PARTICIPATES_IN", "BP:A").unwrap();
        b.add_edge("CL:1", "CAPABLE_OF", "BP:B").unwrap();
        b.add_edge("CL:1", "CAPABLE_OF", "BP:A").unwrap();
        let g = b.freeze();
        let path = representative_path(
            &g,
            g.node_index("G:1").unwrap(),
            g.node_index("CL:1").unwrap(),
            &TraversalConfig::default(),
        )
        .unwrap();
        let ids: Vec<&str> = path.nodes.iter().map(|&n| g.node(n).id.as_str()).collect();
        assert_eq!(ids, vec!["G:1", "BP:A", "CL:1"]);
    }

    #[test]
    fn representative_path_matches_min_hop_and_alternates() {
        let g = toy();
        let cfg = TraversalConfig::default();
        let grounded = grounded_from(&[("G", "G:1", 0), ("H", "G:2", 1)]);
        let table = multi_source_traverse(&g, &grounded, &cfg).unwrap();
        for (target, bins) in table.iter() {
            for (&hop, ranks) in bins {
                for &rank in ranks {
                    let src = g
                        .node_index(&grounded.genes.iter().find(|x| x.rank == rank).unwrap().node_id)
                        .unwrap();
                    let path = representative_path(&g, src, target, &cfg).unwrap();
                    assert_eq!(path.hops(), usize::from(hop));
                    for pair in path.nodes.windows(2) {
                        assert_ne!(
                            g.semantic_type_of(pair[0]),
                            g.semantic_type_of(pair[1])
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn work_counters_are_bounded() {
        let g = toy();
        let grounded = grounded_from(&[("G", "G:1", 0), ("H", "G:2", 1)]);
        let table = multi_source_traverse(&g, &grounded, &TraversalConfig::default()).unwrap();
        assert!(table.work().max_visited <= g.node_count());
        assert!(table.work().edges_scanned <= grounded.len() * 2 * g.edge_count());
    }
}
