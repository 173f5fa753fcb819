//! Brute-force reference implementations and randomized fixtures.
//!
//! Everything here exists to check the engine from an independent angle:
//! support tables are rebuilt by exhaustive simple-path enumeration instead
//! of BFS, scores by direct formula evaluation over those paths, and
//! ontology closures by repeated expansion. The test suites compare engine
//! output against these. Nothing in this module is called by the engine.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{GraphBuilder, NodeIdx, PropertyGraph, SemanticTypeSet};
use crate::grounding::{GroundedGene, GroundedGeneSet};
use crate::scoring::AlphaSpec;
use crate::traversal::TraversalConfig;

/// Minimal constrained hop counts from `source` to every reachable node,
/// found by enumerating all simple type-alternating paths of length <= k.
pub fn min_hops_by_enumeration(
    graph: &PropertyGraph,
    source: NodeIdx,
    config: &TraversalConfig,
) -> HashMap<NodeIdx, usize> {
    let mut best: HashMap<NodeIdx, usize> = HashMap::new();
    let mut on_path = vec![false; graph.node_count()];
    on_path[source.as_usize()] = true;
    walk(graph, source, 0, config, &mut on_path, &mut best);
    best
}

fn walk(
    graph: &PropertyGraph,
    node: NodeIdx,
    depth: usize,
    config: &TraversalConfig,
    on_path: &mut Vec<bool>,
    best: &mut HashMap<NodeIdx, usize>,
) {
    if depth == config.k {
        return;
    }
    let node_ty = graph.semantic_type_of(node);
    for entry in graph.adjacency_of(node) {
        let next = entry.neighbor;
        if on_path[next.as_usize()] {
            continue;
        }
        if config.enforce_type_alternation && graph.semantic_type_of(next) == node_ty {
            continue;
        }
        let d = depth + 1;
        let slot = best.entry(next).or_insert(usize::MAX);
        if d < *slot {
            *slot = d;
        }
        on_path[next.as_usize()] = true;
        walk(graph, next, d, config, on_path, best);
        on_path[next.as_usize()] = false;
    }
}

/// Support bins and df rebuilt from path enumeration: per target, hop ->
/// supporter ranks; per rank, the distinct-target count.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct ReferenceSupport {
    pub bins: BTreeMap<NodeIdx, BTreeMap<u8, Vec<usize>>>,
    pub df: BTreeMap<usize, usize>,
}

pub fn reference_support(
    graph: &PropertyGraph,
    grounded: &GroundedGeneSet,
    config: &TraversalConfig,
) -> ReferenceSupport {
    let target_ty = graph
        .type_set()
        .get(&config.target_type)
        .expect("target type exists");
    let source_nodes: BTreeSet<NodeIdx> = grounded
        .genes
        .iter()
        .filter_map(|g| graph.node_index(&g.node_id))
        .collect();
    let mut out = ReferenceSupport::default();
    for gene in &grounded.genes {
        let source = graph.node_index(&gene.node_id).expect("grounded node exists");
        let hops = min_hops_by_enumeration(graph, source, config);
        let mut df = 0usize;
        for (node, hop) in hops.into_iter().collect::<BTreeMap<_, _>>() {
            if graph.semantic_type_of(node) != target_ty || source_nodes.contains(&node) {
                continue;
            }
            out.bins
                .entry(node)
                .or_default()
                .entry(hop as u8)
                .or_default()
                .push(gene.rank);
            df += 1;
        }
        out.df.insert(gene.rank, df);
    }
    for bins in out.bins.values_mut() {
        for ranks in bins.values_mut() {
            ranks.sort_unstable();
        }
    }
    out
}

/// Direct evaluation of the convergence score from reference support:
/// `sum_h alpha_h * sum_{g in S_h(t)} 1/log2(rank+2) * ln(|T|/df + 1)`.
pub fn reference_scores(
    support: &ReferenceSupport,
    alpha: &AlphaSpec,
) -> BTreeMap<NodeIdx, f64> {
    let t_size = support.bins.len() as f64;
    let mut scores = BTreeMap::new();
    for (&target, bins) in &support.bins {
        let mut total = 0.0f64;
        for (&hop, ranks) in bins {
            let a = match alpha {
                AlphaSpec::Geometric(gamma) => gamma.powi(i32::from(hop) - 1),
                AlphaSpec::Explicit(list) => list[usize::from(hop) - 1],
            };
            for &rank in ranks {
                let w_rank = 1.0 / (rank as f64 + 2.0).log2();
                let df = support.df[&rank] as f64;
                let w_idf = (t_size / df + 1.0).ln();
                total += a * w_rank * w_idf;
            }
        }
        scores.insert(target, total);
    }
    scores
}

/// Transitive ancestor closure by repeated expansion until fixpoint.
/// `parents[i]` lists direct parents; the result never contains `i` itself
/// (on a DAG).
pub fn closure_by_iteration(parents: &[Vec<usize>]) -> Vec<BTreeSet<usize>> {
    let n = parents.len();
    let mut closure: Vec<BTreeSet<usize>> = parents
        .iter()
        .map(|ps| ps.iter().copied().collect())
        .collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            let mut additions: BTreeSet<usize> = BTreeSet::new();
            for &a in &closure[i] {
                for &b in &closure[a] {
                    if !closure[i].contains(&b) {
                        additions.insert(b);
                    }
                }
            }
            if !additions.is_empty() {
                closure[i].extend(additions);
                changed = true;
            }
        }
        if !changed {
            return closure;
        }
    }
}

/// Type names used by the random graph fixtures.
pub const TEST_TYPES: [&str; 4] = ["Gene", "CellType", "BiologicalProcess", "Anatomy"];

/// A random typed graph with `n_nodes` nodes and up to `n_edges` edges
/// (discarded draws: self loops and exact duplicates are retried once via
/// resampling, so the final count can land slightly under `n_edges`).
pub fn random_graph(rng: &mut impl Rng, n_nodes: usize, n_edges: usize) -> PropertyGraph {
    let type_set = SemanticTypeSet::new(TEST_TYPES).unwrap();
    let mut builder = GraphBuilder::new(type_set);
    for i in 0..n_nodes {
        let ty = TEST_TYPES[rng.gen_range(0..TEST_TYPES.len())];
        builder
            .add_node(&format!("N:{i:04}"), ty, &format!("node {i}"), vec![])
            .unwrap();
    }
    let relations = ["R_A", "R_B", "R_C"];
    let mut placed = 0usize;
    let mut attempts = 0usize;
    while placed < n_edges && attempts < n_edges * 10 {
        attempts += 1;
        let a = rng.gen_range(0..n_nodes);
        let b = rng.gen_range(0..n_nodes);
        if a == b {
            continue;
        }
        let rel = relations[rng.gen_range(0..relations.len())];
        builder
            .add_edge(&format!("N:{a:04}"), rel, &format!("N:{b:04}"))
            .unwrap();
        placed += 1;
    }
    builder.freeze()
}

/// A random grounded set over the graph's Gene nodes, with strictly
/// increasing ranks drawn from a sparse range.
pub fn random_grounded(
    graph: &PropertyGraph,
    rng: &mut impl Rng,
    max_genes: usize,
) -> GroundedGeneSet {
    let gene_ty = graph.type_set().get("Gene").expect("Gene type exists");
    let mut gene_nodes: Vec<&str> = graph
        .nodes()
        .filter(|n| n.semantic_type == gene_ty)
        .map(|n| n.id.as_str())
        .collect();
    gene_nodes.sort_unstable();
    let count = max_genes.min(gene_nodes.len());
    let chosen: Vec<&str> = gene_nodes
        .choose_multiple(rng, count)
        .copied()
        .collect();
    let mut rank = 0usize;
    let mut genes = Vec::with_capacity(chosen.len());
    for node_id in chosen {
        rank += rng.gen_range(1..4);
        genes.push(GroundedGene {
            symbol: format!("S{rank}"),
            node_id: node_id.to_string(),
            rank,
        });
    }
    let total = genes.last().map(|g| g.rank + 1).unwrap_or(0);
    GroundedGeneSet {
        genes,
        housekeeping_dropped: vec![],
        unmatched: vec![],
        total_symbols: total,
    }
}

/// Random OBO text over `n_terms` terms whose parents always point to
/// earlier terms (acyclic by construction). Term 0 is the root.
pub fn random_dag_obo(rng: &mut impl Rng, n_terms: usize, max_parents: usize) -> String {
    let mut out = String::from("format-version: 1.2\n");
    for i in 0..n_terms {
        out.push_str("\n[Term]\n");
        out.push_str(&format!("id: T:{i:04}\n"));
        out.push_str(&format!("name: term {i}\n"));
        if i > 0 {
            let n_parents = rng.gen_range(1..=max_parents.min(i));
            let mut parents: BTreeSet<usize> = BTreeSet::new();
            while parents.len() < n_parents {
                parents.insert(rng.gen_range(0..i));
            }
            for p in parents {
                out.push_str(&format!("is_a: T:{p:04}\n"));
            }
        }
    }
    out
}
