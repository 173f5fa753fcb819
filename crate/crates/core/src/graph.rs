//! Immutable typed property graph with relation-agnostic bidirectional
//! neighbor access.
//!
//! Nodes and edges are loaded from line-oriented TSV files, validated
//! atomically, and frozen. After [`PropertyGraph::load`] returns, the graph
//! is read-only and can be shared freely across threads.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

/// The nine node types of the default schema.
pub const DEFAULT_SEMANTIC_TYPES: [&str; 9] = [
    "Gene",
    "CellType",
    "BiologicalProcess",
    "MolecularFunction",
    "CellularComponent",
    "Pathway",
    "Anatomy",
    "Disease",
    "Phenotype",
];

/// Compact handle for a semantic type within a [`SemanticTypeSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SemanticTypeId(pub(crate) u16);

/// Closed set of node types a graph is allowed to use.
///
/// The set is fixed at load time; every node carries exactly one member.
#[derive(Debug, Clone)]
pub struct SemanticTypeSet {
    names: Vec<String>,
    index: HashMap<String, SemanticTypeId>,
}

impl SemanticTypeSet {
    /// Builds a type set from the given names. Duplicates are rejected.
    pub fn new<I, S>(names: I) -> Result<Self, LoadError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = SemanticTypeSet {
            names: Vec::new(),
            index: HashMap::new(),
        };
        for name in names {
            let name = name.into();
            if name.is_empty() {
                return Err(LoadError::InvalidTypeSet {
                    reason: "empty type name".into(),
                });
            }
            if set.index.contains_key(&name) {
                return Err(LoadError::InvalidTypeSet {
                    reason: format!("duplicate type name {name:?}"),
                });
            }
            let id = SemanticTypeId(set.names.len() as u16);
            set.index.insert(name.clone(), id);
            set.names.push(name);
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Option<SemanticTypeId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: SemanticTypeId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }
}

impl Default for SemanticTypeSet {
    fn default() -> Self {
        SemanticTypeSet::new(DEFAULT_SEMANTIC_TYPES).expect("default type set is valid")
    }
}

/// Internal node index; stable for the lifetime of one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeIdx(pub(crate) u32);

impl NodeIdx {
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

/// One graph node: canonical id, type, label, and aliases.
#[derive(Debug, Clone)]
pub struct GraphNode {
    pub id: String,
    pub semantic_type: SemanticTypeId,
    pub name: String,
    pub synonyms: Vec<String>,
}

/// Which side of a stored edge a neighbor sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Outgoing,
    Incoming,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Outgoing => write!(f, "outgoing"),
            Direction::Incoming => write!(f, "incoming"),
        }
    }
}

/// Adjacency record: one incident edge seen from one endpoint.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AdjEntry {
    pub neighbor: NodeIdx,
    pub relation: u16,
    pub direction: Direction,
}

/// One entry of [`PropertyGraph::neighbors`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor<'g> {
    pub id: &'g str,
    pub relation: &'g str,
    pub direction: Direction,
}

/// Errors produced while loading or validating a graph.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected header {expected:?}, found {found:?}")]
    BadHeader {
        path: String,
        line: usize,
        expected: String,
        found: String,
    },
    #[error("{path}:{line}: malformed line: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: duplicate node id {id:?}")]
    DuplicateNodeId {
        path: String,
        line: usize,
        id: String,
    },
    #[error("{path}:{line}: unknown semantic type {semantic_type:?} for node {id:?}")]
    UnknownSemanticType {
        path: String,
        line: usize,
        id: String,
        semantic_type: String,
    },
    #[error("{path}:{line}: edge references unknown node id {id:?}")]
    UnknownNodeRef {
        path: String,
        line: usize,
        id: String,
    },
    #[error("{path}:{line}: self-loop on node {id:?}")]
    SelfLoop {
        path: String,
        line: usize,
        id: String,
    },
    #[error("invalid semantic type set: {reason}")]
    InvalidTypeSet { reason: String },
}

/// Runtime lookup errors on a loaded graph.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
}

/// Aggregate counts for one graph.
#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub node_count: usize,
    pub edge_count: usize,
    pub mean_degree: f64,
    pub nodes_per_type: std::collections::BTreeMap<String, usize>,
    pub edges_per_relation: std::collections::BTreeMap<String, usize>,
}

/// Immutable typed property graph.
///
/// Adjacency is symmetric-access: an edge `(u, v)` is visible from both
/// endpoints regardless of stored direction. Neighbor lists are sorted by
/// (neighbor id, relation, direction) so iteration order is reproducible
/// across runs.
pub struct PropertyGraph {
    type_set: SemanticTypeSet,
    nodes: Vec<GraphNode>,
    id_index: HashMap<String, NodeIdx>,
    relations: Vec<String>,
    adjacency: Vec<Vec<AdjEntry>>,
    edge_count: usize,
}

impl fmt::Debug for PropertyGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PropertyGraph")
            .field("nodes", &self.nodes.len())
            .field("edges", &self.edge_count)
            .finish()
    }
}

impl PropertyGraph {
    /// Loads and validates a graph from TSV files using the default
    /// nine-type schema. Any validation error aborts the load; no partial
    /// graph is ever returned.
    pub fn load(
        nodes_path: impl AsRef<Path>,
        edges_path: impl AsRef<Path>,
    ) -> Result<PropertyGraph, LoadError> {
        Self::load_with_types(nodes_path, edges_path, SemanticTypeSet::default())
    }

    /// Loads a graph against a caller-supplied closed type set.
    pub fn load_with_types(
        nodes_path: impl AsRef<Path>,
        edges_path: impl AsRef<Path>,
        type_set: SemanticTypeSet,
    ) -> Result<PropertyGraph, LoadError> {
        let mut builder = GraphBuilder::new(type_set);
        read_nodes_file(nodes_path.as_ref(), &mut builder)?;
        read_edges_file(edges_path.as_ref(), &mut builder)?;
        Ok(builder.freeze())
    }

    pub fn type_set(&self) -> &SemanticTypeSet {
        &self.type_set
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn node_index(&self, id: &str) -> Option<NodeIdx> {
        self.id_index.get(id).copied()
    }

    pub fn node(&self, idx: NodeIdx) -> &GraphNode {
        &self.nodes[idx.as_usize()]
    }

    pub fn node_by_id(&self, id: &str) -> Option<&GraphNode> {
        self.node_index(id).map(|idx| self.node(idx))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &GraphNode> {
        self.nodes.iter()
    }

    pub fn semantic_type_of(&self, idx: NodeIdx) -> SemanticTypeId {
        self.nodes[idx.as_usize()].semantic_type
    }

    pub fn relation_name(&self, relation: u16) -> &str {
        &self.relations[relation as usize]
    }

    pub(crate) fn adjacency_of(&self, idx: NodeIdx) -> &[AdjEntry] {
        &self.adjacency[idx.as_usize()]
    }

    /// All incident edges of a node, both stored directions, in a fixed
    /// order (neighbor id, then relation, then direction).
    pub fn neighbors(&self, id: &str) -> Result<Vec<Neighbor<'_>>, GraphError> {
        let idx = self
            .node_index(id)
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))?;
        Ok(self
            .adjacency_of(idx)
            .iter()
            .map(|e| Neighbor {
                id: self.node(e.neighbor).id.as_str(),
                relation: self.relation_name(e.relation),
                direction: e.direction,
            })
            .collect())
    }

    /// Node, edge, per-type, and per-relation counts plus mean degree
    /// (`2E / N`).
    pub fn stats(&self) -> StatsReport {
        let mut nodes_per_type = std::collections::BTreeMap::new();
        for node in &self.nodes {
            *nodes_per_type
                .entry(self.type_set.name(node.semantic_type).to_string())
                .or_insert(0) += 1;
        }
        let mut edges_per_relation = std::collections::BTreeMap::new();
        for adj in &self.adjacency {
            for entry in adj {
                if entry.direction == Direction::Outgoing {
                    *edges_per_relation
                        .entry(self.relations[entry.relation as usize].clone())
                        .or_insert(0) += 1;
                }
            }
        }
        let node_count = self.nodes.len();
        let mean_degree = if node_count == 0 {
            0.0
        } else {
            2.0 * self.edge_count as f64 / node_count as f64
        };
        StatsReport {
            node_count,
            edge_count: self.edge_count,
            mean_degree,
            nodes_per_type,
            edges_per_relation,
        }
    }
}

/// Incremental construction of a [`PropertyGraph`]; consumed by `freeze`.
///
/// The TSV loader funnels through this, and tests/generators can use it
/// directly without touching the filesystem. Validation errors carry ids
/// but no line numbers; the loader attaches those.
pub struct GraphBuilder {
    type_set: SemanticTypeSet,
    nodes: Vec<GraphNode>,
    id_index: HashMap<String, NodeIdx>,
    relations: Vec<String>,
    relation_index: HashMap<String, u16>,
    adjacency: Vec<Vec<AdjEntry>>,
    edge_count: usize,
}

/// Builder-level validation failures (no file context).
#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("duplicate node id {0:?}")]
    DuplicateNodeId(String),
    #[error("unknown semantic type {semantic_type:?} for node {id:?}")]
    UnknownSemanticType { id: String, semantic_type: String },
    #[error("empty name for node {0:?}")]
    EmptyName(String),
    #[error("edge references unknown node id {0:?}")]
    UnknownNodeRef(String),
    #[error("self-loop on node {0:?}")]
    SelfLoop(String),
}

impl GraphBuilder {
    pub fn new(type_set: SemanticTypeSet) -> Self {
        GraphBuilder {
            type_set,
            nodes: Vec::new(),
            id_index: HashMap::new(),
            relations: Vec::new(),
            relation_index: HashMap::new(),
            adjacency: Vec::new(),
            edge_count: 0,
        }
    }

    pub fn add_node(
        &mut self,
        id: &str,
        semantic_type: &str,
        name: &str,
        synonyms: Vec<String>,
    ) -> Result<NodeIdx, BuildError> {
        if self.id_index.contains_key(id) {
            return Err(BuildError::DuplicateNodeId(id.to_string()));
        }
        let ty = self
            .type_set
            .get(semantic_type)
            .ok_or_else(|| BuildError::UnknownSemanticType {
                id: id.to_string(),
                semantic_type: semantic_type.to_string(),
            })?;
        if name.is_empty() {
            return Err(BuildError::EmptyName(id.to_string()));
        }
        let idx = NodeIdx(self.nodes.len() as u32);
        self.id_index.insert(id.to_string(), idx);
        self.nodes.push(GraphNode {
            id: id.to_string(),
            semantic_type: ty,
            name: name.to_string(),
            synonyms,
        });
        self.adjacency.push(Vec::new());
        Ok(idx)
    }

    pub fn add_edge(&mut self, source: &str, relation: &str, target: &str) -> Result<(), BuildError> {
        let src = *self
            .id_index
            .get(source)
            .ok_or_else(|| BuildError::UnknownNodeRef(source.to_string()))?;
        let dst = *self
            .id_index
            .get(target)
            .ok_or_else(|| BuildError::UnknownNodeRef(target.to_string()))?;
        if src == dst {
            return Err(BuildError::SelfLoop(source.to_string()));
        }
        let rel = match self.relation_index.get(relation) {
            Some(&r) => r,
            None => {
                let r = self.relations.len() as u16;
                self.relations.push(relation.to_string());
                self.relation_index.insert(relation.to_string(), r);
                r
            }
        };
        self.adjacency[src.as_usize()].push(AdjEntry {
            neighbor: dst,
            relation: rel,
            direction: Direction::Outgoing,
        });
        self.adjacency[dst.as_usize()].push(AdjEntry {
            neighbor: src,
            relation: rel,
            direction: Direction::Incoming,
        });
        self.edge_count += 1;
        Ok(())
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.id_index.contains_key(id)
    }

    /// Finalizes the graph: sorts every neighbor list into its canonical
    /// order and freezes the structure.
    pub fn freeze(mut self) -> PropertyGraph {
        let nodes = &self.nodes;
        let relations = &self.relations;
        for adj in &mut self.adjacency {
            adj.sort_by(|a, b| {
                nodes[a.neighbor.as_usize()]
                    .id
                    .cmp(&nodes[b.neighbor.as_usize()].id)
                    .then_with(|| {
                        relations[a.relation as usize].cmp(&relations[b.relation as usize])
                    })
                    .then_with(|| a.direction.cmp(&b.direction))
            });
        }
        PropertyGraph {
            type_set: self.type_set,
            nodes: self.nodes,
            id_index: self.id_index,
            relations: self.relations,
            adjacency: self.adjacency,
            edge_count: self.edge_count,
        }
    }
}

const NODES_HEADER: &str = "id\tsemantic_type\tname\tsynonyms";
const EDGES_HEADER: &str = "source\trelation\ttarget";

fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>, LoadError> {
    let file = File::open(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(BufReader::new(file).lines())
}

fn read_nodes_file(path: &Path, builder: &mut GraphBuilder) -> Result<(), LoadError> {
    let path_str = path.display().to_string();
    let mut saw_header = false;
    for (lineno, line) in open_lines(path)?.enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|source| LoadError::Io {
            path: path_str.clone(),
            source,
        })?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != NODES_HEADER {
                return Err(LoadError::BadHeader {
                    path: path_str,
                    line: lineno,
                    expected: NODES_HEADER.to_string(),
                    found: line,
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(LoadError::Malformed {
                path: path_str,
                line: lineno,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let synonyms: Vec<String> = if fields[3].is_empty() {
            Vec::new()
        } else {
            fields[3].split('|').map(|s| s.to_string()).collect()
        };
        builder
            .add_node(fields[0], fields[1], fields[2], synonyms)
            .map_err(|e| match e {
                BuildError::DuplicateNodeId(id) => LoadError::DuplicateNodeId {
                    path: path_str.clone(),
                    line: lineno,
                    id,
                },
                BuildError::UnknownSemanticType { id, semantic_type } => {
                    LoadError::UnknownSemanticType {
                        path: path_str.clone(),
                        line: lineno,
                        id,
                        semantic_type,
                    }
                }
                other => LoadError::Malformed {
                    path: path_str.clone(),
                    line: lineno,
                    reason: other.to_string(),
                },
            })?;
    }
    if !saw_header {
        return Err(LoadError::BadHeader {
            path: path_str,
            line: 0,
            expected: NODES_HEADER.to_string(),
            found: "<empty file>".to_string(),
        });
    }
    Ok(())
}

fn read_edges_file(path: &Path, builder: &mut GraphBuilder) -> Result<(), LoadError> {
    let path_str = path.display().to_string();
    let mut saw_header = false;
    for (lineno, line) in open_lines(path)?.enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|source| LoadError::Io {
            path: path_str.clone(),
            source,
        })?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != EDGES_HEADER {
                return Err(LoadError::BadHeader {
                    path: path_str,
                    line: lineno,
                    expected: EDGES_HEADER.to_string(),
                    found: line,
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(LoadError::Malformed {
                path: path_str,
                line: lineno,
                reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        builder.add_edge(fields[0], fields[1], fields[2]).map_err(|e| match e {
            BuildError::UnknownNodeRef(id) => LoadError::UnknownNodeRef {
                path: path_str.clone(),
                line: lineno,
                id,
            },
            BuildError::SelfLoop(id) => LoadError::SelfLoop {
                path: path_str.clone(),
                line: lineno,
                id,
            },
            other => LoadError::Malformed {
                path: path_str.clone(),
                line: lineno,
                reason: other.to_string(),
            },
        })?;
    }
    if !saw_header {
        return Err(LoadError::BadHeader {
            path: path_str,
            line: 0,
            expected: EDGES_HEADER.to_string(),
            found: "<empty file>".to_string(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    const TOY_NODES: &str = "id\tsemantic_type\tname\tsynonyms\n\
        GENE:1\tGene\tCD3E\tT3E\n\
        GENE:2\tGene\tCD8A\t\n\
        CL:0000084\tCellType\tT cell\tT-cell|T lymphocyte\n\
        GO:0042110\tBiologicalProcess\tT cell activation\t\n\
        CL:0000236\tCellType\tB cell\t\n";

    const TOY_EDGES: &str = "source\trelation\ttarget\n\
        GENE:1\tIS_MARKER_FOR\tCL:0000084\n\
        GENE:2\tIS_MARKER_FOR\tCL:0000084\n\
        GENE:1\tPARTICIPATES_IN\tGO:0042110\n\
        CL:0000084\tCAPABLE_OF\tGO:0042110\n";

    fn toy_graph() -> PropertyGraph {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(&dir, "nodes.tsv", TOY_NODES);
        let edges = write_file(&dir, "edges.tsv", TOY_EDGES);
        PropertyGraph::load(&nodes, &edges).unwrap()
    }

    #[test]
    fn toy_counts() {
        let g = toy_graph();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn default_type_set_has_nine_members() {
        assert_eq!(SemanticTypeSet::default().len(), 9);
    }

    #[test]
    fn duplicate_node_id_fails_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(
            &dir,
            "nodes.tsv",
            "id\tsemantic_type\tname\tsynonyms\n\
             CL:0000084\tCellType\tT cell\t\n\
             CL:0000084\tCellType\tT cell again\t\n",
        );
        let edges = write_file(&dir, "edges.tsv", "source\trelation\ttarget\n");
        let err = PropertyGraph::load(&nodes, &edges).unwrap_err();
        match err {
            LoadError::DuplicateNodeId { id, line, .. } => {
                assert_eq!(id, "CL:0000084");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn edge_to_unknown_node_fails() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(
            &dir,
            "nodes.tsv",
            "id\tsemantic_type\tname\tsynonyms\nGENE:1\tGene\tCD3E\t\n",
        );
        let edges = write_file(
            &dir,
            "edges.tsv",
            "source\trelation\ttarget\nGENE:1\tIS_MARKER_FOR\tGENE:MISSING\n",
        );
        let err = PropertyGraph::load(&nodes, &edges).unwrap_err();
        match err {
            LoadError::UnknownNodeRef { id, .. } => assert_eq!(id, "GENE:MISSING"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn self_loop_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(
            &dir,
            "nodes.tsv",
            "id\tsemantic_type\tname\tsynonyms\nGENE:1\tGene\tCD3E\t\n",
        );
        let edges = write_file(
            &dir,
            "edges.tsv",
            "source\trelation\ttarget\nGENE:1\tRELATED_TO\tGENE:1\n",
        );
        assert!(matches!(
            PropertyGraph::load(&nodes, &edges).unwrap_err(),
            LoadError::SelfLoop { .. }
        ));
    }

    #[test]
    fn unknown_semantic_type_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(
            &dir,
            "nodes.tsv",
            "id\tsemantic_type\tname\tsynonyms\nX:1\tWidget\tthing\t\n",
        );
        let edges = write_file(&dir, "edges.tsv", "source\trelation\ttarget\n");
        assert!(matches!(
            PropertyGraph::load(&nodes, &edges).unwrap_err(),
            LoadError::UnknownSemanticType { .. }
        ));
    }

    #[test]
    fn neighbors_sees_both_directions() {
        let g = toy_graph();
        let n = g.neighbors("GENE:1").unwrap();
        assert_eq!(n.len(), 2);
        // Sorted by neighbor id: CL:0000084 before GO:0042110.
        assert_eq!(n[0].id, "CL:0000084");
        assert_eq!(n[0].direction, Direction::Outgoing);
        assert_eq!(n[1].id, "GO:0042110");

        // Incoming edges are visible from the target side.
        let ct = g.neighbors("CL:0000084").unwrap();
        assert_eq!(ct.len(), 3);
        assert!(ct
            .iter()
            .any(|x| x.id == "GENE:1" && x.direction == Direction::Incoming));
        assert!(ct
            .iter()
            .any(|x| x.id == "GO:0042110" && x.direction == Direction::Outgoing));
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let g = toy_graph();
        assert!(g.neighbors("CL:0000236").unwrap().is_empty());
    }

    #[test]
    fn neighbors_unknown_node_errors() {
        let g = toy_graph();
        assert_eq!(
            g.neighbors("NOPE:1").unwrap_err(),
            GraphError::UnknownNode("NOPE:1".into())
        );
    }

    #[test]
    fn stats_mean_degree() {
        let g = toy_graph();
        let s = g.stats();
        assert_eq!(s.node_count, 5);
        assert_eq!(s.edge_count, 4);
        assert!((s.mean_degree - 1.6).abs() < 1e-12);
        assert_eq!(s.nodes_per_type["CellType"], 2);
        assert_eq!(s.edges_per_relation["IS_MARKER_FOR"], 2);
    }

    #[test]
    fn empty_graph_stats() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(&dir, "nodes.tsv", "id\tsemantic_type\tname\tsynonyms\n");
        let edges = write_file(&dir, "edges.tsv", "source\trelation\ttarget\n");
        let g = PropertyGraph::load(&nodes, &edges).unwrap();
        let s = g.stats();
        assert_eq!(s.node_count, 0);
        assert_eq!(s.edge_count, 0);
        assert_eq!(s.mean_degree, 0.0);
    }

    #[test]
    fn adjacency_length_is_twice_edge_count() {
        let g = toy_graph();
        let total: usize = (0..g.node_count())
            .map(|i| g.adjacency_of(NodeIdx(i as u32)).len())
            .sum();
        assert_eq!(total, 2 * g.edge_count());
    }

    #[test]
    fn parallel_edges_allowed() {
        let mut b = GraphBuilder::new(SemanticTypeSet::default());
        b.add_node("GENE:1", "Gene", "CD3E", vec![]).unwrap();
        b.add_node("CL:1", "CellType", "T cell", vec![]).unwrap();
        b.add_edge("GENE:1", "IS_MARKER_FOR", "CL:1").unwrap();
        b.add_edge("GENE:1", "EXPRESSED_IN", "CL:1").unwrap();
        let g = b.freeze();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighbors("GENE:1").unwrap().len(), 2);
    }

    #[test]
    fn comment_lines_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(
            &dir,
            "nodes.tsv",
            "# comment before header\nid\tsemantic_type\tname\tsynonyms\n# mid comment\nGENE:1\tGene\tCD3E\t\n",
        );
        let edges = write_file(&dir, "edges.tsv", "source\trelation\ttarget\n");
        let g = PropertyGraph::load(&nodes, &edges).unwrap();
        assert_eq!(g.node_count(), 1);
    }
}
