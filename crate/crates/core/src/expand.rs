//! Dynamic enumeration expansion.
//!
//! A dynamic specification names source nodes in an ontology; expansion
//! computes every node reachable from them (parent to child) along the
//! listed relationship types and turns the result into permissible values.
//! Providers answer per-relationship descendant queries; the expansion
//! composes relationship types by iterating those queries to a fixpoint,
//! so a path may mix relationship types.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

use crate::curie::CurieError;
use crate::termset::{DynamicSpec, Enumeration, TermDefinition, TermSetSchema};

#[derive(Debug, Error)]
pub enum ExpandError {
    #[error("unknown ontology {ontology:?}: {detail}")]
    UnknownOntology { ontology: String, detail: String },
    #[error("source node {node:?} is absent from ontology {ontology:?}")]
    SourceNodeMissing { node: String, ontology: String },
    #[error("{path}:{line}: {reason}")]
    SnapshotParse { path: String, line: usize, reason: String },
    #[error("{path}:{line}: edge references undeclared node {node:?}")]
    DanglingEndpoint { path: String, line: usize, node: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("enumeration {enum_name:?} not found in schema")]
    EnumNotFound { enum_name: String },
    #[error("enumeration {enum_name:?} has no dynamic specification")]
    EnumNotDynamic { enum_name: String },
    #[error("expansion was computed for enumeration {actual:?}, not {expected:?}")]
    EnumNameMismatch { expected: String, actual: String },
    #[error("expanded node {node:?} cannot be resolved under the schema prefixes: {source}")]
    UnresolvableTerm { node: String, source: CurieError },
    #[error("request to {url} failed: {detail}")]
    Transport { url: String, detail: String },
    #[error("request to {url} returned status {status}")]
    Status { url: String, status: u16 },
    #[error("malformed payload from {url}: {detail}")]
    Payload { url: String, detail: String },
    #[error("cache file {path}: {source}")]
    Cache { path: String, source: std::io::Error },
}

/// Label and description attached to an ontology node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeInfo {
    pub label: Option<String>,
    pub description: Option<String>,
}

/// One directed edge, read child-to-parent (`child relationship parent`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyEdge {
    pub child: String,
    pub relationship: String,
    pub parent: String,
}

/// In-memory ontology snapshot: nodes with optional labels, plus typed
/// child-to-parent edges. Every edge endpoint is a declared node.
#[derive(Debug, Clone, Default)]
pub struct OntologyGraph {
    nodes: BTreeMap<String, NodeInfo>,
    edges: Vec<OntologyEdge>,
    // parent -> [(relationship, child)]
    children: HashMap<String, Vec<(String, String)>>,
}

impl OntologyGraph {
    pub fn build(
        nodes: impl IntoIterator<Item = (String, NodeInfo)>,
        edges: Vec<OntologyEdge>,
    ) -> Result<Self, ExpandError> {
        let nodes: BTreeMap<String, NodeInfo> = nodes.into_iter().collect();
        for edge in &edges {
            for endpoint in [&edge.child, &edge.parent] {
                if !nodes.contains_key(endpoint) {
                    return Err(ExpandError::DanglingEndpoint {
                        path: "<memory>".to_string(),
                        line: 0,
                        node: endpoint.clone(),
                    });
                }
            }
        }
        let mut children: HashMap<String, Vec<(String, String)>> = HashMap::new();
        for edge in &edges {
            children
                .entry(edge.parent.clone())
                .or_default()
                .push((edge.relationship.clone(), edge.child.clone()));
        }
        Ok(Self { nodes, edges, children })
    }

    pub fn contains(&self, node: &str) -> bool {
        self.nodes.contains_key(node)
    }

    pub fn node_info(&self, node: &str) -> Option<&NodeInfo> {
        self.nodes.get(node)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes reachable from `node` by one or more `relationship` edges,
    /// traversed parent to child. Terminates on cyclic graphs.
    pub fn descendants(&self, node: &str, relationship: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        queue.push_back(node.to_string());
        seen.insert(node.to_string());
        while let Some(current) = queue.pop_front() {
            if let Some(kids) = self.children.get(&current) {
                for (rel, child) in kids {
                    if rel != relationship {
                        continue;
                    }
                    out.insert(child.clone());
                    if seen.insert(child.clone()) {
                        queue.push_back(child.clone());
                    }
                }
            }
        }
        out
    }
}

/// Answers the queries expansion needs about one or more ontologies.
///
/// `descendants` must return the full transitive set for a single
/// relationship type; lookups must be deterministic for a fixed snapshot.
pub trait OntologyProvider {
    fn descendants(
        &self,
        ontology: &str,
        node: &str,
        relationship: &str,
    ) -> Result<BTreeSet<String>, ExpandError>;

    fn contains_node(&self, ontology: &str, node: &str) -> Result<bool, ExpandError>;

    fn node_label(&self, ontology: &str, node: &str) -> Option<String>;

    fn node_description(&self, ontology: &str, node: &str) -> Option<String>;

    /// Provenance string recorded on expansion results.
    fn source_description(&self, ontology: &str) -> String;
}

/// Provider backed by a snapshot file; serves exactly the snapshot's
/// nodes and edges regardless of the ontology name asked for.
#[derive(Debug)]
pub struct LocalProvider {
    graph: OntologyGraph,
    source: String,
}

impl LocalProvider {
    /// Load a snapshot in the tab-separated layout
    /// `child relationship parent child_label child_description`, one edge
    /// per row; isolated nodes carry empty relationship and parent cells.
    pub fn from_path(path: &Path) -> Result<Self, ExpandError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExpandError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_snapshot_text(&text, &path.display().to_string())
    }

    pub fn from_snapshot_text(text: &str, source_name: &str) -> Result<Self, ExpandError> {
        const HEADER: &str = "child\trelationship\tparent\tchild_label\tchild_description";
        let path = source_name.to_string();

        if text.trim().is_empty() {
            return Ok(Self {
                graph: OntologyGraph::default(),
                source: format!("local:{path}"),
            });
        }

        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header == HEADER => {}
            Some((_, header)) => {
                return Err(ExpandError::SnapshotParse {
                    path,
                    line: 1,
                    reason: format!("expected header {HEADER:?}, found {header:?}"),
                })
            }
            None => unreachable!("non-empty text has at least one line"),
        }

        let mut nodes: BTreeMap<String, NodeInfo> = BTreeMap::new();
        let mut pending_edges: Vec<(usize, OntologyEdge)> = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let mut cells: Vec<&str> = line.split('\t').collect();
            // trailing empty cells (label, description) may be omitted
            if !(3..=5).contains(&cells.len()) {
                return Err(ExpandError::SnapshotParse {
                    path,
                    line: line_no,
                    reason: format!(
                        "expected 3 to 5 tab-separated fields, found {}",
                        cells.len()
                    ),
                });
            }
            cells.resize(5, "");
            let (child, relationship, parent, label, description) =
                (cells[0], cells[1], cells[2], cells[3], cells[4]);
            if child.is_empty() {
                return Err(ExpandError::SnapshotParse {
                    path,
                    line: line_no,
                    reason: "empty child cell".to_string(),
                });
            }
            let info = nodes.entry(child.to_string()).or_default();
            if info.label.is_none() && !label.is_empty() {
                info.label = Some(label.to_string());
            }
            if info.description.is_none() && !description.is_empty() {
                info.description = Some(description.to_string());
            }
            match (relationship.is_empty(), parent.is_empty()) {
                (true, true) => {} // isolated node row
                (false, false) => pending_edges.push((
                    line_no,
                    OntologyEdge {
                        child: child.to_string(),
                        relationship: relationship.to_string(),
                        parent: parent.to_string(),
                    },
                )),
                _ => {
                    return Err(ExpandError::SnapshotParse {
                        path,
                        line: line_no,
                        reason: "relationship and parent must both be set or both be empty"
                            .to_string(),
                    })
                }
            }
        }

        for (line_no, edge) in &pending_edges {
            if !nodes.contains_key(&edge.parent) {
                return Err(ExpandError::DanglingEndpoint {
                    path,
                    line: *line_no,
                    node: edge.parent.clone(),
                });
            }
        }

        let edges = pending_edges.into_iter().map(|(_, e)| e).collect();
        let graph = OntologyGraph::build(nodes, edges)?;
        Ok(Self { graph, source: format!("local:{path}") })
    }

    pub fn from_graph(graph: OntologyGraph, source_name: &str) -> Self {
        Self { graph, source: format!("local:{source_name}") }
    }

    pub fn graph(&self) -> &OntologyGraph {
        &self.graph
    }
}

impl OntologyProvider for LocalProvider {
    fn descendants(
        &self,
        _ontology: &str,
        node: &str,
        relationship: &str,
    ) -> Result<BTreeSet<String>, ExpandError> {
        Ok(self.graph.descendants(node, relationship))
    }

    fn contains_node(&self, _ontology: &str, node: &str) -> Result<bool, ExpandError> {
        Ok(self.graph.contains(node))
    }

    fn node_label(&self, _ontology: &str, node: &str) -> Option<String> {
        self.graph.node_info(node).and_then(|i| i.label.clone())
    }

    fn node_description(&self, _ontology: &str, node: &str) -> Option<String> {
        self.graph.node_info(node).and_then(|i| i.description.clone())
    }

    fn source_description(&self, _ontology: &str) -> String {
        self.source.clone()
    }
}

/// Outcome of expanding one dynamic enumeration: the reachable nodes as
/// term definitions, keyed and sorted by node id.
#[derive(Debug, Clone)]
pub struct ExpansionResult {
    pub enum_name: String,
    pub terms: BTreeMap<String, TermDefinition>,
    pub source_snapshot: String,
}

impl ExpansionResult {
    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(|k| k.as_str())
    }
}

/// Compute the permissible values of a dynamic enumeration.
///
/// Membership is every node reachable from a source node by a path of one
/// or more edges along the listed relationship types (composed freely),
/// plus the source nodes themselves when `include_self` is set.
pub fn expand_enum(
    enum_name: &str,
    spec: &DynamicSpec,
    provider: &dyn OntologyProvider,
) -> Result<ExpansionResult, ExpandError> {
    let ontology = &spec.source_ontology;
    for node in &spec.source_nodes {
        if !provider.contains_node(ontology, node)? {
            return Err(ExpandError::SourceNodeMissing {
                node: node.clone(),
                ontology: ontology.clone(),
            });
        }
    }

    let mut reachable: BTreeSet<String> = BTreeSet::new();
    let mut seen: BTreeSet<String> = spec.source_nodes.iter().cloned().collect();
    let mut queue: VecDeque<String> = seen.iter().cloned().collect();
    while let Some(node) = queue.pop_front() {
        for relationship in &spec.relationship_types {
            for descendant in provider.descendants(ontology, &node, relationship)? {
                // reachable by >= 1 edge even if it is itself a source node
                reachable.insert(descendant.clone());
                if seen.insert(descendant.clone()) {
                    queue.push_back(descendant);
                }
            }
        }
    }
    if spec.include_self {
        reachable.extend(spec.source_nodes.iter().cloned());
    }

    let mut terms = BTreeMap::new();
    for node in reachable {
        let title = provider.node_label(ontology, &node);
        let description = provider.node_description(ontology, &node);
        terms.insert(
            node.clone(),
            TermDefinition {
                key: node.clone(),
                meaning: node.clone(),
                description,
                title,
                text: Some(node),
            },
        );
    }

    Ok(ExpansionResult {
        enum_name: enum_name.to_string(),
        terms,
        source_snapshot: provider.source_description(ontology),
    })
}

/// An expanded schema plus any warnings raised while writing it.
#[derive(Debug, Clone)]
pub struct ExpandedSchema {
    pub schema: TermSetSchema,
    pub warnings: Vec<String>,
}

/// Return a copy of `schema` where `enum_name` keeps its dynamic
/// specification and gains `result`'s terms as permissible values.
pub fn write_expanded_schema(
    schema: &TermSetSchema,
    enum_name: &str,
    result: &ExpansionResult,
) -> Result<ExpandedSchema, ExpandError> {
    if result.enum_name != enum_name {
        return Err(ExpandError::EnumNameMismatch {
            expected: enum_name.to_string(),
            actual: result.enum_name.clone(),
        });
    }
    let existing = schema
        .enumeration(enum_name)
        .ok_or_else(|| ExpandError::EnumNotFound { enum_name: enum_name.to_string() })?;
    if existing.dynamic.is_none() {
        return Err(ExpandError::EnumNotDynamic { enum_name: enum_name.to_string() });
    }
    for (node, term) in &result.terms {
        crate::curie::expand_curie(&term.meaning, &schema.prefixes).map_err(|source| {
            ExpandError::UnresolvableTerm { node: node.clone(), source }
        })?;
    }

    let mut warnings = Vec::new();
    if result.terms.is_empty() {
        warnings.push(format!("expansion of enumeration {enum_name:?} produced no terms"));
    }

    let mut out = schema.clone();
    let en = out.enums.get_mut(enum_name).expect("presence checked above");
    *en = Enumeration {
        name: existing.name.clone(),
        description: existing.description.clone(),
        permissible_values: result
            .terms
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect::<IndexMap<_, _>>(),
        dynamic: existing.dynamic.clone(),
    };
    Ok(ExpandedSchema { schema: out, warnings })
}
