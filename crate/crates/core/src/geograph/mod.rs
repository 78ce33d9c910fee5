//! Geo-referenced graphs: nodes with planar coordinates joined by undirected
//! or directed edge intervals, plus the structural statistics derived from
//! them (degrees, components, betweenness, diameter, communities).
//!
//! Nodes and edges are stored sorted by id, so "lowest id" tie-breaking in
//! every algorithm is simply "lowest index".

mod community;
mod paths;

pub use community::{communities, communities_by_modularity, modularity, CommunityTarget};
pub use paths::{betweenness, connected_components, diameter, edge_betweenness};

use std::collections::HashMap;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(EdgeId),
    #[error("edge {edge} references unknown node {node}")]
    DanglingNode { edge: EdgeId, node: NodeId },
    #[error("edge {0} is a self-loop")]
    SelfLoop(EdgeId),
    #[error("edge {0} has coincident endpoints (zero length)")]
    ZeroLength(EdgeId),
    #[error("node {0} has non-finite coordinates")]
    NonFiniteCoordinate(NodeId),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge id {0}")]
    UnknownEdge(EdgeId),
    #[error("community target {target} is below the current component count {components}")]
    TargetBelowComponents { target: usize, components: usize },
    #[error("community target {target} exceeds the node count {nodes}")]
    UnreachableTarget { target: usize, nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoNode {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

impl GeoNode {
    pub fn new(id: u64, x: f64, y: f64) -> Self {
        GeoNode { id: NodeId(id), x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Undirected,
    Directed,
}

/// Edge record as read from input, before lengths are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawEdge {
    pub id: EdgeId,
    pub tail: NodeId,
    pub head: NodeId,
    pub kind: EdgeKind,
}

impl RawEdge {
    pub fn undirected(id: u64, tail: u64, head: u64) -> Self {
        RawEdge { id: EdgeId(id), tail: NodeId(tail), head: NodeId(head), kind: EdgeKind::Undirected }
    }

    pub fn directed(id: u64, tail: u64, head: u64) -> Self {
        RawEdge { id: EdgeId(id), tail: NodeId(tail), head: NodeId(head), kind: EdgeKind::Directed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoEdge {
    pub id: EdgeId,
    pub tail: NodeId,
    pub head: NodeId,
    pub kind: EdgeKind,
    /// Interval length in the graph's [`LengthMode`] units.
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum LengthMode {
    #[default]
    Euclidean,
    /// Squared Euclidean distance between the endpoints.
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DegreeMode {
    Undirected,
    In,
    Out,
    Cg,
}

#[derive(Debug, Clone, Default)]
struct Incidence {
    /// Undirected incident edges, nach(v).
    nach: Vec<usize>,
    /// Directed edges pointing to v, pa(v).
    pa: Vec<usize>,
    /// Directed edges departing from v, child(v).
    child: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GeoGraph {
    nodes: Vec<GeoNode>,
    edges: Vec<GeoEdge>,
    ends: Vec<(usize, usize)>,
    node_index: HashMap<NodeId, usize>,
    edge_index: HashMap<EdgeId, usize>,
    incidence: Vec<Incidence>,
    length_mode: LengthMode,
    fingerprint: u64,
}

impl GeoGraph {
    pub fn build(
        nodes: Vec<GeoNode>,
        edges: Vec<RawEdge>,
        length_mode: LengthMode,
    ) -> Result<Self, GraphError> {
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.id);
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(GraphError::DuplicateNode(pair[0].id));
            }
        }
        if let Some(bad) = nodes.iter().find(|n| !n.x.is_finite() || !n.y.is_finite()) {
            return Err(GraphError::NonFiniteCoordinate(bad.id));
        }
        let node_index: HashMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();

        let mut edges = edges;
        edges.sort_by_key(|e| e.id);
        for pair in edges.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(GraphError::DuplicateEdge(pair[0].id));
            }
        }

        let mut geo_edges = Vec::with_capacity(edges.len());
        let mut ends = Vec::with_capacity(edges.len());
        let mut incidence = vec![Incidence::default(); nodes.len()];
        for (k, raw) in edges.iter().enumerate() {
            let lookup = |node: NodeId| {
                node_index
                    .get(&node)
                    .copied()
                    .ok_or(GraphError::DanglingNode { edge: raw.id, node })
            };
            let t = lookup(raw.tail)?;
            let h = lookup(raw.head)?;
            if t == h {
                return Err(GraphError::SelfLoop(raw.id));
            }
            let dx = nodes[h].x - nodes[t].x;
            let dy = nodes[h].y - nodes[t].y;
            let sq = dx * dx + dy * dy;
            let length = match length_mode {
                LengthMode::Euclidean => sq.sqrt(),
                LengthMode::Squared => sq,
            };
            if !(length > 0.0) || !length.is_finite() {
                return Err(GraphError::ZeroLength(raw.id));
            }
            match raw.kind {
                EdgeKind::Undirected => {
                    incidence[t].nach.push(k);
                    incidence[h].nach.push(k);
                }
                EdgeKind::Directed => {
                    incidence[t].child.push(k);
                    incidence[h].pa.push(k);
                }
            }
            ends.push((t, h));
            geo_edges.push(GeoEdge { id: raw.id, tail: raw.tail, head: raw.head, kind: raw.kind, length });
        }
        let edge_index = geo_edges.iter().enumerate().map(|(i, e)| (e.id, i)).collect();

        let mut hasher = DefaultHasher::new();
        length_mode.hash(&mut hasher);
        for n in &nodes {
            n.id.hash(&mut hasher);
            n.x.to_bits().hash(&mut hasher);
            n.y.to_bits().hash(&mut hasher);
        }
        for e in &geo_edges {
            (e.id, e.tail, e.head, e.kind).hash(&mut hasher);
        }

        Ok(GeoGraph {
            nodes,
            edges: geo_edges,
            ends,
            node_index,
            edge_index,
            incidence,
            length_mode,
            fingerprint: hasher.finish(),
        })
    }

    pub fn nodes(&self) -> &[GeoNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GeoEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn length_mode(&self) -> LengthMode {
        self.length_mode
    }

    /// Identity of the node/edge structure; used to detect tables built on a
    /// different graph.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn node_index(&self, id: NodeId) -> Result<usize, GraphError> {
        self.node_index.get(&id).copied().ok_or(GraphError::UnknownNode(id))
    }

    pub fn edge_index(&self, id: EdgeId) -> Result<usize, GraphError> {
        self.edge_index.get(&id).copied().ok_or(GraphError::UnknownEdge(id))
    }

    pub fn node(&self, id: NodeId) -> Result<&GeoNode, GraphError> {
        Ok(&self.nodes[self.node_index(id)?])
    }

    pub fn edge(&self, id: EdgeId) -> Result<&GeoEdge, GraphError> {
        Ok(&self.edges[self.edge_index(id)?])
    }

    /// Endpoint indices (tail, head) of the edge at index `k`.
    pub fn endpoints(&self, k: usize) -> (usize, usize) {
        self.ends[k]
    }

    /// Undirected incident edge indices of the node at index `i`.
    pub fn nach(&self, i: usize) -> &[usize] {
        &self.incidence[i].nach
    }

    /// Directed in-edge indices of the node at index `i`.
    pub fn pa(&self, i: usize) -> &[usize] {
        &self.incidence[i].pa
    }

    /// Directed out-edge indices of the node at index `i`.
    pub fn child(&self, i: usize) -> &[usize] {
        &self.incidence[i].child
    }

    /// All incident edges of node index `i` regardless of kind, sorted by index.
    pub fn incident(&self, i: usize) -> Vec<usize> {
        let inc = &self.incidence[i];
        let mut all: Vec<usize> =
            inc.nach.iter().chain(&inc.pa).chain(&inc.child).copied().collect();
        all.sort_unstable();
        all
    }

    pub fn degree_at(&self, i: usize, mode: DegreeMode) -> usize {
        let inc = &self.incidence[i];
        match mode {
            DegreeMode::Undirected => inc.nach.len(),
            DegreeMode::In => inc.pa.len(),
            DegreeMode::Out => inc.child.len(),
            DegreeMode::Cg => inc.nach.len() + inc.pa.len() + inc.child.len(),
        }
    }

    pub fn degree(&self, v: NodeId, mode: DegreeMode) -> Result<usize, GraphError> {
        Ok(self.degree_at(self.node_index(v)?, mode))
    }

    /// Neighbours of node index `i` ignoring direction, as (edge index, node index).
    pub(crate) fn topology_neighbors(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let inc = &self.incidence[i];
        inc.nach.iter().chain(&inc.pa).chain(&inc.child).map(move |&k| {
            let (t, h) = self.ends[k];
            (k, if t == i { h } else { t })
        })
    }

    /// Node coordinates' bounding-box diagonal (0 for fewer than two nodes).
    pub fn bbox_diagonal(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for n in &self.nodes {
            x0 = x0.min(n.x);
            y0 = y0.min(n.y);
            x1 = x1.max(n.x);
            y1 = y1.max(n.y);
        }
        ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt()
    }

    /// Copy of the graph with every edge flipped (undirected edges swap endpoints).
    pub fn reversed(&self) -> GeoGraph {
        let raw = self
            .edges
            .iter()
            .map(|e| RawEdge { id: e.id, tail: e.head, head: e.tail, kind: e.kind })
            .collect();
        GeoGraph::build(self.nodes.clone(), raw, self.length_mode)
            .expect("reversing a valid graph keeps it valid")
    }
}

/// Disjoint node groups, each sorted by id, groups ordered by their lowest id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    groups: Vec<Vec<NodeId>>,
}

impl Partition {
    pub(crate) fn from_labels(graph: &GeoGraph, labels: &[usize]) -> Self {
        let mut by_label: std::collections::BTreeMap<usize, Vec<NodeId>> = Default::default();
        for (i, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().push(graph.nodes[i].id);
        }
        let mut groups: Vec<Vec<NodeId>> = by_label.into_values().collect();
        for g in &mut groups {
            g.sort();
        }
        groups.sort_by_key(|g| g[0]);
        Partition { groups }
    }

    pub fn groups(&self) -> &[Vec<NodeId>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Label of the group containing `v`: the lowest node id in that group.
    pub fn label_of(&self, v: NodeId) -> Option<NodeId> {
        self.groups.iter().find(|g| g.binary_search(&v).is_ok()).map(|g| g[0])
    }
}
