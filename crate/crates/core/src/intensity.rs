//! Edgewise and nodewise intensity functions.
//!
//! The edge intensity is the plug-in estimator count/length. Node intensities
//! average edge intensities over one incident-edge class; a node whose class
//! is empty has an undefined intensity.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geograph::{EdgeId, GeoGraph, GraphError, NodeId};
use crate::pointpattern::EdgeAssignment;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntensityError {
    #[error("edge assignment was built on a different graph")]
    GraphMismatch,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Incident-edge class a node intensity averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntensityMode {
    /// nach(v)
    Undirected,
    /// pa(v)
    In,
    /// child(v)
    Out,
    /// nach(v) ∪ pa(v) ∪ child(v)
    Cg,
    /// pa(v) ∪ child(v)
    InOut,
    /// nach(v) ∪ child(v)
    UndirectedOut,
}

impl IntensityMode {
    pub const ALL: [IntensityMode; 6] = [
        IntensityMode::Undirected,
        IntensityMode::In,
        IntensityMode::Out,
        IntensityMode::Cg,
        IntensityMode::InOut,
        IntensityMode::UndirectedOut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IntensityMode::Undirected => "undirected",
            IntensityMode::In => "in",
            IntensityMode::Out => "out",
            IntensityMode::Cg => "cg",
            IntensityMode::InOut => "in-out",
            IntensityMode::UndirectedOut => "undirected-out",
        }
    }

    fn slot(self) -> usize {
        IntensityMode::ALL.iter().position(|&m| m == self).unwrap()
    }

    /// Incident edge indices of node index `i` in this class.
    pub fn incident_edges(self, graph: &GeoGraph, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = match self {
            IntensityMode::Undirected => graph.nach(i).to_vec(),
            IntensityMode::In => graph.pa(i).to_vec(),
            IntensityMode::Out => graph.child(i).to_vec(),
            IntensityMode::Cg => graph.incident(i),
            IntensityMode::InOut => graph.pa(i).iter().chain(graph.child(i)).copied().collect(),
            IntensityMode::UndirectedOut => {
                graph.nach(i).iter().chain(graph.child(i)).copied().collect()
            }
        };
        out.sort_unstable();
        out
    }
}

impl fmt::Display for IntensityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntensityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IntensityMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown intensity mode '{s}'"))
    }
}

fn check(assignment: &EdgeAssignment, graph: &GeoGraph) -> Result<(), IntensityError> {
    if assignment.graph_fingerprint() != graph.fingerprint() {
        return Err(IntensityError::GraphMismatch);
    }
    Ok(())
}

fn intensity_at(assignment: &EdgeAssignment, graph: &GeoGraph, k: usize) -> f64 {
    assignment.counts()[k] as f64 / graph.edges()[k].length
}

pub fn edge_intensity(
    assignment: &EdgeAssignment,
    graph: &GeoGraph,
    edge: EdgeId,
) -> Result<f64, IntensityError> {
    check(assignment, graph)?;
    Ok(intensity_at(assignment, graph, graph.edge_index(edge)?))
}

fn mean_over(assignment: &EdgeAssignment, graph: &GeoGraph, edges: &[usize]) -> Option<f64> {
    if edges.is_empty() {
        return None;
    }
    let sum: f64 = edges.iter().map(|&k| intensity_at(assignment, graph, k)).sum();
    Some(sum / edges.len() as f64)
}

/// Mean edge intensity over the node's incident edges of `mode`; `None` when
/// the node has no such edges.
pub fn node_intensity(
    assignment: &EdgeAssignment,
    graph: &GeoGraph,
    v: NodeId,
    mode: IntensityMode,
) -> Result<Option<f64>, IntensityError> {
    check(assignment, graph)?;
    let i = graph.node_index(v)?;
    Ok(mean_over(assignment, graph, &mode.incident_edges(graph, i)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeIntensity {
    pub id: EdgeId,
    pub count: usize,
    pub length: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeIntensity {
    pub id: NodeId,
    values: [Option<f64>; 6],
}

impl NodeIntensity {
    pub fn get(&self, mode: IntensityMode) -> Option<f64> {
        self.values[mode.slot()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTable {
    pub edges: Vec<EdgeIntensity>,
    pub nodes: Vec<NodeIntensity>,
    graph_fingerprint: u64,
}

impl IntensityTable {
    pub fn graph_fingerprint(&self) -> u64 {
        self.graph_fingerprint
    }

    /// Node intensity by node index.
    pub fn node_at(&self, i: usize, mode: IntensityMode) -> Option<f64> {
        self.nodes[i].get(mode)
    }
}

pub fn intensity_table(
    assignment: &EdgeAssignment,
    graph: &GeoGraph,
) -> Result<IntensityTable, IntensityError> {
    check(assignment, graph)?;
    let edges = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| EdgeIntensity {
            id: e.id,
            count: assignment.counts()[k],
            length: e.length,
            intensity: intensity_at(assignment, graph, k),
        })
        .collect();
    let nodes = graph
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| NodeIntensity {
            id: n.id,
            values: IntensityMode::ALL
                .map(|mode| mean_over(assignment, graph, &mode.incident_edges(graph, i))),
        })
        .collect();
    Ok(IntensityTable { edges, nodes, graph_fingerprint: graph.fingerprint() })
}
