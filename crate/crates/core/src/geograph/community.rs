//! Girvan–Newman divisive community detection.

use super::paths::{brandes, component_count, component_labels};
use super::{GeoGraph, GraphError, Partition};

const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommunityTarget {
    Groups(usize),
    /// Remove edges until every node is its own group.
    FullFragmentation,
}

/// Repeatedly removes the edge with the highest betweenness (ties to the
/// lowest edge id), recomputing betweenness after every removal, until the
/// component count reaches the target.
pub fn communities(graph: &GeoGraph, target: CommunityTarget) -> Result<Partition, GraphError> {
    let n = graph.node_count();
    let target = match target {
        CommunityTarget::Groups(k) => k,
        CommunityTarget::FullFragmentation => n,
    };
    if target > n {
        return Err(GraphError::UnreachableTarget { target, nodes: n });
    }
    let mut active = vec![true; graph.edge_count()];
    let mut components = component_count(graph, Some(&active));
    if target < components {
        return Err(GraphError::TargetBelowComponents { target, components });
    }
    while components < target {
        remove_top_edge(graph, &mut active);
        components = component_count(graph, Some(&active));
    }
    Ok(Partition::from_labels(graph, &component_labels(graph, Some(&active))))
}

/// Runs the full removal sequence and returns the level with the highest
/// Newman modularity (earliest level on ties) together with its modularity.
pub fn communities_by_modularity(graph: &GeoGraph) -> (Partition, f64) {
    let mut active = vec![true; graph.edge_count()];
    let mut labels = component_labels(graph, Some(&active));
    let mut best = (labels.clone(), modularity_of_labels(graph, &labels));
    let mut components = component_count(graph, Some(&active));
    while active.iter().any(|&a| a) {
        remove_top_edge(graph, &mut active);
        let now = component_count(graph, Some(&active));
        if now > components {
            components = now;
            labels = component_labels(graph, Some(&active));
            let q = modularity_of_labels(graph, &labels);
            if q > best.1 + TIE_TOLERANCE {
                best = (labels.clone(), q);
            }
        }
    }
    (Partition::from_labels(graph, &best.0), best.1)
}

fn remove_top_edge(graph: &GeoGraph, active: &mut [bool]) {
    let (_, scores) = brandes(graph, Some(active));
    let max = scores
        .iter()
        .zip(active.iter())
        .filter(|(_, &a)| a)
        .map(|(&s, _)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let cut = max - TIE_TOLERANCE * max.abs().max(1.0);
    let k = (0..scores.len())
        .find(|&k| active[k] && scores[k] >= cut)
        .expect("an active edge exists while components < target");
    active[k] = false;
}

/// Newman modularity of a partition over the full (undirected view of the)
/// graph. Zero for graphs without edges.
pub fn modularity(graph: &GeoGraph, partition: &Partition) -> f64 {
    let mut labels = vec![0usize; graph.node_count()];
    for (g, group) in partition.groups().iter().enumerate() {
        for id in group {
            if let Ok(i) = graph.node_index(*id) {
                labels[i] = g;
            }
        }
    }
    modularity_of_labels(graph, &labels)
}

fn modularity_of_labels(graph: &GeoGraph, labels: &[usize]) -> f64 {
    let m = graph.edge_count() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let groups = labels.iter().copied().max().map_or(0, |x| x + 1);
    let mut inside = vec![0.0; groups];
    let mut degree_sum = vec![0.0; groups];
    for k in 0..graph.edge_count() {
        let (t, h) = graph.endpoints(k);
        degree_sum[labels[t]] += 1.0;
        degree_sum[labels[h]] += 1.0;
        if labels[t] == labels[h] {
            inside[labels[t]] += 1.0;
        }
    }
    inside
        .iter()
        .zip(&degree_sum)
        .map(|(l, d)| l / m - (d / (2.0 * m)).powi(2))
        .sum()
}
