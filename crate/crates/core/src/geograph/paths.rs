use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use super::{EdgeId, GeoGraph, NodeId, Partition};

// Fixed source chunking keeps the floating-point summation order independent
// of the number of worker threads.
const SOURCE_CHUNK: usize = 32;

/// Connected components ignoring edge direction.
pub fn connected_components(graph: &GeoGraph) -> Partition {
    let labels = component_labels(graph, None);
    Partition::from_labels(graph, &labels)
}

/// Component label per node index (index of the component's first node);
/// `active` masks out removed edges.
pub(crate) fn component_labels(graph: &GeoGraph, active: Option<&[bool]>) -> Vec<usize> {
    let n = graph.node_count();
    let mut label = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for root in 0..n {
        if label[root] != usize::MAX {
            continue;
        }
        label[root] = root;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for (k, w) in graph.topology_neighbors(v) {
                if active.is_some_and(|a| !a[k]) {
                    continue;
                }
                if label[w] == usize::MAX {
                    label[w] = root;
                    queue.push_back(w);
                }
            }
        }
    }
    label
}

pub(crate) fn component_count(graph: &GeoGraph, active: Option<&[bool]>) -> usize {
    let labels = component_labels(graph, active);
    labels.iter().enumerate().filter(|&(i, &l)| i == l).count()
}

/// Node betweenness over unordered node pairs with hop-count shortest paths.
pub fn betweenness(graph: &GeoGraph) -> BTreeMap<NodeId, f64> {
    let (nodes, _) = brandes(graph, None);
    graph.nodes().iter().map(|n| n.id).zip(nodes).collect()
}

/// Edge betweenness over unordered node pairs with hop-count shortest paths.
pub fn edge_betweenness(graph: &GeoGraph) -> BTreeMap<EdgeId, f64> {
    let (_, edges) = brandes(graph, None);
    graph.edges().iter().map(|e| e.id).zip(edges).collect()
}

/// Brandes accumulation, returning (node, edge) scores indexed like the
/// graph. Parallel edges count as distinct shortest paths.
pub(crate) fn brandes(graph: &GeoGraph, active: Option<&[bool]>) -> (Vec<f64>, Vec<f64>) {
    let n = graph.node_count();
    let m = graph.edge_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut node_acc = vec![0.0; n];
            let mut edge_acc = vec![0.0; m];
            let mut state = BrandesState::new(n);
            for &s in chunk {
                state.accumulate(graph, active, s, &mut node_acc, &mut edge_acc);
            }
            (node_acc, edge_acc)
        })
        .collect();

    let mut node_bc = vec![0.0; n];
    let mut edge_bc = vec![0.0; m];
    for (na, ea) in partials {
        for (t, v) in node_bc.iter_mut().zip(na) {
            *t += v;
        }
        for (t, v) in edge_bc.iter_mut().zip(ea) {
            *t += v;
        }
    }
    // every unordered pair was visited from both ends
    for v in node_bc.iter_mut().chain(edge_bc.iter_mut()) {
        *v /= 2.0;
    }
    (node_bc, edge_bc)
}

struct BrandesState {
    dist: Vec<i64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    preds: Vec<Vec<(usize, usize)>>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl BrandesState {
    fn new(n: usize) -> Self {
        BrandesState {
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }

    fn accumulate(
        &mut self,
        graph: &GeoGraph,
        active: Option<&[bool]>,
        s: usize,
        node_acc: &mut [f64],
        edge_acc: &mut [f64],
    ) {
        for &v in &self.order {
            self.dist[v] = -1;
            self.sigma[v] = 0.0;
            self.delta[v] = 0.0;
            self.preds[v].clear();
        }
        self.order.clear();

        self.dist[s] = 0;
        self.sigma[s] = 1.0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            for (k, w) in graph.topology_neighbors(v) {
                if active.is_some_and(|a| !a[k]) {
                    continue;
                }
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push((k, v));
                }
            }
        }

        for idx in (0..self.order.len()).rev() {
            let w = self.order[idx];
            for j in 0..self.preds[w].len() {
                let (k, v) = self.preds[w][j];
                let c = self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
                edge_acc[k] += c;
                self.delta[v] += c;
            }
            if w != s {
                node_acc[w] += self.delta[w];
            }
        }
    }
}

/// Largest hop-count shortest-path length over all reachable pairs.
pub fn diameter(graph: &GeoGraph) -> usize {
    let n = graph.node_count();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut best = 0;
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            best = best.max(dist[v]);
            for (_, w) in graph.topology_neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geograph::{GeoNode, LengthMode, RawEdge};

    fn graph(n: u64, edges: &[(u64, u64)]) -> GeoGraph {
        let nodes = (1..=n).map(|i| GeoNode::new(i, i as f64, (i * i) as f64)).collect();
        let raw = edges
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| RawEdge::undirected(k as u64 + 1, a, b))
            .collect();
        GeoGraph::build(nodes, raw, LengthMode::Euclidean).unwrap()
    }

    #[test]
    fn path_of_three() {
        let g = graph(3, &[(1, 2), (2, 3)]);
        let bc = betweenness(&g);
        assert_eq!(bc[&NodeId(2)], 1.0);
        assert_eq!(bc[&NodeId(1)], 0.0);
        let eb = edge_betweenness(&g);
        assert_eq!(eb[&EdgeId(1)], 2.0);
        assert_eq!(eb[&EdgeId(2)], 2.0);
        assert_eq!(diameter(&g), 2);
    }

    #[test]
    fn star_center_and_complete_graph() {
        let star = graph(4, &[(1, 2), (1, 3), (1, 4)]);
        assert_eq!(betweenness(&star)[&NodeId(1)], 3.0);

        let k4 = graph(4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        assert!(betweenness(&k4).values().all(|&b| b == 0.0));
        assert_eq!(diameter(&k4), 1);
    }

    #[test]
    fn single_edge_betweenness() {
        let g = graph(2, &[(1, 2)]);
        assert_eq!(edge_betweenness(&g)[&EdgeId(1)], 1.0);
    }

    #[test]
    fn components_partition() {
        let g = graph(4, &[(1, 2), (3, 4)]);
        let c = connected_components(&g);
        assert_eq!(c.len(), 2);
        assert_eq!(c.groups()[1], vec![NodeId(3), NodeId(4)]);
        assert_eq!(c.label_of(NodeId(4)), Some(NodeId(3)));

        let empty = graph(3, &[]);
        assert_eq!(connected_components(&empty).len(), 3);
        assert_eq!(diameter(&empty), 0);
    }
}
