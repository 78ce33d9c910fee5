mod common;

use common::*;
use netsnr::geograph::{
    betweenness, communities, communities_by_modularity, connected_components, diameter, edge_betweenness,
    modularity, CommunityTarget, DegreeMode, GeoGraph, GeoNode, LengthMode, NodeId, RawEdge,
};
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn mixed() -> GeoGraph {
    let nodes = vec![GeoNode::new(1, 0.0, 0.0), GeoNode::new(2, 1.0, 0.0), GeoNode::new(3, 2.0, 0.0)];
    let edges = vec![RawEdge::directed(10, 1, 2), RawEdge::undirected(11, 2, 3)];
    GeoGraph::build(nodes, edges, LengthMode::Euclidean).unwrap()
}

#[test]
fn degrees_on_mixed_path() {
    let g = mixed();
    let b = NodeId(2);
    assert_eq!(g.degree(b, DegreeMode::Undirected).unwrap(), 1);
    assert_eq!(g.degree(b, DegreeMode::In).unwrap(), 1);
    assert_eq!(g.degree(b, DegreeMode::Out).unwrap(), 0);
    assert_eq!(g.degree(b, DegreeMode::Cg).unwrap(), 2);
}

#[test]
fn path_betweenness() {
    let g = mixed();
    let bc = betweenness(&g);
    assert_eq!(bc[&NodeId(1)], 0.0);
    assert_eq!(bc[&NodeId(2)], 1.0);
    let eb = edge_betweenness(&g);
    assert!(eb.values().all(|&v| v == 2.0));
    assert_eq!(diameter(&g), 2);
}

#[test]
fn barbell_splits_at_bridge() {
    let mut nodes = vec![];
    for i in 1..=6 {
        nodes.push(GeoNode::new(i, i as f64, (i * i % 5) as f64));
    }
    let pairs = [(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6), (3, 4)];
    let edges = pairs.iter().enumerate().map(|(k, &(a, b))| RawEdge::undirected(k as u64 + 1, a, b)).collect();
    let g = GeoGraph::build(nodes, edges, LengthMode::Euclidean).unwrap();
    let p = communities(&g, CommunityTarget::Groups(2)).unwrap();
    let ids = |v: &[u64]| v.iter().map(|&i| NodeId(i)).collect::<Vec<_>>();
    assert_eq!(p.groups(), &[ids(&[1, 2, 3]), ids(&[4, 5, 6])]);
    let (best, q) = communities_by_modularity(&g);
    assert_eq!(best, p);
    assert!((q - modularity(&g, &p)).abs() < 1e-12);
    assert!(communities(&g, CommunityTarget::Groups(7)).is_err());
    assert_eq!(communities(&g, CommunityTarget::FullFragmentation).unwrap().len(), 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_sums(seed in any::<u64>()) {
        let g = random_graph(seed, 12, LengthMode::Euclidean);
        let undirected = (0..g.edge_count()).filter(|&k| !is_directed(&g, k)).count();
        let directed = g.edge_count() - undirected;
        let sum = |m| (0..g.node_count()).map(|i| g.degree_at(i, m)).sum::<usize>();
        prop_assert_eq!(sum(DegreeMode::Undirected), 2 * undirected);
        prop_assert_eq!(sum(DegreeMode::In), directed);
        prop_assert_eq!(sum(DegreeMode::Out), directed);
        prop_assert_eq!(sum(DegreeMode::Cg), 2 * g.edge_count());
    }

    #[test]
    fn betweenness_matches_enumeration(seed in any::<u64>()) {
        let g = random_graph(seed, 10, LengthMode::Euclidean);
        let (node, edge) = brute_betweenness(&g, &vec![true; g.edge_count()]);
        let bc = betweenness(&g);
        for (i, n) in g.nodes().iter().enumerate() {
            prop_assert!(close(bc[&n.id], to_f64(&node[i])), "node {:?}: {} vs {}", n.id, bc[&n.id], node[i]);
        }
        let eb = edge_betweenness(&g);
        for (k, e) in g.edges().iter().enumerate() {
            prop_assert!(close(eb[&e.id], to_f64(&edge[k])));
        }
    }

    #[test]
    fn components_and_diameter_match_closure(seed in any::<u64>()) {
        let g = random_graph(seed, 12, LengthMode::Squared);
        let labels = partition_labels(&g, connected_components(&g).groups());
        prop_assert_eq!(labels, brute_components(&g, &vec![true; g.edge_count()]));
        prop_assert_eq!(diameter(&g), brute_diameter(&g));
    }

    #[test]
    fn communities_match_sequential_removal(seed in any::<u64>(), extra in 0usize..12) {
        let g = random_graph(seed, 9, LengthMode::Euclidean);
        let base = connected_components(&g).len();
        let target = (base + extra).min(g.node_count());
        let p = communities(&g, CommunityTarget::Groups(target)).unwrap();
        prop_assert_eq!(p.len(), target);
        prop_assert_eq!(partition_labels(&g, p.groups()), brute_communities(&g, target));
        // the current components are the identity level
        prop_assert_eq!(communities(&g, CommunityTarget::Groups(base)).unwrap(), connected_components(&g));
    }

    #[test]
    fn direction_flip_invariance(seed in any::<u64>()) {
        let g = random_graph(seed, 12, LengthMode::Euclidean);
        let r = g.reversed();
        prop_assert_eq!(connected_components(&g), connected_components(&r));
        prop_assert_eq!(diameter(&g), diameter(&r));
        let (a, b) = (betweenness(&g), betweenness(&r));
        for (k, v) in &a {
            prop_assert!(close(*v, b[k]));
        }
        for i in 0..g.node_count() {
            prop_assert_eq!(g.degree_at(i, DegreeMode::In), r.degree_at(i, DegreeMode::Out));
            prop_assert_eq!(g.degree_at(i, DegreeMode::Cg), r.degree_at(i, DegreeMode::Cg));
        }
    }
}
