//! Brute-force oracles and random inputs shared by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use netsnr::geograph::{EdgeKind, GeoGraph, GeoNode, LengthMode, RawEdge};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = Ratio<i128>;

/// Random graph with distinct integer coordinates, mixed edge kinds and
/// occasional parallel edges.
pub fn random_graph(seed: u64, max_nodes: usize, length_mode: LengthMode) -> GeoGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_nodes);
    let mut ys: Vec<i64> = (0..n as i64).collect();
    ys.shuffle(&mut rng);
    let nodes: Vec<GeoNode> =
        (0..n).map(|i| GeoNode::new(100 + 3 * i as u64, (2 * i) as f64, ys[i] as f64 * 3.0)).collect();
    let p = rng.random_range(0.1..0.6);
    let mut edges = vec![];
    let mut id = 1000u64;
    for a in 0..n {
        for b in (a + 1)..n {
            let copies = if rng.random_bool(p) { 1 + usize::from(rng.random_bool(0.1)) } else { 0 };
            for _ in 0..copies {
                let (t, h) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
                let (t, h) = (nodes[t].id.0, nodes[h].id.0);
                id += rng.random_range(1..4);
                edges.push(if rng.random_bool(0.3) { RawEdge::directed(id, t, h) } else { RawEdge::undirected(id, t, h) });
            }
        }
    }
    edges.shuffle(&mut rng);
    GeoGraph::build(nodes, edges, length_mode).unwrap()
}

/// Endpoint indices of every edge.
pub fn ends(g: &GeoGraph) -> Vec<(usize, usize)> {
    g.edges().iter().map(|e| (g.node_index(e.tail).unwrap(), g.node_index(e.head).unwrap())).collect()
}

/// All-pairs hop distances on the undirected view (Floyd–Warshall);
/// `usize::MAX` marks unreachable pairs.
pub fn hop_distances(g: &GeoGraph, active: &[bool]) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (k, (a, b)) in ends(g).into_iter().enumerate() {
        if active[k] {
            d[a][b] = 1;
            d[b][a] = 1;
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][m] + d[m][j] < d[i][j] {
                    d[i][j] = d[i][m] + d[m][j];
                }
            }
        }
    }
    d.into_iter().map(|r| r.into_iter().map(|v| if v >= inf { usize::MAX } else { v }).collect()).collect()
}

/// Enumerates every shortest s–t path as a list of edge indices.
fn shortest_paths(g: &GeoGraph, active: &[bool], dist: &[Vec<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    let e = ends(g);
    let mut out = vec![];
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(s, vec![])];
    while let Some((v, path)) = stack.pop() {
        if v == t {
            out.push(path);
            continue;
        }
        for (k, &(a, b)) in e.iter().enumerate() {
            if !active[k] || (a != v && b != v) {
                continue;
            }
            let w = if a == v { b } else { a };
            if dist[w][t] != usize::MAX && dist[w][t] + 1 == dist[v][t] {
                let mut p = path.clone();
                p.push(k);
                stack.push((w, p));
            }
        }
    }
    out
}

/// Exact node and edge betweenness over unordered pairs by path enumeration.
pub fn brute_betweenness(g: &GeoGraph, active: &[bool]) -> (Vec<Q>, Vec<Q>) {
    let n = g.node_count();
    let e = ends(g);
    let dist = hop_distances(g, active);
    let mut node = vec![Q::from_integer(0); n];
    let mut edge = vec![Q::from_integer(0); g.edge_count()];
    for s in 0..n {
        for t in (s + 1)..n {
            if dist[s][t] == usize::MAX {
                continue;
            }
            let paths = shortest_paths(g, active, &dist, s, t);
            let sigma = paths.len() as i128;
            let mut through_node = vec![0i128; n];
            let mut through_edge = vec![0i128; g.edge_count()];
            for p in &paths {
                let mut v = s;
                for &k in p {
                    through_edge[k] += 1;
                    v = if e[k].0 == v { e[k].1 } else { e[k].0 };
                    if v != t {
                        through_node[v] += 1;
                    }
                }
            }
            for v in 0..n {
                node[v] += Q::new(through_node[v], sigma);
            }
            for k in 0..g.edge_count() {
                edge[k] += Q::new(through_edge[k], sigma);
            }
        }
    }
    (node, edge)
}

pub fn to_f64(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Component label (lowest member index) from reachability.
pub fn brute_components(g: &GeoGraph, active: &[bool]) -> Vec<usize> {
    let d = hop_distances(g, active);
    (0..g.node_count()).map(|i| (0..g.node_count()).find(|&j| d[i][j] != usize::MAX).unwrap()).collect()
}

pub fn brute_diameter(g: &GeoGraph) -> usize {
    let d = hop_distances(g, &vec![true; g.edge_count()]);
    d.iter().flatten().copied().filter(|&v| v != usize::MAX).max().unwrap_or(0)
}

/// Girvan–Newman by repeated exact edge-betweenness, ties to the lowest edge.
pub fn brute_communities(g: &GeoGraph, target: usize) -> Vec<usize> {
    let mut active = vec![true; g.edge_count()];
    let count = |a: &[bool]| {
        let l = brute_components(g, a);
        (0..l.len()).filter(|&i| l[i] == i).count()
    };
    while count(&active) < target {
        let (_, eb) = brute_betweenness(g, &active);
        let best = (0..eb.len()).filter(|&k| active[k]).max_by(|&a, &b| eb[a].cmp(&eb[b]).then(b.cmp(&a))).unwrap();
        active[best] = false;
    }
    brute_components(g, &active)
}

/// Node-index labels of a partition, labelled by lowest member index.
pub fn partition_labels(g: &GeoGraph, groups: &[Vec<netsnr::geograph::NodeId>]) -> Vec<usize> {
    let mut labels = vec![usize::MAX; g.node_count()];
    for group in groups {
        let idx: Vec<usize> = group.iter().map(|v| g.node_index(*v).unwrap()).collect();
        let low = *idx.iter().min().unwrap();
        for i in idx {
            labels[i] = low;
        }
    }
    labels
}

pub fn is_directed(g: &GeoGraph, k: usize) -> bool {
    g.edges()[k].kind == EdgeKind::Directed
}

/// Recursive Cox–de Boor evaluation of basis function `j` of `degree` on
/// `knots`; the right end of the domain belongs to the last interval.
pub fn cox_de_boor(knots: &[f64], j: usize, degree: usize, x: f64, hi_index: usize) -> f64 {
    if degree == 0 {
        let inside = knots[j] <= x && x < knots[j + 1];
        let right_end = x == knots[hi_index] && j + 1 == hi_index;
        return if inside || right_end { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = knots[j + degree] - knots[j];
    if d1 > 0.0 {
        v += (x - knots[j]) / d1 * cox_de_boor(knots, j, degree - 1, x, hi_index);
    }
    let d2 = knots[j + degree + 1] - knots[j + 1];
    if d2 > 0.0 {
        v += (knots[j + degree + 1] - x) / d2 * cox_de_boor(knots, j + 1, degree - 1, x, hi_index);
    }
    v
}

/// Σ_k (Δ^order β)_k² with the differences expanded by binomial weights.
pub fn difference_sum(beta: &[f64], order: usize) -> f64 {
    let binom = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    (0..beta.len() - order)
        .map(|k| {
            let d: f64 = (0..=order)
                .map(|i| {
                    let sign = if (order - i) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * binom(order, i) * beta[k + i]
                })
                .sum();
            d * d
        })
        .sum()
}

/// `rows x cols` lattice with unit `spacing`; node ids are 1-based row-major,
/// horizontal edges point east and vertical edges point north when `directed`.
pub fn grid_graph(rows: usize, cols: usize, spacing: f64, directed: bool) -> GeoGraph {
    let id = |r: usize, c: usize| (r * cols + c + 1) as u64;
    let mut nodes = vec![];
    let mut edges = vec![];
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(GeoNode::new(id(r, c), c as f64 * spacing, r as f64 * spacing));
            let mut link = |a: u64, b: u64| {
                let k = edges.len() as u64 + 1;
                edges.push(if directed { RawEdge::directed(k, a, b) } else { RawEdge::undirected(k, a, b) });
            };
            if c + 1 < cols {
                link(id(r, c), id(r, c + 1));
            }
            if r + 1 < rows {
                link(id(r, c), id(r + 1, c));
            }
        }
    }
    GeoGraph::build(nodes, edges, LengthMode::Euclidean).unwrap()
}

pub fn standard_normals(seed: u64, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Snaps `pattern` onto `graph` and tabulates intensities.
pub fn tabulate(
    graph: &GeoGraph,
    pattern: &netsnr::pointpattern::PointPattern,
    tolerance: f64,
) -> netsnr::intensity::IntensityTable {
    use netsnr::pointpattern::{assign_events, AssignMode};
    let a = assign_events(graph, pattern, tolerance, AssignMode::Snap).unwrap();
    netsnr::intensity::intensity_table(&a, graph).unwrap()
}
