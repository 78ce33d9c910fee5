mod common;

use common::*;
use netsnr::geograph::{GeoGraph, LengthMode};
use netsnr::intensity::{intensity_table, IntensityMode};
use netsnr::pointpattern::{assign_events, default_tolerance, AssignMode, Event, EventAssignment, PointPattern};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Events near random edges plus a few strays.
fn random_pattern(g: &GeoGraph, seed: u64, n: usize) -> PointPattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let events = (0..n)
        .map(|_| {
            if g.edge_count() == 0 || rng.random_bool(0.1) {
                return Event::new(rng.random_range(-5.0..30.0), rng.random_range(-5.0..40.0));
            }
            let (t, h) = g.endpoints(rng.random_range(0..g.edge_count()));
            let (a, b) = (&g.nodes()[t], &g.nodes()[h]);
            let u: f64 = rng.random();
            let jitter = 0.05;
            Event::new(
                a.x + u * (b.x - a.x) + rng.random_range(-jitter..jitter),
                a.y + u * (b.y - a.y) + rng.random_range(-jitter..jitter),
            )
        })
        .collect();
    PointPattern::new(events)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snapped_counts_account_for_every_event(seed in any::<u64>(), n in 0usize..80, tol in 0.0f64..2.0) {
        let g = random_graph(seed, 12, LengthMode::Euclidean);
        let p = random_pattern(&g, seed, n);
        let a = assign_events(&g, &p, tol, AssignMode::Snap).unwrap();
        prop_assert_eq!(a.counts().iter().sum::<usize>() + a.unassigned(), n);
        for (ev, asg) in p.events.iter().zip(a.events()) {
            if let EventAssignment::Snapped { distance, .. } = asg {
                prop_assert!(*distance <= tol);
                let _ = ev;
            }
        }
    }

    #[test]
    fn event_order_is_irrelevant(seed in any::<u64>(), n in 0usize..60) {
        let g = random_graph(seed, 10, LengthMode::Euclidean);
        let p = random_pattern(&g, seed, n);
        let mut shuffled = p.clone();
        shuffled.events.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for mode in [AssignMode::Snap, AssignMode::PaperBox] {
            let a = assign_events(&g, &p, 0.5, mode).unwrap();
            let b = assign_events(&g, &shuffled, 0.5, mode).unwrap();
            prop_assert_eq!(a.counts(), b.counts());
            prop_assert_eq!(a.unassigned(), b.unassigned());
        }
    }

    #[test]
    fn larger_tolerance_assigns_no_fewer(seed in any::<u64>(), t1 in 0.0f64..1.0, dt in 0.0f64..1.0) {
        let g = random_graph(seed, 10, LengthMode::Euclidean);
        let p = random_pattern(&g, seed, 50);
        let a = assign_events(&g, &p, t1, AssignMode::Snap).unwrap();
        let b = assign_events(&g, &p, t1 + dt, AssignMode::Snap).unwrap();
        prop_assert!(b.unassigned() <= a.unassigned());
    }

    #[test]
    fn node_means_match_exact_rationals(seed in any::<u64>()) {
        // squared lengths of integer coordinates are integers, so every
        // intensity is an exact rational
        let g = random_graph(seed, 10, LengthMode::Squared);
        let p = random_pattern(&g, seed, 60);
        let a = assign_events(&g, &p, 0.2, AssignMode::Snap).unwrap();
        let table = intensity_table(&a, &g).unwrap();
        for (k, e) in table.edges.iter().enumerate() {
            prop_assert_eq!(e.count, a.counts()[k]);
            prop_assert!(close(e.intensity, e.count as f64 / e.length));
        }
        for i in 0..g.node_count() {
            for mode in IntensityMode::ALL {
                let edges = mode.incident_edges(&g, i);
                let expected = (!edges.is_empty()).then(|| {
                    let sum = edges.iter().fold(Q::from_integer(0), |acc, &k| {
                        acc + Q::new(a.counts()[k] as i128, g.edges()[k].length as i128)
                    });
                    to_f64(&(sum / Q::from_integer(edges.len() as i128)))
                });
                match (table.node_at(i, mode), expected) {
                    (None, None) => {}
                    (Some(x), Some(y)) => prop_assert!(close(x, y), "{} vs {}", x, y),
                    other => prop_assert!(false, "definedness differs: {:?}", other),
                }
            }
        }
    }

    #[test]
    fn cg_lies_between_incident_extremes(seed in any::<u64>()) {
        let g = random_graph(seed, 12, LengthMode::Euclidean);
        let p = random_pattern(&g, seed, 70);
        let a = assign_events(&g, &p, 0.2, AssignMode::Snap).unwrap();
        let t = intensity_table(&a, &g).unwrap();
        for i in 0..g.node_count() {
            let vals: Vec<f64> = g.incident(i).iter().map(|&k| t.edges[k].intensity).collect();
            match t.node_at(i, IntensityMode::Cg) {
                None => prop_assert!(vals.is_empty()),
                Some(v) => {
                    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(lo - 1e-12 <= v && v <= hi + 1e-12);
                }
            }
        }
    }

    #[test]
    fn duplicating_events_doubles_intensity(seed in any::<u64>()) {
        let g = random_graph(seed, 10, LengthMode::Euclidean);
        let p = random_pattern(&g, seed, 40);
        let mut twice = p.clone();
        twice.events.extend(p.events.clone());
        let a = intensity_table(&assign_events(&g, &p, 0.3, AssignMode::Snap).unwrap(), &g).unwrap();
        let b = intensity_table(&assign_events(&g, &twice, 0.3, AssignMode::Snap).unwrap(), &g).unwrap();
        for (x, y) in a.edges.iter().zip(&b.edges) {
            prop_assert_eq!(2 * x.count, y.count);
            prop_assert!(close(2.0 * x.intensity, y.intensity));
        }
        for i in 0..g.node_count() {
            for mode in IntensityMode::ALL {
                match (a.node_at(i, mode), b.node_at(i, mode)) {
                    (Some(x), Some(y)) => prop_assert!(close(2.0 * x, y)),
                    (x, y) => prop_assert_eq!(x, y),
                }
            }
        }
    }

    #[test]
    fn scaling_space_scales_intensity(seed in any::<u64>(), e in -3i32..4) {
        // powers of two scale coordinates exactly, keeping snap ties intact
        let c = 2f64.powi(e);
        let g = random_graph(seed, 10, LengthMode::Euclidean);
        let p = random_pattern(&g, seed, 40);
        let nodes = g.nodes().iter().map(|n| netsnr::geograph::GeoNode { x: n.x * c, y: n.y * c, ..*n }).collect();
        let raw = g.edges().iter().map(|e| netsnr::geograph::RawEdge { id: e.id, tail: e.tail, head: e.head, kind: e.kind }).collect();
        let gs = GeoGraph::build(nodes, raw, LengthMode::Euclidean).unwrap();
        let ps = PointPattern::new(p.events.iter().map(|e| Event::new(e.x * c, e.y * c)).collect());
        let a = assign_events(&g, &p, 0.3, AssignMode::Snap).unwrap();
        let b = assign_events(&gs, &ps, 0.3 * c, AssignMode::Snap).unwrap();
        prop_assert_eq!(a.counts(), b.counts());
        let (ta, tb) = (intensity_table(&a, &g).unwrap(), intensity_table(&b, &gs).unwrap());
        for (x, y) in ta.edges.iter().zip(&tb.edges) {
            prop_assert!((x.intensity / c - y.intensity).abs() <= 1e-9 * x.intensity.max(1.0));
        }
    }
}

#[test]
fn equal_edge_intensity_gives_equal_node_intensity() {
    // every edge of a unit grid gets exactly one event at its midpoint
    let nodes: Vec<_> = (0..9).map(|i| netsnr::geograph::GeoNode::new(i + 1, (i % 3) as f64, (i / 3) as f64)).collect();
    let mut raw = vec![];
    for i in 0..9u64 {
        if i % 3 < 2 {
            raw.push(netsnr::geograph::RawEdge::directed(raw.len() as u64 + 1, i + 1, i + 2));
        }
        if i / 3 < 2 {
            raw.push(netsnr::geograph::RawEdge::undirected(raw.len() as u64 + 1, i + 1, i + 4));
        }
    }
    let g = GeoGraph::build(nodes, raw, LengthMode::Euclidean).unwrap();
    let events = (0..g.edge_count())
        .map(|k| {
            let (t, h) = g.endpoints(k);
            let (a, b) = (&g.nodes()[t], &g.nodes()[h]);
            Event::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
        })
        .collect();
    let tol = default_tolerance(&g);
    let t = intensity_table(&assign_events(&g, &PointPattern::new(events), tol, AssignMode::Snap).unwrap(), &g).unwrap();
    for i in 0..g.node_count() {
        for mode in IntensityMode::ALL {
            if let Some(v) = t.node_at(i, mode) {
                assert_eq!(v, 1.0);
            }
        }
    }
}

#[test]
fn paper_box_counts_every_containing_edge() {
    use netsnr::geograph::{GeoNode, RawEdge};
    let g = GeoGraph::build(
        vec![GeoNode::new(1, 0.0, 0.0), GeoNode::new(2, 2.0, 2.0), GeoNode::new(3, 0.0, 2.0)],
        vec![RawEdge::undirected(1, 1, 2), RawEdge::undirected(2, 3, 1), RawEdge::undirected(3, 2, 3)],
        LengthMode::Euclidean,
    )
    .unwrap();
    let p = PointPattern::new(vec![Event::new(1.0, 1.5), Event::new(5.0, 5.0)]);
    let a = assign_events(&g, &p, 0.0, AssignMode::PaperBox).unwrap();
    // axis-parallel edges have degenerate boxes
    assert_eq!(a.counts(), &[1, 0, 0]);
    assert_eq!(a.unassigned(), 1);
    assert!(assign_events(&g, &p, -1.0, AssignMode::Snap).is_err());
}
