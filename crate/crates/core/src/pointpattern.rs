//! Planar events and their attribution to edge intervals (counting measures).

use rayon::prelude::*;
use thiserror::Error;

use crate::geograph::{EdgeId, GeoGraph, GraphError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignError {
    #[error("snapping tolerance must be a non-negative finite number, got {0}")]
    InvalidTolerance(f64),
    #[error("event {0} has non-finite coordinates")]
    NonFiniteEvent(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub x: f64,
    pub y: f64,
    pub mark: Option<String>,
}

impl Event {
    pub fn new(x: f64, y: f64) -> Self {
        Event { x, y, mark: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointPattern {
    pub events: Vec<Event>,
}

impl PointPattern {
    pub fn new(events: Vec<Event>) -> Self {
        PointPattern { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssignMode {
    /// Nearest segment within the tolerance, ties to the lowest edge id.
    #[default]
    Snap,
    /// Axis-aligned bounding-box membership; an event is counted on every
    /// edge whose box contains it.
    PaperBox,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventAssignment {
    Unassigned,
    Snapped { edge: EdgeId, distance: f64 },
    Boxed(Vec<EdgeId>),
}

#[derive(Debug, Clone)]
pub struct EdgeAssignment {
    mode: AssignMode,
    tolerance: f64,
    per_event: Vec<EventAssignment>,
    counts: Vec<usize>,
    edge_ids: Vec<EdgeId>,
    unassigned: usize,
    graph_fingerprint: u64,
}

impl EdgeAssignment {
    pub fn mode(&self) -> AssignMode {
        self.mode
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn events(&self) -> &[EventAssignment] {
        &self.per_event
    }

    /// Per-edge event counts, indexed like the graph's edges.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Events that matched no edge.
    pub fn unassigned(&self) -> usize {
        self.unassigned
    }

    pub fn graph_fingerprint(&self) -> u64 {
        self.graph_fingerprint
    }

    /// Counting measure N(s_e) of one edge.
    pub fn count_measure(&self, edge: EdgeId) -> Result<usize, GraphError> {
        let k = self.edge_ids.binary_search(&edge).map_err(|_| GraphError::UnknownEdge(edge))?;
        Ok(self.counts[k])
    }
}

/// 1% of the node bounding-box diagonal.
pub fn default_tolerance(graph: &GeoGraph) -> f64 {
    0.01 * graph.bbox_diagonal()
}

pub fn assign_events(
    graph: &GeoGraph,
    pattern: &PointPattern,
    tolerance: f64,
    mode: AssignMode,
) -> Result<EdgeAssignment, AssignError> {
    if !(tolerance >= 0.0) || !tolerance.is_finite() {
        return Err(AssignError::InvalidTolerance(tolerance));
    }
    if let Some(i) = pattern.events.iter().position(|e| !e.x.is_finite() || !e.y.is_finite()) {
        return Err(AssignError::NonFiniteEvent(i));
    }

    let segments: Vec<Segment> = (0..graph.edge_count())
        .map(|k| {
            let (t, h) = graph.endpoints(k);
            let (a, b) = (&graph.nodes()[t], &graph.nodes()[h]);
            Segment { ax: a.x, ay: a.y, bx: b.x, by: b.y }
        })
        .collect();
    let edge_ids: Vec<EdgeId> = graph.edges().iter().map(|e| e.id).collect();

    let per_event: Vec<EventAssignment> = pattern
        .events
        .par_iter()
        .map(|ev| match mode {
            AssignMode::Snap => snap(&segments, &edge_ids, ev.x, ev.y, tolerance),
            AssignMode::PaperBox => {
                let hits: Vec<EdgeId> = segments
                    .iter()
                    .zip(&edge_ids)
                    .filter(|(s, _)| s.box_contains(ev.x, ev.y))
                    .map(|(_, &id)| id)
                    .collect();
                if hits.is_empty() {
                    EventAssignment::Unassigned
                } else {
                    EventAssignment::Boxed(hits)
                }
            }
        })
        .collect();

    let mut counts = vec![0usize; edge_ids.len()];
    let mut unassigned = 0;
    for a in &per_event {
        match a {
            EventAssignment::Unassigned => unassigned += 1,
            EventAssignment::Snapped { edge, .. } => {
                counts[edge_ids.binary_search(edge).expect("edge from this graph")] += 1
            }
            EventAssignment::Boxed(hits) => {
                for edge in hits {
                    counts[edge_ids.binary_search(edge).expect("edge from this graph")] += 1;
                }
            }
        }
    }

    Ok(EdgeAssignment {
        mode,
        tolerance,
        per_event,
        counts,
        edge_ids,
        unassigned,
        graph_fingerprint: graph.fingerprint(),
    })
}

fn snap(segments: &[Segment], ids: &[EdgeId], x: f64, y: f64, tolerance: f64) -> EventAssignment {
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in segments.iter().enumerate() {
        let d = s.distance(x, y);
        if d <= tolerance && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    match best {
        Some((k, distance)) => EventAssignment::Snapped { edge: ids[k], distance },
        None => EventAssignment::Unassigned,
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
}

impl Segment {
    /// Perpendicular distance when the foot falls inside the segment,
    /// endpoint distance otherwise.
    fn distance(&self, x: f64, y: f64) -> f64 {
        point_segment_distance(x, y, self.ax, self.ay, self.bx, self.by)
    }

    /// Box spanned by the endpoints; degenerate (zero-width or zero-height)
    /// boxes contain nothing.
    fn box_contains(&self, x: f64, y: f64) -> bool {
        let (x0, x1) = (self.ax.min(self.bx), self.ax.max(self.bx));
        let (y0, y1) = (self.ay.min(self.by), self.ay.max(self.by));
        x0 < x1 && y0 < y1 && x0 <= x && x <= x1 && y0 <= y && y <= y1
    }
}

pub fn point_segment_distance(x: f64, y: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (px, py) = (ax + t * dx, ay + t * dy);
    ((x - px).powi(2) + (y - py).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geograph::{GeoNode, LengthMode, RawEdge};

    fn horizontal() -> GeoGraph {
        let nodes = vec![GeoNode::new(1, 0.0, 0.0), GeoNode::new(2, 10.0, 0.0)];
        GeoGraph::build(nodes, vec![RawEdge::undirected(1, 1, 2)], LengthMode::Euclidean).unwrap()
    }

    #[test]
    fn midpoint_snaps_with_zero_distance() {
        let g = horizontal();
        let a = assign_events(&g, &PointPattern::new(vec![Event::new(5.0, 0.0)]), 1.0, AssignMode::Snap)
            .unwrap();
        assert_eq!(a.events()[0], EventAssignment::Snapped { edge: EdgeId(1), distance: 0.0 });
        assert_eq!(a.count_measure(EdgeId(1)).unwrap(), 1);
    }

    #[test]
    fn far_event_is_reported_unassigned() {
        let g = horizontal();
        let a = assign_events(&g, &PointPattern::new(vec![Event::new(5.0, 5.0)]), 1.0, AssignMode::Snap)
            .unwrap();
        assert_eq!(a.events()[0], EventAssignment::Unassigned);
        assert_eq!(a.unassigned(), 1);
        assert_eq!(a.count_measure(EdgeId(1)).unwrap(), 0);
    }

    #[test]
    fn equidistant_event_goes_to_lowest_id() {
        // e1 along y=0, e2 along y=2; event at y=1 is distance 1 from both
        let nodes = vec![
            GeoNode::new(1, 0.0, 0.0),
            GeoNode::new(2, 10.0, 0.0),
            GeoNode::new(3, 0.0, 2.0),
            GeoNode::new(4, 10.0, 2.0),
        ];
        let edges = vec![RawEdge::undirected(2, 3, 4), RawEdge::undirected(1, 1, 2)];
        let g = GeoGraph::build(nodes, edges, LengthMode::Euclidean).unwrap();
        let d1 = point_segment_distance(4.0, 1.0, 0.0, 0.0, 10.0, 0.0);
        let d2 = point_segment_distance(4.0, 1.0, 0.0, 2.0, 10.0, 2.0);
        assert_eq!((d1, d2), (1.0, 1.0));
        let a = assign_events(&g, &PointPattern::new(vec![Event::new(4.0, 1.0)]), 2.0, AssignMode::Snap)
            .unwrap();
        assert_eq!(a.events()[0], EventAssignment::Snapped { edge: EdgeId(1), distance: 1.0 });
    }

    #[test]
    fn paper_box_counts_overlaps_on_every_edge() {
        let nodes = vec![
            GeoNode::new(1, 0.0, 0.0),
            GeoNode::new(2, 4.0, 4.0),
            GeoNode::new(3, 1.0, 0.0),
            GeoNode::new(4, 5.0, 3.0),
        ];
        let edges = vec![RawEdge::undirected(1, 1, 2), RawEdge::undirected(2, 3, 4)];
        let g = GeoGraph::build(nodes, edges, LengthMode::Euclidean).unwrap();
        // (2,1) lies in [0,4]x[0,4] and in [1,5]x[0,3]
        let p = PointPattern::new(vec![Event::new(2.0, 1.0), Event::new(4.5, 3.5)]);
        let a = assign_events(&g, &p, 0.0, AssignMode::PaperBox).unwrap();
        assert_eq!(a.count_measure(EdgeId(1)).unwrap(), 1);
        assert_eq!(a.count_measure(EdgeId(2)).unwrap(), 1);
        assert_eq!(a.events()[0], EventAssignment::Boxed(vec![EdgeId(1), EdgeId(2)]));
        assert_eq!(a.unassigned(), 1);
    }

    #[test]
    fn paper_box_is_empty_for_axis_parallel_edges() {
        let g = horizontal();
        let a = assign_events(&g, &PointPattern::new(vec![Event::new(5.0, 0.0)]), 0.0, AssignMode::PaperBox)
            .unwrap();
        assert_eq!(a.unassigned(), 1);
    }

    #[test]
    fn rejects_negative_tolerance_and_unknown_edges() {
        let g = horizontal();
        let p = PointPattern::default();
        assert_eq!(
            assign_events(&g, &p, -1.0, AssignMode::Snap).unwrap_err(),
            AssignError::InvalidTolerance(-1.0)
        );
        let a = assign_events(&g, &p, 0.5, AssignMode::Snap).unwrap();
        assert_eq!(a.count_measure(EdgeId(1)).unwrap(), 0);
        assert_eq!(a.count_measure(EdgeId(7)), Err(GraphError::UnknownEdge(EdgeId(7))));
    }

    #[test]
    fn default_tolerance_is_one_percent_of_diagonal() {
        let nodes = vec![GeoNode::new(1, 0.0, 0.0), GeoNode::new(2, 30.0, 40.0)];
        let g = GeoGraph::build(nodes, vec![], LengthMode::Euclidean).unwrap();
        assert_eq!(default_tolerance(&g), 0.5);
    }
}
