//! Graph ingestion from GeoJSON.
//!
//! Point features become nodes (id from the `id` property or the feature id,
//! generated otherwise). LineString and MultiLineString features become
//! chains of edges between consecutive vertices; vertices are matched to
//! existing nodes by exact coordinates and create new nodes otherwise. A
//! two-vertex line keeps its `id`; split lines get generated edge ids. The
//! `directed` property (boolean or 0/1) marks directed lines.

use std::collections::HashMap;

use geojson::{feature::Id, Feature, GeoJson, GeometryValue, JsonObject, JsonValue, Position};

use super::IoError;
use crate::geograph::{EdgeKind, EdgeId, GeoNode, NodeId, RawEdge};

fn err(message: impl Into<String>) -> IoError {
    IoError::Format(format!("geojson: {}", message.into()))
}

fn explicit_id(feature: &Feature) -> Result<Option<u64>, IoError> {
    let prop = feature.properties.as_ref().and_then(|p| p.get("id"));
    match (prop, &feature.id) {
        (Some(v), _) => v.as_u64().map(Some).ok_or_else(|| err(format!("id property {v} is not a non-negative integer"))),
        (None, Some(Id::Number(n))) => {
            n.as_u64().map(Some).ok_or_else(|| err(format!("feature id {n} is not a non-negative integer")))
        }
        (None, Some(Id::String(s))) => {
            s.parse::<u64>().map(Some).map_err(|_| err(format!("feature id '{s}' is not a non-negative integer")))
        }
        (None, None) => Ok(None),
    }
}

fn directed(props: Option<&JsonObject>) -> Result<bool, IoError> {
    match props.and_then(|p| p.get("directed")) {
        None | Some(JsonValue::Null) => Ok(false),
        Some(JsonValue::Bool(b)) => Ok(*b),
        Some(v) => match v.as_u64() {
            Some(0) => Ok(false),
            Some(1) => Ok(true),
            _ => Err(err(format!("directed must be a boolean or 0/1, found {v}"))),
        },
    }
}

fn xy(p: &Position) -> Result<(f64, f64), IoError> {
    let s = p.as_slice();
    if s.len() < 2 || !s[0].is_finite() || !s[1].is_finite() {
        return Err(err("positions need two finite coordinates"));
    }
    // normalise -0.0 so coordinate matching is by value
    Ok((s[0] + 0.0, s[1] + 0.0))
}

struct Line {
    id: Option<u64>,
    kind: EdgeKind,
    vertices: Vec<(f64, f64)>,
}

pub fn parse_geojson(text: &str) -> Result<(Vec<GeoNode>, Vec<RawEdge>), IoError> {
    let gj: GeoJson = text.parse().map_err(|e: geojson::Error| err(e.to_string()))?;
    let features = match gj {
        GeoJson::FeatureCollection(fc) => fc.features,
        GeoJson::Feature(f) => vec![f],
        GeoJson::Geometry(_) => return Err(err("expected a Feature or FeatureCollection")),
    };

    let mut points: Vec<(Option<u64>, (f64, f64))> = vec![];
    let mut lines: Vec<Line> = vec![];
    for f in &features {
        let Some(geom) = &f.geometry else { continue };
        match &geom.value {
            GeometryValue::Point { coordinates } => points.push((explicit_id(f)?, xy(coordinates)?)),
            GeometryValue::LineString { coordinates } => lines.push(Line {
                id: explicit_id(f)?,
                kind: if directed(f.properties.as_ref())? { EdgeKind::Directed } else { EdgeKind::Undirected },
                vertices: coordinates.iter().map(xy).collect::<Result<_, _>>()?,
            }),
            GeometryValue::MultiLineString { coordinates } => {
                let kind = if directed(f.properties.as_ref())? { EdgeKind::Directed } else { EdgeKind::Undirected };
                for part in coordinates {
                    lines.push(Line { id: None, kind, vertices: part.iter().map(xy).collect::<Result<_, _>>()? });
                }
            }
            _ => return Err(err("only Point, LineString and MultiLineString geometries are supported")),
        }
    }

    let mut next_node = points.iter().filter_map(|p| p.0).max().map_or(1, |m| m.saturating_add(1));
    let mut nodes = vec![];
    let mut by_coord: HashMap<(u64, u64), u64> = HashMap::new();
    for (id, (x, y)) in points {
        let id = match id {
            Some(id) => id,
            None => {
                next_node += 1;
                next_node - 1
            }
        };
        by_coord.entry((x.to_bits(), y.to_bits())).or_insert(id);
        nodes.push(GeoNode { id: NodeId(id), x, y });
    }

    let mut next_edge = lines
        .iter()
        .filter(|l| l.vertices.len() == 2)
        .filter_map(|l| l.id)
        .max()
        .map_or(1, |m| m.saturating_add(1));
    let mut edges = vec![];
    for line in &lines {
        if line.vertices.len() < 2 {
            return Err(err("a line needs at least two vertices"));
        }
        let mut ids = vec![];
        for &(x, y) in &line.vertices {
            let id = *by_coord.entry((x.to_bits(), y.to_bits())).or_insert_with(|| {
                next_node += 1;
                nodes.push(GeoNode { id: NodeId(next_node - 1), x, y });
                next_node - 1
            });
            ids.push(id);
        }
        for w in ids.windows(2) {
            let id = match (line.id, line.vertices.len()) {
                (Some(id), 2) => id,
                _ => {
                    next_edge += 1;
                    next_edge - 1
                }
            };
            edges.push(RawEdge { id: EdgeId(id), tail: NodeId(w[0]), head: NodeId(w[1]), kind: line.kind });
        }
    }
    Ok((nodes, edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_and_split_lines() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"id":10},"geometry":{"type":"Point","coordinates":[0,0]}},
            {"type":"Feature","properties":{"id":11},"geometry":{"type":"Point","coordinates":[3,4]}},
            {"type":"Feature","properties":{"id":5},"geometry":{"type":"LineString","coordinates":[[0,0],[3,4]]}},
            {"type":"Feature","properties":{"directed":true},"geometry":{"type":"LineString","coordinates":[[3,4],[6,4],[6,0]]}}
        ]}"#;
        let (nodes, edges) = parse_geojson(text).unwrap();
        assert_eq!(nodes.len(), 4);
        assert_eq!(nodes[2], GeoNode::new(12, 6.0, 4.0));
        assert_eq!(edges[0], RawEdge::undirected(5, 10, 11));
        assert_eq!(edges[1], RawEdge::directed(6, 11, 12));
        assert_eq!(edges[2], RawEdge::directed(7, 12, 13));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_geojson("{").is_err());
        assert!(parse_geojson(r#"{"type":"Point","coordinates":[0,0]}"#).is_err());
        let poly = r#"{"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[0,1],[0,0]]]}}"#;
        assert!(parse_geojson(poly).is_err());
        let neg = r#"{"type":"Feature","properties":{"id":-1},"geometry":{"type":"Point","coordinates":[0,0]}}"#;
        assert!(parse_geojson(neg).is_err());
    }
}
