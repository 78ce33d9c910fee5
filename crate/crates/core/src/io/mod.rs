//! Text formats: CSV tables for graphs, events, covariates and lattices, a
//! GeoJSON graph reader, the simulation intensity expression, and the CSV
//! writers for every result table.
//!
//! Readers take the whole file as a string and report 1-based line numbers.

mod expr;
mod geojson;

pub use self::expr::{parse_intensity_expr, IntensityExpr, LinearPredictor};
pub use self::geojson::parse_geojson;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::covariates::{CovariateSummary, CovariateTable, SUMMARY_HEADER};
use crate::geograph::{EdgeKind, GeoNode, NodeId, RawEdge};
use crate::intensity::{IntensityMode, IntensityTable};
use crate::mmfit::{CoefficientRow, COEFFICIENT_HEADER};
use crate::pointpattern::{Event, PointPattern};
use crate::smooth::LatticeAdjacency;
use crate::snr::{ComparisonTable, SmoothPoint};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Line { line: u64, message: String },
    #[error("{0}")]
    Format(String),
}

fn at(line: u64, message: impl Into<String>) -> IoError {
    IoError::Line { line, message: message.into() }
}

/// Header and string records of a CSV text. Cells are trimmed.
pub struct Table {
    pub header: Vec<String>,
    /// (line, cells)
    pub records: Vec<(u64, Vec<String>)>,
}

impl Table {
    fn column(&self, name: &str) -> Result<usize, IoError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| at(1, format!("missing column '{name}' (header: {})", self.header.join(","))))
    }
}

pub fn read_table(text: &str) -> Result<Table, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| at(1, e.to_string()))?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(at(1, "a header row is required"));
    }
    let mut records = vec![];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            at(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { header, records })
}

fn parse_u64(line: u64, what: &str, s: &str) -> Result<u64, IoError> {
    s.parse::<u64>().map_err(|_| at(line, format!("{what} '{s}' is not a non-negative integer")))
}

fn parse_f64(line: u64, what: &str, s: &str) -> Result<f64, IoError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| at(line, format!("{what} '{s}' is not a finite number")))
}

/// `id,x,y`
pub fn parse_nodes_csv(text: &str) -> Result<Vec<GeoNode>, IoError> {
    let t = read_table(text)?;
    let (ci, cx, cy) = (t.column("id")?, t.column("x")?, t.column("y")?);
    t.records
        .iter()
        .map(|(line, r)| {
            Ok(GeoNode::new(
                parse_u64(*line, "id", &r[ci])?,
                parse_f64(*line, "x", &r[cx])?,
                parse_f64(*line, "y", &r[cy])?,
            ))
        })
        .collect()
}

/// `id,tail,head,directed` with `directed` in {0,1}
pub fn parse_edges_csv(text: &str) -> Result<Vec<RawEdge>, IoError> {
    let t = read_table(text)?;
    let (ci, ct, ch, cd) = (t.column("id")?, t.column("tail")?, t.column("head")?, t.column("directed")?);
    t.records
        .iter()
        .map(|(line, r)| {
            let (id, tail, head) =
                (parse_u64(*line, "id", &r[ci])?, parse_u64(*line, "tail", &r[ct])?, parse_u64(*line, "head", &r[ch])?);
            match r[cd].as_str() {
                "0" => Ok(RawEdge::undirected(id, tail, head)),
                "1" => Ok(RawEdge::directed(id, tail, head)),
                other => Err(at(*line, format!("directed must be 0 or 1, found '{other}'"))),
            }
        })
        .collect()
}

/// `x,y[,mark]`
pub fn parse_events_csv(text: &str) -> Result<PointPattern, IoError> {
    let t = read_table(text)?;
    let (cx, cy) = (t.column("x")?, t.column("y")?);
    let cm = t.column("mark").ok();
    let events = t
        .records
        .iter()
        .map(|(line, r)| {
            let mark = cm.map(|c| r[c].clone()).filter(|m| !m.is_empty());
            Ok(Event { x: parse_f64(*line, "x", &r[cx])?, y: parse_f64(*line, "y", &r[cy])?, mark })
        })
        .collect::<Result<_, IoError>>()?;
    Ok(PointPattern::new(events))
}

/// `node_id,<covariate>...`
pub fn parse_covariates_csv(text: &str) -> Result<CovariateTable, IoError> {
    let t = read_table(text)?;
    let cid = t.column("node_id")?;
    let names: Vec<String> = t.header.iter().enumerate().filter(|(j, _)| *j != cid).map(|(_, h)| h.clone()).collect();
    let mut table = CovariateTable::new(names).map_err(|e| at(1, e.to_string()))?;
    for (line, r) in &t.records {
        let id = NodeId(parse_u64(*line, "node_id", &r[cid])?);
        let values = r.iter().enumerate().filter(|(j, _)| *j != cid).map(|(_, v)| v.clone()).collect();
        table.insert(id, values).map_err(|e| at(*line, e.to_string()))?;
    }
    Ok(table)
}

/// `region_a,region_b`; regions are all names that appear.
pub fn parse_adjacency_csv(text: &str) -> Result<LatticeAdjacency, IoError> {
    let t = read_table(text)?;
    let (ca, cb) = (t.column("region_a")?, t.column("region_b")?);
    let mut regions: Vec<String> = vec![];
    let mut pairs = vec![];
    for (line, r) in &t.records {
        let (a, b) = (r[ca].clone(), r[cb].clone());
        if a.is_empty() {
            return Err(at(*line, "empty region_a"));
        }
        regions.push(a.clone());
        // a row with an empty region_b declares an isolated region
        if !b.is_empty() {
            regions.push(b.clone());
            pairs.push((a, b));
        }
    }
    regions.sort();
    regions.dedup();
    LatticeAdjacency::from_pairs(regions, pairs).map_err(|e| IoError::Format(e.to_string()))
}

/// `node_id,region_id`
pub fn parse_node_regions_csv(text: &str) -> Result<BTreeMap<NodeId, String>, IoError> {
    let t = read_table(text)?;
    let (cn, cr) = (t.column("node_id")?, t.column("region_id")?);
    let mut out = BTreeMap::new();
    for (line, r) in &t.records {
        let id = NodeId(parse_u64(*line, "node_id", &r[cn])?);
        if r[cr].is_empty() {
            return Err(at(*line, "empty region_id"));
        }
        if out.insert(id, r[cr].clone()).is_some() {
            return Err(at(*line, format!("node {id} mapped twice")));
        }
    }
    Ok(out)
}

/// Serializes rows under `header`.
pub fn write_csv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().from_writer(vec![]);
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn nodes_csv(nodes: &[GeoNode]) -> String {
    write_csv(&["id", "x", "y"], nodes.iter().map(|n| vec![n.id.to_string(), n.x.to_string(), n.y.to_string()]))
}

pub fn edges_csv(edges: &[RawEdge]) -> String {
    write_csv(
        &["id", "tail", "head", "directed"],
        edges.iter().map(|e| {
            let d = if e.kind == EdgeKind::Directed { "1" } else { "0" };
            vec![e.id.to_string(), e.tail.to_string(), e.head.to_string(), d.to_string()]
        }),
    )
}

pub fn events_csv(pattern: &PointPattern) -> String {
    let marked = pattern.events.iter().any(|e| e.mark.is_some());
    let header: &[&str] = if marked { &["x", "y", "mark"] } else { &["x", "y"] };
    write_csv(
        header,
        pattern.events.iter().map(|e| {
            let mut r = vec![e.x.to_string(), e.y.to_string()];
            if marked {
                r.push(e.mark.clone().unwrap_or_default());
            }
            r
        }),
    )
}

pub fn edge_intensity_csv(table: &IntensityTable) -> String {
    write_csv(
        &["edge_id", "count", "length", "intensity"],
        table.edges.iter().map(|e| {
            vec![e.id.to_string(), e.count.to_string(), e.length.to_string(), e.intensity.to_string()]
        }),
    )
}

/// One row per node and mode; undefined intensities leave the value empty.
pub fn node_intensity_csv(table: &IntensityTable, modes: &[IntensityMode]) -> String {
    write_csv(
        &["node_id", "mode", "intensity", "defined"],
        table.nodes.iter().flat_map(|n| {
            modes.iter().map(move |&m| {
                let v = n.get(m);
                vec![
                    n.id.to_string(),
                    m.to_string(),
                    v.map_or(String::new(), |x| x.to_string()),
                    v.is_some().to_string(),
                ]
            })
        }),
    )
}

pub fn coefficients_csv(rows: &[CoefficientRow]) -> String {
    write_csv(
        &COEFFICIENT_HEADER,
        rows.iter().map(|r| {
            vec![
                r.name.clone(),
                r.estimate.to_string(),
                r.std_error.to_string(),
                r.t_value.to_string(),
                r.p_value.to_string(),
            ]
        }),
    )
}

pub fn criteria_csv(table: &ComparisonTable) -> String {
    write_csv(
        &["model", "aic", "bic", "gcv", "edf", "loglik"],
        table.rows.iter().map(|r| {
            let c = &r.criteria;
            vec![
                r.model.clone(),
                c.aic.to_string(),
                c.bic.to_string(),
                c.gcv.to_string(),
                c.edf.to_string(),
                c.loglik.to_string(),
            ]
        }),
    )
}

fn level_tag(level: f64) -> String {
    format!("{}", (level * 100.0).round())
}

/// `x,estimate,std_error` then `lower<L>,upper<L>` per level in percent.
pub fn smooth_csv(points: &[SmoothPoint]) -> String {
    let mut header = vec!["x".to_string(), "estimate".into(), "std_error".into()];
    if let Some(p) = points.first() {
        for (l, _, _) in &p.bands {
            header.push(format!("lower{}", level_tag(*l)));
            header.push(format!("upper{}", level_tag(*l)));
        }
    }
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &header_ref,
        points.iter().map(|p| {
            let mut r = vec![p.x.to_string(), p.estimate.to_string(), p.std_error.to_string()];
            for (_, lo, hi) in &p.bands {
                r.push(lo.to_string());
                r.push(hi.to_string());
            }
            r
        }),
    )
}

pub fn summary_csv(rows: &[CovariateSummary]) -> String {
    write_csv(
        &SUMMARY_HEADER,
        rows.iter().map(|s| {
            vec![
                s.name.clone(),
                s.min.to_string(),
                s.q1.to_string(),
                s.median.to_string(),
                s.mean.to_string(),
                s.q3.to_string(),
                s.max.to_string(),
            ]
        }),
    )
}
