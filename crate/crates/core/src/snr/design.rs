use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use super::{FixedTerm, GraphStatTerm, ResponseRoute, SnrError, SnrSpec, LATTICE_TERM};
use crate::covariates::CovariateTable;
use crate::geograph::{betweenness, connected_components, GeoGraph, NodeId};
use crate::intensity::IntensityTable;
use crate::mmfit::ModelDesign;
use crate::smooth::{bspline_basis, difference_penalty, mrf_penalty, Centering, PenaltyMatrix, SplineConfig};

/// Everything the predictor needs about one node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeRow {
    pub id: Option<NodeId>,
    /// Additive term on the link scale (log exposure for count models).
    pub offset: f64,
    pub values: BTreeMap<String, String>,
    pub degree: usize,
    pub betweenness: f64,
    pub component_size: usize,
    pub region: Option<String>,
}

impl NodeRow {
    pub fn new(offset: f64) -> Self {
        NodeRow { offset, ..NodeRow::default() }
    }

    pub fn with(mut self, name: &str, value: impl ToString) -> Self {
        self.values.insert(name.to_string(), value.to_string());
        self
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_region(mut self, region: &str) -> Self {
        self.region = Some(region.to_string());
        self
    }

    fn numeric(&self, name: &str) -> Result<f64, SnrError> {
        let raw = self.values.get(name).ok_or_else(|| SnrError::MissingCovariate {
            name: name.to_string(),
            nodes: self.id.into_iter().collect(),
        })?;
        raw.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| SnrError::NotNumeric {
            name: name.to_string(),
            node: self.id.unwrap_or(NodeId(0)),
            value: raw.clone(),
        })
    }

    fn level(&self, name: &str) -> Result<&str, SnrError> {
        self.values.get(name).map(|s| s.trim()).ok_or_else(|| SnrError::MissingCovariate {
            name: name.to_string(),
            nodes: self.id.into_iter().collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum FixedEncoding {
    Numeric(String),
    Categorical { name: String, reference: String, levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
enum GraphEncoding {
    DegreeLevels(Vec<usize>),
    DegreeNumeric,
    Betweenness,
    ComponentSize,
}

#[derive(Debug, Clone, PartialEq)]
struct SmoothEncoding {
    covariate: String,
    config: SplineConfig,
    centering: Centering,
    penalty: PenaltyMatrix,
}

#[derive(Debug, Clone, PartialEq)]
struct LatticeEncoding {
    regions: Vec<String>,
    centering: Centering,
    penalty: PenaltyMatrix,
}

/// Frozen term encodings (levels, spline domains, centering constraints)
/// learned from the fitting rows and reused for prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignEncoder {
    fixed: Vec<FixedEncoding>,
    graph: Vec<GraphEncoding>,
    smooths: Vec<SmoothEncoding>,
    lattice: Option<LatticeEncoding>,
}

pub(crate) struct Encoded {
    pub fixed: DMatrix<f64>,
    pub fixed_names: Vec<String>,
    pub graph: DMatrix<f64>,
    pub graph_names: Vec<String>,
    pub blocks: Vec<(String, DMatrix<f64>)>,
}

fn level_order(levels: &mut [String]) {
    let numeric: Option<Vec<f64>> = levels.iter().map(|l| l.parse::<f64>().ok()).collect();
    if numeric.is_some() {
        levels.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    } else {
        levels.sort();
    }
}

impl DesignEncoder {
    fn learn(rows: &[NodeRow], spec: &SnrSpec) -> Result<Self, SnrError> {
        let mut fixed = vec![];
        for term in &spec.fixed {
            fixed.push(match term {
                FixedTerm::Numeric(n) => FixedEncoding::Numeric(n.clone()),
                FixedTerm::Categorical { name, reference } => {
                    let seen: BTreeSet<String> =
                        rows.iter().map(|r| r.level(name).map(str::to_string)).collect::<Result<_, _>>()?;
                    if !seen.contains(reference.trim()) {
                        return Err(SnrError::MissingReference { term: name.clone(), level: reference.clone() });
                    }
                    let mut levels: Vec<String> = seen.into_iter().filter(|l| l != reference.trim()).collect();
                    level_order(&mut levels);
                    FixedEncoding::Categorical { name: name.clone(), reference: reference.trim().to_string(), levels }
                }
            });
        }

        let mut graph = vec![];
        for term in &spec.graph_stats {
            graph.push(match term {
                GraphStatTerm::Degree { categorical: true } => {
                    let seen: BTreeSet<usize> = rows.iter().map(|r| r.degree).collect();
                    if !seen.contains(&1) {
                        return Err(SnrError::MissingReference { term: "degree".into(), level: "1".into() });
                    }
                    GraphEncoding::DegreeLevels(seen.into_iter().filter(|&d| d != 1).collect())
                }
                GraphStatTerm::Degree { categorical: false } => GraphEncoding::DegreeNumeric,
                GraphStatTerm::Betweenness => GraphEncoding::Betweenness,
                GraphStatTerm::ComponentSize => GraphEncoding::ComponentSize,
            });
        }

        let mut smooths = vec![];
        for term in &spec.smooths {
            let x: Vec<f64> = rows.iter().map(|r| r.numeric(&term.covariate)).collect::<Result<_, _>>()?;
            let (lo, hi) = term.domain.unwrap_or_else(|| {
                let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            });
            let wrap = |source| SnrError::Smooth { term: term.covariate.clone(), source };
            let config = SplineConfig::new(term.degree, term.inner_knots, term.order, lo, hi).map_err(wrap)?;
            let basis = bspline_basis(&x, &config).map_err(wrap)?;
            let centering = Centering::from_basis(&basis).map_err(wrap)?;
            let penalty =
                centering.constrain_penalty(&difference_penalty(config.basis_count(), term.order).map_err(wrap)?);
            smooths.push(SmoothEncoding { covariate: term.covariate.clone(), config, centering, penalty });
        }

        let lattice = match &spec.lattice {
            None => None,
            Some(l) => {
                let regions = l.adjacency.regions().to_vec();
                let basis = region_indicator(&regions, rows)?;
                let wrap = |source| SnrError::Smooth { term: LATTICE_TERM.into(), source };
                let centering = Centering::from_basis(&basis).map_err(wrap)?;
                let penalty = centering.constrain_penalty(&mrf_penalty(&l.adjacency));
                Some(LatticeEncoding { regions, centering, penalty })
            }
        };

        Ok(DesignEncoder { fixed, graph, smooths, lattice })
    }

    pub(crate) fn encode(&self, rows: &[NodeRow]) -> Result<Encoded, SnrError> {
        let n = rows.len();
        let mut fixed_cols: Vec<DVector<f64>> = vec![DVector::from_element(n, 1.0)];
        let mut fixed_names = vec!["(Intercept)".to_string()];
        for enc in &self.fixed {
            match enc {
                FixedEncoding::Numeric(name) => {
                    let v: Vec<f64> = rows.iter().map(|r| r.numeric(name)).collect::<Result<_, _>>()?;
                    fixed_cols.push(DVector::from_vec(v));
                    fixed_names.push(name.clone());
                }
                FixedEncoding::Categorical { name, reference, levels } => {
                    let obs: Vec<&str> = rows.iter().map(|r| r.level(name)).collect::<Result<_, _>>()?;
                    if let Some(bad) = obs.iter().find(|l| **l != reference && !levels.iter().any(|x| x == *l)) {
                        return Err(SnrError::UnseenLevel { term: name.clone(), level: bad.to_string() });
                    }
                    for level in levels {
                        fixed_cols.push(DVector::from_fn(n, |i, _| f64::from(u8::from(obs[i] == level))));
                        fixed_names.push(format!("{name}={level}"));
                    }
                }
            }
        }

        let mut graph_cols: Vec<DVector<f64>> = vec![];
        let mut graph_names = vec![];
        for enc in &self.graph {
            match enc {
                GraphEncoding::DegreeLevels(levels) => {
                    if let Some(r) = rows.iter().find(|r| r.degree != 1 && !levels.contains(&r.degree)) {
                        return Err(SnrError::UnseenLevel { term: "degree".into(), level: r.degree.to_string() });
                    }
                    for &d in levels {
                        graph_cols.push(DVector::from_fn(n, |i, _| f64::from(u8::from(rows[i].degree == d))));
                        graph_names.push(format!("degree={d}"));
                    }
                }
                GraphEncoding::DegreeNumeric => {
                    graph_cols.push(DVector::from_fn(n, |i, _| rows[i].degree as f64));
                    graph_names.push("degree".into());
                }
                GraphEncoding::Betweenness => {
                    graph_cols.push(DVector::from_fn(n, |i, _| rows[i].betweenness));
                    graph_names.push("betweenness".into());
                }
                GraphEncoding::ComponentSize => {
                    graph_cols.push(DVector::from_fn(n, |i, _| rows[i].component_size as f64));
                    graph_names.push("component_size".into());
                }
            }
        }

        let mut blocks = vec![];
        for s in &self.smooths {
            let x: Vec<f64> = rows.iter().map(|r| r.numeric(&s.covariate)).collect::<Result<_, _>>()?;
            let basis = bspline_basis(&x, &s.config)
                .map_err(|source| SnrError::Smooth { term: s.covariate.clone(), source })?;
            blocks.push((s.covariate.clone(), s.centering.constrain_basis(&basis)));
        }
        if let Some(l) = &self.lattice {
            blocks.push((LATTICE_TERM.to_string(), l.centering.constrain_basis(&region_indicator(&l.regions, rows)?)));
        }

        Ok(Encoded {
            fixed: columns(n, &fixed_cols),
            fixed_names,
            graph: columns(n, &graph_cols),
            graph_names,
            blocks,
        })
    }

    pub(crate) fn penalties(&self) -> Vec<PenaltyMatrix> {
        self.smooths.iter().map(|s| s.penalty.clone()).chain(self.lattice.iter().map(|l| l.penalty.clone())).collect()
    }

    /// Spline configuration and centering of the smooth on `covariate`.
    pub fn smooth(&self, covariate: &str) -> Option<(&SplineConfig, &Centering)> {
        self.smooths.iter().find(|s| s.covariate == covariate).map(|s| (&s.config, &s.centering))
    }

    pub fn smooth_index(&self, covariate: &str) -> Option<usize> {
        self.smooths.iter().position(|s| s.covariate == covariate)
    }

    /// Lattice regions in coefficient order and the lattice centering.
    pub fn lattice(&self) -> Option<(&[String], &Centering)> {
        self.lattice.as_ref().map(|l| (l.regions.as_slice(), &l.centering))
    }
}

fn region_indicator(regions: &[String], rows: &[NodeRow]) -> Result<DMatrix<f64>, SnrError> {
    let mut basis = DMatrix::zeros(rows.len(), regions.len());
    for (i, r) in rows.iter().enumerate() {
        let region = r.region.as_ref().ok_or(SnrError::MissingRegion(r.id.unwrap_or(NodeId(0))))?;
        let j = regions.iter().position(|x| x == region).ok_or_else(|| SnrError::UnknownRegion(region.clone()))?;
        basis[(i, j)] = 1.0;
    }
    Ok(basis)
}

fn columns(n: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(cols)
    }
}

/// A ready-to-fit design together with the rows and encoder behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrDesign {
    pub spec: SnrSpec,
    pub design: ModelDesign,
    pub encoder: DesignEncoder,
    pub rows: Vec<NodeRow>,
    /// Nodes dropped because their intensity is undefined.
    pub excluded_undefined: usize,
    /// Nodes dropped because their intensity is zero.
    pub excluded_zero: usize,
}

impl SnrDesign {
    pub fn node_ids(&self) -> Vec<NodeId> {
        self.rows.iter().filter_map(|r| r.id).collect()
    }
}

pub fn build_design(
    graph: &GeoGraph,
    table: &IntensityTable,
    covariates: &CovariateTable,
    spec: &SnrSpec,
) -> Result<SnrDesign, SnrError> {
    spec.validate()?;
    if table.graph_fingerprint() != graph.fingerprint() || table.nodes.len() != graph.node_count() {
        return Err(SnrError::GraphMismatch);
    }
    for name in spec.covariates() {
        if covariates.column_index(name).is_none() {
            return Err(SnrError::UnknownCovariate(name.to_string()));
        }
    }

    let wants = |t: GraphStatTerm| spec.graph_stats.iter().any(|g| std::mem::discriminant(g) == std::mem::discriminant(&t));
    let between = wants(GraphStatTerm::Betweenness).then(|| betweenness(graph));
    let comp_size: Option<BTreeMap<NodeId, usize>> = wants(GraphStatTerm::ComponentSize).then(|| {
        connected_components(graph)
            .groups()
            .iter()
            .flat_map(|g| g.iter().map(move |&v| (v, g.len())))
            .collect()
    });

    let mut rows = vec![];
    let mut response = vec![];
    let (mut excluded_undefined, mut excluded_zero) = (0, 0);
    let mut missing: BTreeMap<&str, Vec<NodeId>> = BTreeMap::new();
    for (i, node) in graph.nodes().iter().enumerate() {
        let Some(lambda) = table.node_at(i, spec.mode) else {
            excluded_undefined += 1;
            continue;
        };
        if spec.exclude_zero && lambda == 0.0 {
            excluded_zero += 1;
            continue;
        }
        let incident = spec.mode.incident_edges(graph, i);
        let (y, offset) = match spec.response {
            ResponseRoute::Counts => {
                let count: usize = incident.iter().map(|&k| table.edges[k].count).sum();
                let exposure: f64 = incident.iter().map(|&k| table.edges[k].length).sum();
                (count as f64, exposure.ln())
            }
            ResponseRoute::Intensity => (lambda, 0.0),
        };
        let mut row = NodeRow {
            id: Some(node.id),
            offset,
            degree: incident.len(),
            betweenness: between.as_ref().map_or(0.0, |b| b[&node.id]),
            component_size: comp_size.as_ref().map_or(0, |c| c[&node.id]),
            ..NodeRow::default()
        };
        for name in spec.covariates() {
            match covariates.get(node.id, name) {
                Some(v) => {
                    row.values.insert(name.to_string(), v.to_string());
                }
                None => missing.entry(name).or_default().push(node.id),
            }
        }
        if let Some(l) = &spec.lattice {
            row.region = l.regions.get(&node.id).cloned();
            if row.region.is_none() {
                return Err(SnrError::MissingRegion(node.id));
            }
        }
        rows.push(row);
        response.push(y);
    }
    if let Some((name, nodes)) = missing.into_iter().next() {
        return Err(SnrError::MissingCovariate { name: name.to_string(), nodes });
    }
    if rows.is_empty() {
        return Err(SnrError::EmptyDesign);
    }

    let encoder = DesignEncoder::learn(&rows, spec)?;
    let enc = encoder.encode(&rows)?;
    let offset = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.offset));
    let mut design = ModelDesign::new(DVector::from_vec(response)).with_offset(offset);
    design.fixed = enc.fixed;
    design.fixed_names = enc.fixed_names;
    design.graph_stats = enc.graph;
    design.graph_stat_names = enc.graph_names;
    for ((name, x), k) in enc.blocks.into_iter().zip(encoder.penalties()) {
        design = design.with_block(&name, x, k);
    }

    Ok(SnrDesign { spec: spec.clone(), design, encoder, rows, excluded_undefined, excluded_zero })
}
