//! Structured network regression: node-level design assembly from a graph,
//! its intensities and covariates, model fitting, prediction, smooth-effect
//! curves and model comparison.

mod analysis;
mod config;
mod design;

pub use analysis::{
    compare_models, evaluate_smooth, fit_snr, lattice_effects, predict, ComparisonRow, ComparisonTable,
    RegionEffect, SmoothPoint, SnrFit, DEFAULT_LEVELS,
};
pub use config::{parse_model_config, ConfigError, ModelConfig, MrfSource};
pub use design::{build_design, DesignEncoder, NodeRow, SnrDesign};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geograph::{GraphError, NodeId};
use crate::intensity::{IntensityError, IntensityMode};
use crate::mmfit::{Family, FitError};
use crate::smooth::{LatticeAdjacency, SmoothError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SnrError {
    #[error("covariate '{name}' is missing for {} node(s): {}", .nodes.len(), preview(.nodes))]
    MissingCovariate { name: String, nodes: Vec<NodeId> },
    #[error("covariate '{name}' is not numeric at node {node}: '{value}'")]
    NotNumeric { name: String, node: NodeId, value: String },
    #[error("unknown covariate '{0}'")]
    UnknownCovariate(String),
    #[error("reference level '{level}' of term '{term}' does not occur in the data")]
    MissingReference { term: String, level: String },
    #[error("level '{level}' of term '{term}' was not seen when fitting")]
    UnseenLevel { term: String, level: String },
    #[error("'{0}' appears in more than one term")]
    DuplicateTerm(String),
    #[error("no node passes the exclusion rule")]
    EmptyDesign,
    #[error("node {0} has no lattice region")]
    MissingRegion(NodeId),
    #[error("region '{0}' is not in the lattice adjacency")]
    UnknownRegion(String),
    #[error("term '{0}' is not a smooth of this model")]
    UnknownTerm(String),
    #[error("intensity table was computed on a different graph")]
    GraphMismatch,
    #[error("models were fitted to different responses")]
    ResponseMismatch,
    #[error("interval level {0} must lie in (0, 1)")]
    InvalidLevel(f64),
    #[error("smooth '{term}': {source}")]
    Smooth { term: String, source: SmoothError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Intensity(#[from] IntensityError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

fn preview(nodes: &[NodeId]) -> String {
    let mut s: Vec<String> = nodes.iter().take(10).map(|n| n.to_string()).collect();
    if nodes.len() > 10 {
        s.push("...".into());
    }
    s.join(", ")
}

/// What the regression models at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ResponseRoute {
    /// Total incident event count with offset log(total incident length).
    #[default]
    Counts,
    /// Nodewise mean intensity λ(v), no offset.
    Intensity,
}

impl ResponseRoute {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseRoute::Counts => "counts",
            ResponseRoute::Intensity => "intensity",
        }
    }
}

impl fmt::Display for ResponseRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResponseRoute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "counts" => Ok(ResponseRoute::Counts),
            "intensity" => Ok(ResponseRoute::Intensity),
            other => Err(format!("unknown response '{other}' (expected counts or intensity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FixedTerm {
    Numeric(String),
    Categorical { name: String, reference: String },
}

impl FixedTerm {
    pub fn name(&self) -> &str {
        match self {
            FixedTerm::Numeric(n) | FixedTerm::Categorical { name: n, .. } => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphStatTerm {
    /// Degree in the incident-edge class of the intensity mode; the
    /// categorical form uses degree 1 as the reference level.
    Degree { categorical: bool },
    Betweenness,
    ComponentSize,
}

impl GraphStatTerm {
    pub fn name(&self) -> &'static str {
        match self {
            GraphStatTerm::Degree { .. } => "degree",
            GraphStatTerm::Betweenness => "betweenness",
            GraphStatTerm::ComponentSize => "component_size",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothTerm {
    pub covariate: String,
    pub degree: usize,
    pub inner_knots: usize,
    pub order: usize,
    /// Spline domain; the observed range when absent.
    pub domain: Option<(f64, f64)>,
}

impl SmoothTerm {
    pub fn new(covariate: &str) -> Self {
        SmoothTerm {
            covariate: covariate.to_string(),
            degree: 3,
            inner_knots: 20,
            order: 2,
            domain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeTerm {
    pub adjacency: LatticeAdjacency,
    pub regions: BTreeMap<NodeId, String>,
}

pub const LATTICE_TERM: &str = "mrf";

#[derive(Debug, Clone, PartialEq)]
pub struct SnrSpec {
    pub name: String,
    pub response: ResponseRoute,
    pub mode: IntensityMode,
    pub family: Family,
    pub fixed: Vec<FixedTerm>,
    pub graph_stats: Vec<GraphStatTerm>,
    pub smooths: Vec<SmoothTerm>,
    pub lattice: Option<LatticeTerm>,
    /// Also drop nodes whose intensity is zero; undefined nodes are always
    /// dropped.
    pub exclude_zero: bool,
}

impl SnrSpec {
    /// Poisson count model on undirected intensities with only an intercept.
    pub fn new(name: &str) -> Self {
        SnrSpec {
            name: name.to_string(),
            response: ResponseRoute::Counts,
            mode: IntensityMode::Undirected,
            family: Family::poisson(),
            fixed: vec![],
            graph_stats: vec![],
            smooths: vec![],
            lattice: None,
            exclude_zero: true,
        }
    }

    pub fn validate(&self) -> Result<(), SnrError> {
        let mut seen: Vec<&str> = vec![];
        let names = self
            .fixed
            .iter()
            .map(|f| f.name())
            .chain(self.smooths.iter().map(|s| s.covariate.as_str()))
            .chain(self.graph_stats.iter().map(|g| g.name()));
        for n in names {
            if seen.contains(&n) {
                return Err(SnrError::DuplicateTerm(n.to_string()));
            }
            seen.push(n);
        }
        Ok(())
    }

    /// Covariate columns the spec reads from the covariate table.
    pub fn covariates(&self) -> Vec<&str> {
        self.fixed.iter().map(|f| f.name()).chain(self.smooths.iter().map(|s| s.covariate.as_str())).collect()
    }
}
