//! Per-node covariate tables and their five-number summaries.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geograph::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CovariateError {
    #[error("duplicate covariate column '{0}'")]
    DuplicateColumn(String),
    #[error("duplicate row for node {0}")]
    DuplicateNode(NodeId),
    #[error("row for node {node} has {got} values, expected {expected}")]
    RowWidth { node: NodeId, got: usize, expected: usize },
}

/// Raw covariate values keyed by node id. Values stay textual so the same
/// column can serve numeric and categorical terms; empty, `NA` and `NaN`
/// cells are missing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CovariateTable {
    names: Vec<String>,
    rows: BTreeMap<NodeId, Vec<String>>,
}

impl CovariateTable {
    pub fn new(names: Vec<String>) -> Result<Self, CovariateError> {
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(CovariateError::DuplicateColumn(n.clone()));
            }
        }
        Ok(CovariateTable { names, rows: BTreeMap::new() })
    }

    pub fn insert(&mut self, node: NodeId, values: Vec<String>) -> Result<(), CovariateError> {
        if values.len() != self.names.len() {
            return Err(CovariateError::RowWidth { node, got: values.len(), expected: self.names.len() });
        }
        if self.rows.contains_key(&node) {
            return Err(CovariateError::DuplicateNode(node));
        }
        self.rows.insert(node, values);
        Ok(())
    }

    /// Builds a table from numeric columns.
    pub fn from_numeric(columns: &[(&str, &[f64])], nodes: &[NodeId]) -> Result<Self, CovariateError> {
        let mut t = CovariateTable::new(columns.iter().map(|c| c.0.to_string()).collect())?;
        for (i, &node) in nodes.iter().enumerate() {
            t.insert(node, columns.iter().map(|c| c.1[i].to_string()).collect())?;
        }
        Ok(t)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (NodeId, &[String])> {
        self.rows.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Raw cell; `None` when the node or column is absent or the cell is missing.
    pub fn get(&self, node: NodeId, name: &str) -> Option<&str> {
        let j = self.column_index(name)?;
        let v = self.rows.get(&node)?[j].as_str();
        (!is_missing(v)).then_some(v)
    }

    pub fn numeric(&self, node: NodeId, name: &str) -> Option<f64> {
        self.get(node, name)?.trim().parse::<f64>().ok().filter(|v| v.is_finite())
    }
}

pub fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "NaN" | "nan")
}

/// Type-7 sample quantile: linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSummary {
    pub name: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    /// Non-missing numeric cells.
    pub count: usize,
}

pub const SUMMARY_HEADER: [&str; 7] = ["covariate", "Min", "1st Q", "Median", "Mean", "3rd Q", "Max"];

pub fn summarize_values(name: &str, values: &[f64]) -> CovariateSummary {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    CovariateSummary {
        name: name.to_string(),
        min: v.first().copied().unwrap_or(f64::NAN),
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        mean,
        q3: quantile(&v, 0.75),
        max: v.last().copied().unwrap_or(f64::NAN),
        count: v.len(),
    }
}

/// One summary per column that holds at least one numeric value.
pub fn summarize(table: &CovariateTable) -> Vec<CovariateSummary> {
    table
        .names()
        .iter()
        .enumerate()
        .filter_map(|(j, name)| {
            let values: Vec<f64> = table
                .rows
                .values()
                .filter_map(|r| r[j].trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .collect();
            (!values.is_empty()).then(|| summarize_values(name, &values))
        })
        .collect()
}
