//! Poisson point patterns on graphs: per edge a Poisson(λ_e·ℓ_e) count of
//! events placed uniformly along the segment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::geograph::GeoGraph;
use crate::pointpattern::{Event, PointPattern};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("edge {edge} has invalid intensity {value}")]
    InvalidIntensity { edge: usize, value: f64 },
    #[error("expected {expected} per-edge intensities, got {got}")]
    WrongLength { expected: usize, got: usize },
}

/// How node intensities are turned into an edge intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeAggregation {
    /// Mean of the two endpoint intensities.
    #[default]
    Mean,
    Tail,
    Head,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeIntensitySpec {
    Constant(f64),
    /// One intensity per edge in graph edge order.
    PerEdge(Vec<f64>),
    /// exp(η_v) per node (graph node order), aggregated to edges.
    LogLinear { eta: Vec<f64>, aggregation: EdgeAggregation },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub intensity: EdgeIntensitySpec,
    pub seed: u64,
}

impl SimSpec {
    /// Per-edge intensities in graph edge order.
    pub fn edge_intensities(&self, graph: &GeoGraph) -> Result<Vec<f64>, SimError> {
        let m = graph.edge_count();
        let values = match &self.intensity {
            EdgeIntensitySpec::Constant(c) => vec![*c; m],
            EdgeIntensitySpec::PerEdge(v) => {
                if v.len() != m {
                    return Err(SimError::WrongLength { expected: m, got: v.len() });
                }
                v.clone()
            }
            EdgeIntensitySpec::LogLinear { eta, aggregation } => {
                if eta.len() != graph.node_count() {
                    return Err(SimError::WrongLength { expected: graph.node_count(), got: eta.len() });
                }
                (0..m)
                    .map(|k| {
                        let (t, h) = graph.endpoints(k);
                        match aggregation {
                            EdgeAggregation::Mean => 0.5 * (eta[t].exp() + eta[h].exp()),
                            EdgeAggregation::Tail => eta[t].exp(),
                            EdgeAggregation::Head => eta[h].exp(),
                        }
                    })
                    .collect()
            }
        };
        if let Some((edge, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(SimError::InvalidIntensity { edge, value });
        }
        Ok(values)
    }
}

/// Replicate 0 of `spec`.
pub fn simulate(graph: &GeoGraph, spec: &SimSpec) -> Result<PointPattern, SimError> {
    simulate_replicate(graph, spec, 0)
}

/// Replicate `index`: stream `index` of the ChaCha generator keyed by the
/// seed, so every replicate is reproducible on its own.
pub fn simulate_replicate(graph: &GeoGraph, spec: &SimSpec, index: u64) -> Result<PointPattern, SimError> {
    let lambda = spec.edge_intensities(graph)?;
    Ok(draw(graph, &lambda, spec.seed, index))
}

/// Per-edge event counts of replicates `0..n`, computed in parallel; equal
/// to the counts behind `simulate_replicate`.
pub fn replicate_counts(graph: &GeoGraph, spec: &SimSpec, n: u64) -> Result<Vec<Vec<usize>>, SimError> {
    let lambda = spec.edge_intensities(graph)?;
    Ok((0..n).into_par_iter().map(|r| counts(graph, &lambda, &mut rng_for(spec.seed, r))).collect())
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
    }
}

fn counts(graph: &GeoGraph, lambda: &[f64], rng: &mut ChaCha8Rng) -> Vec<usize> {
    graph.edges().iter().zip(lambda).map(|(e, &l)| poisson(rng, l * e.length)).collect()
}

fn draw(graph: &GeoGraph, lambda: &[f64], seed: u64, index: u64) -> PointPattern {
    let mut rng = rng_for(seed, index);
    // counts first, so `replicate_counts` sees the same draws
    let per_edge = counts(graph, lambda, &mut rng);
    let nodes = graph.nodes();
    let mut events = vec![];
    for (k, &n) in per_edge.iter().enumerate() {
        let (t, h) = graph.endpoints(k);
        let (a, b) = (&nodes[t], &nodes[h]);
        for _ in 0..n {
            let u: f64 = rng.random();
            events.push(Event::new(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)));
        }
    }
    PointPattern::new(events)
}
