//! Network design: weight allocation on a fixed topology, brute-force
//! rewiring over graphs with a given edge count, and edge augmentation with
//! its interlacing lower bound.

mod augment;
mod rewire;
mod weights;

pub use augment::{
    exhaustive_augment, fundamental_limit, greedy_augment, interlacing_holds, AugmentStrategy,
    AugmentationReport, Candidate, EXHAUSTIVE_LIMIT,
};
pub use rewire::{
    canonical_form, enumerate_connected, rewire_bruteforce, CanonicalGraph, RewireEntry,
    RewireOptions, RewireResult, MAX_REWIRE_NODES,
};
pub use weights::{optimize_weights, project_simplex, SolverSettings, WeightAllocationResult};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{components, WeightedGraph};

/// A fixed set of candidate edges whose weights are to be chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    /// Normalizes and sorts the pairs. The topology must be simple and
    /// connected when every edge carries weight.
    pub fn new(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("a topology needs at least two nodes"));
        }
        let mut edges = Vec::with_capacity(pairs.len());
        for &(u, v) in pairs {
            if u >= n || v >= n {
                return Err(Error::Index {
                    line: None,
                    index: u.max(v) as i64,
                    n,
                });
            }
            if u == v {
                return Err(Error::format(None, format!("self-loop at node {u}")));
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::format(None, format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }
        if components(n, edges.iter().copied()) != 1 {
            return Err(Error::Connectivity {
                lambda2: 0.0,
                zero_tol: 0.0,
            });
        }
        Ok(Self { n, edges })
    }

    /// The edge set of `g`, ignoring its weights.
    pub fn of_graph(g: &WeightedGraph) -> Result<Self> {
        let pairs: Vec<_> = g.edges().iter().map(|e| e.key()).collect();
        Self::new(g.n(), &pairs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// The weighted graph with the given weights; zero-weight edges are
    /// dropped.
    pub fn with_weights(&self, weights: &[f64]) -> Result<WeightedGraph> {
        if weights.len() != self.edges.len() {
            return Err(Error::Dimension {
                expected: self.edges.len(),
                found: weights.len(),
            });
        }
        WeightedGraph::new(
            self.n,
            self.edges
                .iter()
                .zip(weights)
                .filter(|(_, &w)| w != 0.0)
                .map(|(&(u, v), &w)| (u, v, w)),
        )
    }

    /// Every edge at weight `1/m`.
    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.m() as f64; self.m()]
    }
}
