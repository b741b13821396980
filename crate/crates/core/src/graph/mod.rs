//! Weighted undirected graphs and their Laplacians.
//!
//! A [`WeightedGraph`] is a simple graph with strictly positive edge weights.
//! Edges are stored normalized (`u < v`) and sorted, so two graphs with the
//! same edge set compare equal regardless of construction order.

mod generate;
mod io;

pub use generate::{generate, Family};
pub use io::{format_sig17, parse_graph};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One undirected edge with `u < v` and a positive weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    pub fn key(&self) -> (usize, usize) {
        (self.u, self.v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Builds a graph, normalizing every edge to `u < v`.
    ///
    /// Rejects self-loops, duplicate pairs, out-of-range nodes and weights
    /// that are not strictly positive and finite.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(Error::domain("graph must have at least one node"));
        }
        let mut out = Vec::new();
        for (u, v, w) in edges {
            out.push(check_edge(n, u as i64, v as i64, w, None)?);
        }
        out.sort_by_key(Edge::key);
        if let Some(pair) = out.windows(2).find(|p| p[0].key() == p[1].key()) {
            return Err(Error::format(
                None,
                format!("duplicate edge ({}, {})", pair[0].u, pair[0].v),
            ));
        }
        Ok(Self { n, edges: out })
    }

    /// Graph on `n` nodes with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    /// Unit weight on every listed pair.
    pub fn unit_weighted(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, pairs.iter().map(|&(u, v)| (u, v, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let key = (u.min(v), u.max(v));
        self.edges
            .binary_search_by_key(&key, Edge::key)
            .ok()
            .map(|i| self.edges[i].w)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Weighted degrees `d_i`, the sum of weights of edges incident to `i`.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.u] += e.w;
            d[e.v] += e.w;
        }
        d
    }

    /// `L = Δ − A`. Each diagonal entry is accumulated from the same
    /// weights that fill its row, so rows sum to zero up to assembly
    /// round-off.
    pub fn laplacian(&self) -> LaplacianMatrix {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for e in &self.edges {
            m[(e.u, e.v)] -= e.w;
            m[(e.v, e.u)] -= e.w;
            m[(e.u, e.u)] += e.w;
            m[(e.v, e.v)] += e.w;
        }
        LaplacianMatrix {
            degrees: self.degrees(),
            matrix: m,
        }
    }

    /// Network addition: the edge union, summing weights of shared edges.
    /// The Laplacian of the result is the sum of the two Laplacians.
    pub fn add(&self, other: &WeightedGraph) -> Result<WeightedGraph> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: other.n,
            });
        }
        let (a, b) = (&self.edges, &other.edges);
        let (mut i, mut j) = (0, 0);
        let mut edges = Vec::with_capacity(a.len() + b.len());
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.key() == y.key() => {
                    i += 1;
                    j += 1;
                    Edge { w: x.w + y.w, ..*x }
                }
                (Some(x), Some(y)) if x.key() < y.key() => {
                    i += 1;
                    *x
                }
                (Some(x), None) => {
                    i += 1;
                    *x
                }
                (_, Some(y)) => {
                    j += 1;
                    *y
                }
                (None, None) => unreachable!(),
            };
            edges.push(next);
        }
        Ok(WeightedGraph { n: self.n, edges })
    }

    /// Network scaling: multiplies every weight by `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Result<WeightedGraph> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!(
                "scale factor must be positive and finite, got {alpha}"
            )));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { w: alpha * e.w, ..*e })
            .collect();
        Ok(WeightedGraph { n: self.n, edges })
    }

    /// Node relabeling: node `i` becomes `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<WeightedGraph> {
        if perm.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: perm.len(),
            });
        }
        Self::new(
            self.n,
            self.edges.iter().map(|e| (perm[e.u], perm[e.v], e.w)),
        )
    }

    /// True when the graph has a single connected component. Weights are
    /// ignored; a one-node graph is connected.
    pub fn is_connected(&self) -> bool {
        components(self.n, self.edges.iter().map(|e| (e.u, e.v))) == 1
    }

    /// Weighted spanning-tree count `τ = Σ_T Π_{e∈T} w(e)`, via the
    /// determinant of the Laplacian with row and column 0 removed.
    pub fn spanning_tree_count(&self) -> f64 {
        self.spanning_tree_count_deleting(0)
    }

    /// As [`spanning_tree_count`](Self::spanning_tree_count) but deleting
    /// row and column `index`. The result does not depend on `index`.
    pub fn spanning_tree_count_deleting(&self, index: usize) -> f64 {
        let n = self.n;
        if n == 1 {
            return 1.0;
        }
        let lap = self.laplacian();
        let reduced = lap.matrix.clone().remove_row(index).remove_column(index);
        reduced.lu().determinant().max(0.0)
    }
}

/// Number of connected components of the graph on `n` nodes with the given
/// edge pairs.
pub(crate) fn components(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut count = n;
    for (u, v) in pairs {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            count -= 1;
        }
    }
    count
}

pub(crate) fn check_edge(n: usize, u: i64, v: i64, w: f64, line: Option<usize>) -> Result<Edge> {
    for idx in [u, v] {
        if idx < 0 || idx as usize >= n {
            return Err(Error::Index { line, index: idx, n });
        }
    }
    if u == v {
        return Err(Error::format(line, format!("self-loop on node {u}")));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Weight { line, value: w });
    }
    let (u, v) = (u.min(v) as usize, u.max(v) as usize);
    Ok(Edge { u, v, w })
}

/// Dense Laplacian `Δ − A` together with the degree vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    matrix: DMatrix<f64>,
    degrees: Vec<f64>,
}

impl LaplacianMatrix {
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Builds a Laplacian from a fixed edge list and a weight vector that
    /// may contain zeros. Used by the weight-allocation solver, whose
    /// iterates can sit on the boundary of the simplex.
    pub(crate) fn from_weights(n: usize, pairs: &[(usize, usize)], weights: &[f64]) -> Self {
        let mut m = DMatrix::zeros(n, n);
        let mut degrees = vec![0.0; n];
        for (&(u, v), &w) in pairs.iter().zip(weights) {
            m[(u, v)] -= w;
            m[(v, u)] -= w;
            m[(u, u)] += w;
            m[(v, v)] += w;
            degrees[u] += w;
            degrees[v] += w;
        }
        LaplacianMatrix { matrix: m, degrees }
    }
}

/// Centering matrix `M_n = I − J/n`.
pub fn centering_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_element(n, n, -1.0 / n as f64);
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    m
}
