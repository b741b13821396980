//! Exhaustive search over connected graphs with `n` nodes and `m` edges.
//!
//! Isomorphism classes are generated layer by layer: every class with
//! `j + 1` edges arises from some class with `j` edges plus one more edge,
//! so extending each class by each missing edge and deduplicating by
//! canonical form visits every class exactly once.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::{optimize_weights, SolverSettings, Topology};
use crate::error::{Error, Result};
use crate::graph::{components, WeightedGraph};
use crate::measures::{evaluate, Measure};

/// Largest node count accepted by [`rewire_bruteforce`].
pub const MAX_REWIRE_NODES: usize = 8;

/// Canonical representative of an unweighted graph on at most eight nodes.
///
/// `bits` lists the upper triangle of the relabeled adjacency matrix column
/// by column, `(0,1), (0,2), (1,2), (0,3), …`, first pair in the most
/// significant position. The canonical labeling is the one that makes this
/// string smallest among labelings that order nodes by nondecreasing degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalGraph {
    pub n: usize,
    pub bits: u64,
}

fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

impl CanonicalGraph {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let total = pair_count(self.n);
        let mut out = Vec::new();
        let mut idx = 0;
        for j in 1..self.n {
            for i in 0..j {
                if self.bits >> (total - 1 - idx) & 1 == 1 {
                    out.push((i, j));
                }
                idx += 1;
            }
        }
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    fn adjacency(&self) -> [u8; MAX_REWIRE_NODES] {
        let mut adj = [0u8; MAX_REWIRE_NODES];
        for (u, v) in self.edges() {
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        components(self.n, self.edges().into_iter()) == 1
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut d: Vec<usize> = adj[..self.n].iter().map(|a| a.count_ones() as usize).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        d
    }
}

struct Search<'a> {
    n: usize,
    total: usize,
    adj: &'a [u8; MAX_REWIRE_NODES],
    cells: Vec<u32>,
    degree: [u32; MAX_REWIRE_NODES],
    perm: [usize; MAX_REWIRE_NODES],
    best: u64,
}

impl Search<'_> {
    fn run(&mut self, pos: usize, used: u8, prefix: u64) {
        if pos == self.n {
            self.best = self.best.min(prefix);
            return;
        }
        let len = pair_count(pos + 1);
        let best_prefix = self.best >> (self.total - len);
        for v in 0..self.n {
            if used >> v & 1 == 1 || self.degree[v] != self.cells[pos] {
                continue;
            }
            let mut next = prefix;
            for i in 0..pos {
                next = next << 1 | u64::from(self.adj[self.perm[i]] >> v & 1);
            }
            if next > best_prefix {
                continue;
            }
            self.perm[pos] = v;
            self.run(pos + 1, used | 1 << v, next);
        }
    }
}

/// Canonical form of the unweighted graph on `n ≤ 8` nodes with the given
/// edges.
pub fn canonical_form(n: usize, edges: &[(usize, usize)]) -> Result<CanonicalGraph> {
    if n > MAX_REWIRE_NODES || n < 2 {
        return Err(Error::Scale(format!(
            "canonical forms support 2 <= n <= {MAX_REWIRE_NODES}, got {n}"
        )));
    }
    let mut adj = [0u8; MAX_REWIRE_NODES];
    for &(u, v) in edges {
        adj[u] |= 1 << v;
        adj[v] |= 1 << u;
    }
    Ok(canonical_from_adjacency(n, &adj))
}

fn canonical_from_adjacency(n: usize, adj: &[u8; MAX_REWIRE_NODES]) -> CanonicalGraph {
    let mut degree = [0u32; MAX_REWIRE_NODES];
    for v in 0..n {
        degree[v] = adj[v].count_ones();
    }
    let mut cells: Vec<u32> = degree[..n].to_vec();
    cells.sort_unstable();
    let total = pair_count(n);
    let mut search = Search {
        n,
        total,
        adj,
        cells,
        degree,
        perm: [0; MAX_REWIRE_NODES],
        best: if total == 64 { u64::MAX } else { (1u64 << total) - 1 },
    };
    search.run(0, 0, 0);
    CanonicalGraph { n, bits: search.best }
}

fn complement(g: &CanonicalGraph) -> CanonicalGraph {
    let mask = (1u64 << pair_count(g.n)) - 1;
    let flipped = CanonicalGraph {
        n: g.n,
        bits: !g.bits & mask,
    };
    canonical_from_adjacency(g.n, &flipped.adjacency())
}

/// All isomorphism classes of graphs (connected or not) with `m` edges.
fn classes_with_edges(n: usize, m: usize) -> Vec<CanonicalGraph> {
    let total = pair_count(n);
    if 2 * m > total {
        let mut out: Vec<_> = classes_with_edges(n, total - m).iter().map(complement).collect();
        out.sort_unstable();
        out.dedup();
        return out;
    }
    let mut layer = vec![CanonicalGraph { n, bits: 0 }];
    for _ in 0..m {
        let mut next: Vec<CanonicalGraph> = layer
            .par_iter()
            .flat_map_iter(|g| {
                let adj = g.adjacency();
                let mut found = BTreeSet::new();
                for v in 1..n {
                    for u in 0..v {
                        if adj[u] >> v & 1 == 0 {
                            let mut a = adj;
                            a[u] |= 1 << v;
                            a[v] |= 1 << u;
                            found.insert(canonical_from_adjacency(n, &a));
                        }
                    }
                }
                found.into_iter()
            })
            .collect();
        next.sort_unstable();
        next.dedup();
        layer = next;
    }
    layer
}

/// Every connected graph with `n` nodes and `m` edges, one per isomorphism
/// class, in canonical order.
pub fn enumerate_connected(n: usize, m: usize) -> Result<Vec<CanonicalGraph>> {
    if n > MAX_REWIRE_NODES {
        return Err(Error::Scale(format!(
            "enumeration is limited to n <= {MAX_REWIRE_NODES}, got {n}"
        )));
    }
    if n < 2 {
        return Err(Error::domain("enumeration needs n >= 2"));
    }
    if m > pair_count(n) {
        return Err(Error::Input(format!("a simple graph on {n} nodes has at most {} edges", pair_count(n))));
    }
    Ok(classes_with_edges(n, m)
        .into_iter()
        .filter(CanonicalGraph::is_connected)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RewireOptions {
    /// Also optimize the weights of each class on the simplex scaled to the
    /// total budget. Reported only; the ranking uses equal weights.
    pub optimize_weights: Option<SolverSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewireEntry {
    pub edges: Vec<(usize, usize)>,
    pub degree_sequence: Vec<usize>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimized_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewireResult {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub measure: String,
    pub classes: usize,
    pub best: RewireEntry,
    /// Classes whose value ties the best within `1e-12` relative.
    pub ties: usize,
    pub ranking: Vec<RewireEntry>,
}

/// Ranks every connected graph with `n` nodes and `m` edges, each edge at
/// weight `alpha / m`.
pub fn rewire_bruteforce(
    n: usize,
    m: usize,
    alpha: f64,
    meas: &Measure,
    opts: &RewireOptions,
) -> Result<RewireResult> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("total weight must be positive, got {alpha}")));
    }
    if n >= 2 && m + 1 < n {
        return Err(Error::Input(format!(
            "no connected graph on {n} nodes has only {m} edges"
        )));
    }
    let classes = enumerate_connected(n, m)?;
    let w = alpha / m as f64;
    let mut ranking: Vec<RewireEntry> = classes
        .par_iter()
        .map(|c| {
            let edges = c.edges();
            let g = WeightedGraph::new(n, edges.iter().map(|&(u, v)| (u, v, w)))?;
            let value = evaluate(&g, meas)?;
            let optimized_value = match &opts.optimize_weights {
                Some(settings) => {
                    let t = Topology::new(n, &edges)?;
                    let r = optimize_weights(&t, meas, settings)?;
                    let scaled: Vec<f64> = r.weights.iter().map(|x| x * alpha).collect();
                    Some(evaluate(&t.with_weights(&scaled)?, meas)?)
                }
                None => None,
            };
            Ok(RewireEntry {
                edges,
                degree_sequence: c.degree_sequence(),
                value,
                optimized_value,
            })
        })
        .collect::<Result<_>>()?;
    ranking.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.edges.cmp(&b.edges)));
    let min = ranking[0].value;
    let tie_tol = 1e-12 * min.abs().max(f64::MIN_POSITIVE);
    let ties: Vec<&RewireEntry> = ranking.iter().take_while(|e| e.value - min <= tie_tol).collect();
    let best = ties
        .iter()
        .min_by(|a, b| a.edges.cmp(&b.edges))
        .map(|e| (*e).clone())
        .expect("at least one class");
    Ok(RewireResult {
        n,
        m,
        alpha,
        measure: meas.to_string(),
        classes: ranking.len(),
        ties: ties.len(),
        best,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn all_pairs(n: usize) -> Vec<(usize, usize)> {
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
    }

    /// Canonicalizes every labeled graph; independent of the layered
    /// construction.
    fn labeled_class_count(n: usize, m: usize, connected_only: bool) -> usize {
        let pairs = all_pairs(n);
        let mut seen = HashSet::new();
        for mask in 0u64..(1 << pairs.len()) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let edges: Vec<_> = (0..pairs.len()).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
            if connected_only && components(n, edges.iter().copied()) != 1 {
                continue;
            }
            seen.insert(canonical_form(n, &edges).unwrap());
        }
        seen.len()
    }

    #[test]
    fn layered_matches_labeled_enumeration() {
        for n in 2..=5 {
            for m in 0..=pair_count(n) {
                assert_eq!(classes_with_edges(n, m).len(), labeled_class_count(n, m, false), "n={n} m={m}");
                assert_eq!(
                    enumerate_connected(n, m).unwrap().len(),
                    labeled_class_count(n, m, true),
                    "n={n} m={m}"
                );
            }
        }
    }

    #[test]
    fn known_class_totals() {
        // graphs and connected graphs on n unlabeled nodes
        let known = [(4, 11, 6), (5, 34, 21), (6, 156, 112), (7, 1044, 853)];
        for (n, all, connected) in known {
            let mut a = 0;
            let mut c = 0;
            for m in 0..=pair_count(n) {
                a += classes_with_edges(n, m).len();
                c += enumerate_connected(n, m).unwrap().len();
            }
            assert_eq!((a, c), (all, connected), "n={n}");
        }
    }

    #[test]
    fn cycle_beats_paw() {
        let r = rewire_bruteforce(4, 4, 4.0, &Measure::Energy1, &RewireOptions::default()).unwrap();
        assert_eq!(r.classes, 2);
        assert_relative_eq!(r.ranking[0].value, 0.625, max_relative = 1e-12);
        assert_relative_eq!(r.ranking[1].value, 19.0 / 24.0, max_relative = 1e-12);
        assert_eq!(r.best.degree_sequence, vec![2, 2, 2, 2]);
    }

    #[test]
    fn single_class_case() {
        for m in [Measure::Energy1, Measure::Entropy, Measure::Energy2] {
            let r = rewire_bruteforce(4, 5, 5.0, &m, &RewireOptions::default()).unwrap();
            assert_eq!(r.classes, 1);
            assert_eq!(r.best.degree_sequence, vec![3, 3, 2, 2]);
        }
    }

    #[test]
    fn input_checks() {
        let m = Measure::Energy1;
        let o = RewireOptions::default();
        assert!(matches!(rewire_bruteforce(9, 10, 1.0, &m, &o), Err(Error::Scale(_))));
        assert!(matches!(rewire_bruteforce(5, 3, 1.0, &m, &o), Err(Error::Input(_))));
        assert!(matches!(rewire_bruteforce(4, 7, 1.0, &m, &o), Err(Error::Input(_))));
        assert!(rewire_bruteforce(4, 4, 0.0, &m, &o).is_err());
    }

    #[test]
    fn weight_hook_never_worse_than_equal_weights() {
        let o = RewireOptions {
            optimize_weights: Some(SolverSettings::default()),
        };
        let r = rewire_bruteforce(5, 6, 6.0, &Measure::Energy1, &o).unwrap();
        for e in &r.ranking {
            assert!(e.optimized_value.unwrap() <= e.value + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn canonical_form_ignores_labels(
            n in 3usize..=8,
            mask in any::<u64>(),
            perm_seed in any::<u64>(),
        ) {
            let pairs = all_pairs(n);
            let edges: Vec<_> = (0..pairs.len()).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut s = perm_seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let relabeled: Vec<_> = edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
            let a = canonical_form(n, &edges).unwrap();
            let b = canonical_form(n, &relabeled).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(a.edge_count(), edges.len());
            // the canonical representative is itself a fixed point
            prop_assert_eq!(canonical_form(n, &a.edges()).unwrap(), a);
        }
    }
}
