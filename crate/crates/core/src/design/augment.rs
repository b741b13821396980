//! Edge augmentation for Schur-convex sums `Σ_{i≥2} f(λ_i)` and the lower
//! bound every `k`-edge augmentation must respect.
//!
//! Adding `k` edges is a rank-`k` positive semidefinite update of the
//! Laplacian, so `λ_i(new) ≤ λ_{i+k}(old)`. With `f` decreasing and
//! nonnegative this gives `ρ(new) ≥ Σ_{i=k+2}^{n} f(λ_i(old))`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedGraph};
use crate::measures::{Measure, Network, SchurFn};
use crate::spectral::zero_tol;

/// Largest `C(|candidates|, k)` searched by [`exhaustive_augment`].
pub const EXHAUSTIVE_LIMIT: u128 = 100_000;

/// A candidate edge and the weight it is added with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl From<Edge> for Candidate {
    fn from(e: Edge) -> Self {
        Candidate { u: e.u, v: e.v, w: e.w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentStrategy {
    Greedy,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentationReport {
    pub strategy: AugmentStrategy,
    pub k: usize,
    pub function: String,
    pub initial: f64,
    pub added: Vec<Candidate>,
    pub achieved: f64,
    /// `Σ_{i=k+2}^{n} f(λ_i)` over the original spectrum.
    pub bound: f64,
    pub gap: f64,
    /// Candidates dropped because the edge already exists in the graph.
    pub skipped: Vec<Candidate>,
    /// `λ_i(new) ≤ λ_{i+k'}(old)` for the `k'` edges actually added.
    pub interlacing_holds: bool,
}

/// `Σ_{i=k+2}^{n} f(λ_i)` over the ascending Laplacian spectrum of `g`;
/// zero when `k + 2 > n`.
pub fn fundamental_limit(g: &WeightedGraph, k: usize, f: &SchurFn) -> Result<f64> {
    let net = Network::new(g.clone());
    let spec = net.spectrum()?;
    Ok(spec.eigenvalues().iter().skip(k + 1).map(|&l| f.eval(l)).sum())
}

/// Checks `new[i] ≤ old[i + k]` for every index where both sides exist.
pub fn interlacing_holds(old: &[f64], new: &[f64], k: usize) -> bool {
    let scale = old.iter().chain(new).fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-10 * scale;
    (0..new.len().saturating_sub(k)).all(|i| new[i] <= old[i + k] + tol)
}

fn with_edges(g: &WeightedGraph, add: &[Candidate]) -> Result<WeightedGraph> {
    let extra = WeightedGraph::new(g.n(), add.iter().map(|c| (c.u, c.v, c.w)))?;
    g.add(&extra)
}

fn schur_value(g: &WeightedGraph, f: &SchurFn) -> Result<f64> {
    Network::new(g.clone()).evaluate(&Measure::SchurSum(f.clone()))
}

/// Drops candidates already present in `g` (and repeated candidates).
fn usable(g: &WeightedGraph, candidates: &[Candidate]) -> Result<(Vec<Candidate>, Vec<Candidate>)> {
    if candidates.is_empty() {
        return Err(Error::Input("candidate set is empty".into()));
    }
    let mut keep: Vec<Candidate> = Vec::new();
    let mut skipped = Vec::new();
    for &c in candidates {
        if c.u >= g.n() || c.v >= g.n() || c.u == c.v || !(c.w > 0.0 && c.w.is_finite()) {
            return Err(Error::Input(format!("invalid candidate ({}, {}, {})", c.u, c.v, c.w)));
        }
        let key = (c.u.min(c.v), c.u.max(c.v));
        let c = Candidate { u: key.0, v: key.1, w: c.w };
        if g.has_edge(key.0, key.1) || keep.iter().any(|k| (k.u, k.v) == key) {
            skipped.push(c);
        } else {
            keep.push(c);
        }
    }
    Ok((keep, skipped))
}

fn finish(
    g: &WeightedGraph,
    k: usize,
    f: &SchurFn,
    strategy: AugmentStrategy,
    added: Vec<Candidate>,
    skipped: Vec<Candidate>,
) -> Result<AugmentationReport> {
    let old = Network::new(g.clone());
    let initial = old.evaluate(&Measure::SchurSum(f.clone()))?;
    let new = Network::new(with_edges(g, &added)?);
    let achieved = new.evaluate(&Measure::SchurSum(f.clone()))?;
    let bound = fundamental_limit(g, k, f)?;
    let interlacing = interlacing_holds(old.spectrum()?.eigenvalues(), new.spectrum()?.eigenvalues(), added.len());
    Ok(AugmentationReport {
        strategy,
        k,
        function: f.to_string(),
        initial,
        added,
        achieved,
        bound,
        gap: achieved - bound,
        skipped,
        interlacing_holds: interlacing,
    })
}

fn require_connected(g: &WeightedGraph) -> Result<()> {
    if !g.is_connected() {
        return Err(Error::Connectivity {
            lambda2: 0.0,
            zero_tol: zero_tol(0.0),
        });
    }
    Ok(())
}

/// Adds up to `k` candidates one at a time, each time taking the one that
/// lowers `Σ f(λ_i)` the most (earliest candidate on ties).
pub fn greedy_augment(g: &WeightedGraph, k: usize, candidates: &[Candidate], f: &SchurFn) -> Result<AugmentationReport> {
    require_connected(g)?;
    let (mut pool, skipped) = usable(g, candidates)?;
    let mut current = g.clone();
    let mut added = Vec::new();
    for _ in 0..k {
        if pool.is_empty() {
            break;
        }
        let scores: Vec<f64> = pool
            .par_iter()
            .map(|c| schur_value(&with_edges(&current, &[*c])?, f))
            .collect::<Result<_>>()?;
        let (best, _) = scores
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .expect("pool is nonempty");
        let c = pool.remove(best);
        current = with_edges(&current, &[c])?;
        added.push(c);
    }
    finish(g, k, f, AugmentStrategy::Greedy, added, skipped)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Tries every `k`-subset of the usable candidates (fewer when there are
/// not enough) and keeps the best, earliest subset on ties.
pub fn exhaustive_augment(
    g: &WeightedGraph,
    k: usize,
    candidates: &[Candidate],
    f: &SchurFn,
) -> Result<AugmentationReport> {
    require_connected(g)?;
    let (pool, skipped) = usable(g, candidates)?;
    let take = k.min(pool.len());
    if binomial(pool.len(), take) > EXHAUSTIVE_LIMIT {
        return Err(Error::Scale(format!(
            "C({}, {take}) subsets exceed the exhaustive limit of {EXHAUSTIVE_LIMIT}",
            pool.len()
        )));
    }
    let subsets = combinations(pool.len(), take);
    let scores: Vec<f64> = subsets
        .par_iter()
        .map(|s| {
            let pick: Vec<Candidate> = s.iter().map(|&i| pool[i]).collect();
            schur_value(&with_edges(g, &pick)?, f)
        })
        .collect::<Result<_>>()?;
    let (best, _) = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("at least the empty subset");
    let added = subsets[best].iter().map(|&i| pool[i]).collect();
    finish(g, k, f, AugmentStrategy::Exhaustive, added, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family};
    use approx::assert_relative_eq;

    fn unit(f: Family, n: usize) -> WeightedGraph {
        generate(f, n, 0).unwrap()
    }

    #[test]
    fn limit_examples() {
        let f = SchurFn::Inverse;
        let p3 = unit(Family::Path, 3);
        assert_relative_eq!(fundamental_limit(&p3, 0, &f).unwrap(), 2.0 / 3.0, max_relative = 1e-13);
        assert_relative_eq!(fundamental_limit(&p3, 1, &f).unwrap(), 1.0 / 6.0, max_relative = 1e-13);
        assert_eq!(fundamental_limit(&p3, 2, &f).unwrap(), 0.0);
        let c4 = unit(Family::Cycle, 4);
        assert_relative_eq!(fundamental_limit(&c4, 2, &f).unwrap(), 0.125, max_relative = 1e-13);
    }

    #[test]
    fn path_closing_edge_respects_bound() {
        let f = SchurFn::Inverse;
        let p3 = unit(Family::Path, 3);
        for e in -2..=3 {
            let w = 10f64.powi(e);
            let r = greedy_augment(&p3, 1, &[Candidate { u: 0, v: 2, w }], &f).unwrap();
            assert_relative_eq!(r.bound, 1.0 / 6.0, max_relative = 1e-13);
            assert!(r.achieved >= r.bound - 1e-12);
            assert!(r.interlacing_holds);
        }
    }

    #[test]
    fn triangle_plus_parallel_weight() {
        // every K_3 pair already exists, so candidates are skipped
        let k3 = unit(Family::Complete, 3);
        let r = greedy_augment(&k3, 1, &[Candidate { u: 0, v: 1, w: 2.0 }], &SchurFn::Inverse).unwrap();
        assert!(r.added.is_empty());
        assert_eq!(r.skipped.len(), 1);
        assert_relative_eq!(r.bound, 1.0 / 6.0, max_relative = 1e-13);
        assert!(r.achieved >= r.bound);
    }

    #[test]
    fn empty_candidates_rejected() {
        let p3 = unit(Family::Path, 3);
        assert!(matches!(greedy_augment(&p3, 1, &[], &SchurFn::Inverse), Err(Error::Input(_))));
    }

    #[test]
    fn greedy_never_beats_exhaustive() {
        let g = unit(Family::Path, 6);
        let f = SchurFn::InverseSq;
        let mut cands = Vec::new();
        for u in 0..6 {
            for v in u + 2..6 {
                cands.push(Candidate { u, v, w: 0.5 + (u * v) as f64 / 10.0 });
            }
        }
        for k in 1..=3 {
            let gr = greedy_augment(&g, k, &cands, &f).unwrap();
            let ex = exhaustive_augment(&g, k, &cands, &f).unwrap();
            assert!(ex.achieved <= gr.achieved + 1e-12);
            assert!(ex.gap >= -1e-9 && gr.gap >= -1e-9);
            assert_eq!(gr.added.len(), k);
        }
    }

    #[test]
    fn combinations_enumerate_subsets() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(binomial(40, 3), 9880);
    }
}
