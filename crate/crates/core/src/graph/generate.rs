use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::WeightedGraph;
use crate::error::{Error, Result};

const MAX_RETRIES: usize = 1000;

/// Graph families available to [`generate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Complete,
    Cycle,
    Path,
    /// Star centered on node 0.
    Star,
    /// `G(n, p)`, redrawn until connected. Weights are uniform in the given
    /// range, or 1 when no range is given.
    ErdosRenyi {
        p: f64,
        weights: Option<(f64, f64)>,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Complete => "complete",
            Family::Cycle => "cycle",
            Family::Path => "path",
            Family::Star => "star",
            Family::ErdosRenyi { .. } => "erdos_renyi",
        }
    }
}

/// Deterministic for a fixed `seed`; only `ErdosRenyi` consumes randomness.
pub fn generate(family: Family, n: usize, seed: u64) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::domain(format!("generators need n >= 2, got {n}")));
    }
    let pairs: Vec<(usize, usize)> = match family {
        Family::Complete => (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect(),
        Family::Cycle => {
            if n < 3 {
                return Err(Error::domain("a simple cycle needs n >= 3"));
            }
            (0..n).map(|i| (i, (i + 1) % n)).collect()
        }
        Family::Path => (0..n - 1).map(|i| (i, i + 1)).collect(),
        Family::Star => (1..n).map(|i| (0, i)).collect(),
        Family::ErdosRenyi { p, weights } => return erdos_renyi(n, p, weights, seed),
    };
    WeightedGraph::unit_weighted(n, &pairs)
}

fn erdos_renyi(n: usize, p: f64, weights: Option<(f64, f64)>, seed: u64) -> Result<WeightedGraph> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("edge probability must lie in (0, 1], got {p}")));
    }
    if let Some((lo, hi)) = weights {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::domain(format!("invalid weight range [{lo}, {hi}]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RETRIES {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    let w = match weights {
                        Some((lo, hi)) if hi > lo => rng.random_range(lo..hi),
                        Some((lo, _)) => lo,
                        None => 1.0,
                    };
                    edges.push((u, v, w));
                }
            }
        }
        let g = WeightedGraph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Generation(format!(
        "no connected G({n}, {p}) draw within {MAX_RETRIES} retries"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_families() {
        assert_eq!(generate(Family::Complete, 4, 0).unwrap().edge_count(), 6);
        assert_eq!(generate(Family::Cycle, 4, 0).unwrap().edge_count(), 4);
        assert_eq!(generate(Family::Path, 4, 0).unwrap().edge_count(), 3);
        let star = generate(Family::Star, 4, 0).unwrap();
        assert_eq!(star.degrees(), vec![3.0, 1.0, 1.0, 1.0]);
        assert!(generate(Family::Cycle, 2, 0).is_err());
        assert!(generate(Family::Path, 1, 0).is_err());
    }

    #[test]
    fn random_is_seeded_and_connected() {
        let fam = Family::ErdosRenyi {
            p: 0.3,
            weights: Some((0.5, 2.0)),
        };
        let a = generate(fam, 12, 7).unwrap();
        let b = generate(fam, 12, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
        assert!(a.edges().iter().all(|e| (0.5..2.0).contains(&e.w)));
        assert_ne!(a, generate(fam, 12, 8).unwrap());
    }

    #[test]
    fn retry_budget() {
        let fam = Family::ErdosRenyi {
            p: 1e-9,
            weights: None,
        };
        assert!(matches!(generate(fam, 10, 1), Err(Error::Generation(_))));
        let bad = Family::ErdosRenyi {
            p: 0.0,
            weights: None,
        };
        assert!(matches!(generate(bad, 10, 1), Err(Error::Domain(_))));
    }
}
