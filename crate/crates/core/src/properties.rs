//! Randomized falsification searches for the systemic-measure axioms.
//!
//! Each trial draws its own inputs from a generator keyed by `(seed, trial)`,
//! so any violation can be replayed in isolation with [`replay`] and trials
//! can run in any order.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::measures::{evaluate_matrix, evaluate_nonzero, Measure, Network};
use crate::spectral::{pseudo_inverse_from, psd_order};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Homogeneity,
    Monotonicity,
    Convexity,
    Subadditivity,
    Orthogonal,
    Schur,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::Homogeneity,
        Property::Monotonicity,
        Property::Convexity,
        Property::Subadditivity,
        Property::Orthogonal,
        Property::Schur,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Property::Homogeneity => "homogeneity",
            Property::Monotonicity => "monotonicity",
            Property::Convexity => "convexity",
            Property::Subadditivity => "subadditivity",
            Property::Orthogonal => "orthogonal",
            Property::Schur => "schur",
        }
    }

    /// The checks a measure has to pass given its classification.
    pub fn required_for(m: &Measure) -> Vec<Property> {
        let class = m.classification();
        let mut out = Vec::new();
        if m.is_homogeneous() {
            out.push(Property::Homogeneity);
        }
        out.push(Property::Monotonicity);
        out.push(Property::Convexity);
        // subadditivity follows from monotonicity only when ρ ≥ 0
        if m.is_nonnegative() {
            out.push(Property::Subadditivity);
        }
        if class.schur_convex {
            out.push(Property::Orthogonal);
            out.push(Property::Schur);
        }
        out
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| Error::Input(format!("unknown property `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyConfig {
    pub trials: usize,
    pub seed: u64,
    /// Absolute tolerance; the same value is also applied relative to the
    /// larger side of each comparison.
    pub tol: f64,
    pub alpha_grid: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for PropertyConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            tol: 1e-8,
            alpha_grid: vec![0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0],
            n_min: 3,
            n_max: 20,
        }
    }
}

impl PropertyConfig {
    fn allowed(&self, lhs: f64, rhs: f64) -> f64 {
        self.tol * (1.0 + lhs.abs().max(rhs.abs()))
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0) {
            return Err(Error::Input(format!("tolerance must be nonnegative, got {}", self.tol)));
        }
        if self.n_min < 3 || self.n_max < self.n_min {
            return Err(Error::Input(format!(
                "invalid node range [{}, {}]",
                self.n_min, self.n_max
            )));
        }
        if self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Input("alpha grid must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One comparison `lhs ≤ rhs` (or `lhs = rhs` for the equality axioms).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub trial: usize,
    pub input: String,
    pub lhs: f64,
    pub rhs: f64,
    /// How far the comparison is from failing; negative means violated.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: Property,
    pub measure: String,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub comparisons: usize,
    /// Trials whose constructed pair failed the PSD-order precondition.
    pub precondition_failures: usize,
    pub violations: Vec<Comparison>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// A connected graph on `n` nodes: a random spanning tree plus random extra
/// edges, with log-uniform weights in `[0.1, 10]`.
pub(crate) fn random_connected<R: Rng>(rng: &mut R, n: usize) -> WeightedGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    let mut present = vec![false; n * n];
    for i in 1..n {
        let u = order[i];
        let v = order[rng.random_range(0..i)];
        present[u * n + v] = true;
        present[v * n + u] = true;
        edges.push((u, v, log_uniform(rng, 0.1, 10.0)));
    }
    let density: f64 = rng.random_range(0.0..0.6);
    for u in 0..n {
        for v in u + 1..n {
            if !present[u * n + v] && rng.random::<f64>() < density {
                edges.push((u, v, log_uniform(rng, 0.1, 10.0)));
            }
        }
    }
    WeightedGraph::new(n, edges).expect("generated edges are valid")
}

/// A nonempty, possibly disconnected graph with log-uniform weights.
fn random_sparse<R: Rng>(rng: &mut R, n: usize) -> WeightedGraph {
    let density: f64 = rng.random_range(0.05..0.5);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < density {
                edges.push((u, v, log_uniform(rng, 0.01, 10.0)));
            }
        }
    }
    if edges.is_empty() {
        let u = rng.random_range(0..n);
        let v = (u + rng.random_range(1..n)) % n;
        edges.push((u, v, log_uniform(rng, 0.01, 10.0)));
    }
    WeightedGraph::new(n, edges).expect("generated edges are valid")
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn random_permutation_matrix<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    DMatrix::from_fn(n, n, |i, j| if perm[i] == j { 1.0 } else { 0.0 })
}

/// A doubly stochastic matrix `Σ θ_j P_j` with Dirichlet(1, …, 1) weights
/// over random permutation matrices.
pub fn random_doubly_stochastic<R: Rng>(rng: &mut R, n: usize, terms: usize) -> DMatrix<f64> {
    let theta: Vec<f64> = (0..terms).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = theta.iter().sum();
    let mut d = DMatrix::zeros(n, n);
    for t in theta {
        d += random_permutation_matrix(rng, n) * (t / total);
    }
    d
}

fn eval(g: &WeightedGraph, m: &Measure) -> Result<f64> {
    Network::new(g.clone()).evaluate(m)
}

fn mix(g1: &WeightedGraph, g2: &WeightedGraph, alpha: f64) -> Result<WeightedGraph> {
    if alpha == 1.0 {
        Ok(g1.clone())
    } else if alpha == 0.0 {
        Ok(g2.clone())
    } else {
        g1.scaled(alpha)?.add(&g2.scaled(1.0 - alpha)?)
    }
}

fn describe(g: &WeightedGraph) -> String {
    format!("n={} m={} w={:.6}", g.n(), g.edge_count(), g.total_weight())
}

struct TrialOutcome {
    comparisons: Vec<Comparison>,
    precondition_failed: bool,
}

fn leq(trial: usize, input: String, lhs: f64, rhs: f64, cfg: &PropertyConfig) -> Comparison {
    Comparison {
        trial,
        input,
        lhs,
        rhs,
        margin: rhs + cfg.allowed(lhs, rhs) - lhs,
    }
}

fn equal(trial: usize, input: String, lhs: f64, rhs: f64, cfg: &PropertyConfig) -> Comparison {
    Comparison {
        trial,
        input,
        lhs,
        rhs,
        margin: cfg.allowed(lhs, rhs) - (lhs - rhs).abs(),
    }
}

fn run_trial(property: Property, m: &Measure, cfg: &PropertyConfig, trial: usize) -> Result<TrialOutcome> {
    let mut rng = trial_rng(cfg.seed, trial);
    let n = rng.random_range(cfg.n_min..=cfg.n_max);
    let mut precondition_failed = false;
    let comparisons = match property {
        Property::Homogeneity => {
            let g = random_connected(&mut rng, n);
            let kappa = log_uniform(&mut rng, 0.1, 10.0);
            let base = eval(&g, m)?;
            let lhs = eval(&g.scaled(kappa)?, m)?;
            let rhs = base / kappa;
            // the stated bound is relative to ρ(G) itself
            let c = Comparison {
                trial,
                input: format!("{} kappa={kappa:.6}", describe(&g)),
                lhs,
                rhs,
                margin: cfg.tol * (1.0 + base.abs().max(lhs.abs())) - (lhs - rhs).abs(),
            };
            vec![c]
        }
        Property::Monotonicity => {
            let g2 = random_connected(&mut rng, n);
            let h = random_sparse(&mut rng, n);
            let g1 = g2.add(&h)?;
            let n1 = Network::new(g1);
            let n2 = Network::new(g2);
            let p1 = pseudo_inverse_from(n1.spectrum()?);
            let p2 = pseudo_inverse_from(n2.spectrum()?);
            if !psd_order(&p1, &p2, cfg.tol)? {
                precondition_failed = true;
                Vec::new()
            } else {
                let lhs = n1.evaluate(m)?;
                let rhs = n2.evaluate(m)?;
                let input = format!("G2 {} + H {}", describe(n2.graph()), describe(&h));
                vec![leq(trial, input, lhs, rhs, cfg)]
            }
        }
        Property::Convexity => {
            let g1 = random_connected(&mut rng, n);
            let g2 = random_connected(&mut rng, n);
            let r1 = eval(&g1, m)?;
            let r2 = eval(&g2, m)?;
            let mut out = Vec::with_capacity(cfg.alpha_grid.len());
            for &alpha in &cfg.alpha_grid {
                let lhs = eval(&mix(&g1, &g2, alpha)?, m)?;
                let rhs = alpha * r1 + (1.0 - alpha) * r2;
                let input = format!("G1 {} G2 {} alpha={alpha}", describe(&g1), describe(&g2));
                out.push(leq(trial, input, lhs, rhs, cfg));
            }
            out
        }
        Property::Subadditivity => {
            let g1 = random_connected(&mut rng, n);
            let g2 = random_connected(&mut rng, n);
            let lhs = eval(&g1.add(&g2)?, m)?;
            let rhs = eval(&g1, m)? + eval(&g2, m)?;
            let input = format!("G1 {} G2 {}", describe(&g1), describe(&g2));
            vec![leq(trial, input, lhs, rhs, cfg)]
        }
        Property::Orthogonal => {
            let g = random_connected(&mut rng, n);
            let (u, kind) = if m.is_spectral() {
                (random_orthogonal(&mut rng, n), "orthogonal")
            } else {
                (random_permutation_matrix(&mut rng, n), "permutation")
            };
            let l = g.laplacian().into_matrix();
            let rotated = &u * &l * u.transpose();
            let rotated = (&rotated + rotated.transpose()) * 0.5;
            let lhs = evaluate_matrix(&rotated, m)?;
            let rhs = eval(&g, m)?;
            vec![equal(trial, format!("{} U={kind}", describe(&g)), lhs, rhs, cfg)]
        }
        Property::Schur => {
            if !m.is_spectral() {
                return Err(Error::Input(format!(
                    "{m} is not a function of the spectrum; the Schur check does not apply"
                )));
            }
            let len = n - 1;
            let x: Vec<f64> = (0..len).map(|_| log_uniform(&mut rng, 0.1, 10.0)).collect();
            let terms = rng.random_range(1..=len.max(2));
            let d = random_doubly_stochastic(&mut rng, len, terms);
            let dx: Vec<f64> = (&d * nalgebra::DVector::from_column_slice(&x)).iter().copied().collect();
            let lhs = evaluate_nonzero(&dx, m)?;
            let rhs = evaluate_nonzero(&x, m)?;
            vec![leq(trial, format!("len={len} permutations={terms}"), lhs, rhs, cfg)]
        }
    };
    Ok(TrialOutcome {
        comparisons,
        precondition_failed,
    })
}

/// Runs `cfg.trials` independent trials of one axiom for one measure.
pub fn check(property: Property, m: &Measure, cfg: &PropertyConfig) -> Result<PropertyReport> {
    cfg.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(property, m, cfg, t))
        .collect::<Result<_>>()?;
    let comparisons = outcomes.iter().map(|o| o.comparisons.len()).sum();
    let precondition_failures = outcomes.iter().filter(|o| o.precondition_failed).count();
    let violations = outcomes
        .into_iter()
        .flat_map(|o| o.comparisons)
        .filter(|c| c.margin < 0.0)
        .collect();
    Ok(PropertyReport {
        property,
        measure: m.to_string(),
        trials: cfg.trials,
        seed: cfg.seed,
        tol: cfg.tol,
        comparisons,
        precondition_failures,
        violations,
    })
}

/// Recomputes every comparison of a single trial.
pub fn replay(property: Property, m: &Measure, cfg: &PropertyConfig, trial: usize) -> Result<Vec<Comparison>> {
    cfg.validate()?;
    Ok(run_trial(property, m, cfg, trial)?.comparisons)
}

fn config(trials: usize, seed: u64, tol: f64) -> PropertyConfig {
    PropertyConfig {
        trials,
        seed,
        tol,
        ..Default::default()
    }
}

pub fn check_homogeneity(m: &Measure, trials: usize, seed: u64, tol: f64) -> Result<PropertyReport> {
    check(Property::Homogeneity, m, &config(trials, seed, tol))
}

pub fn check_monotonicity(m: &Measure, trials: usize, seed: u64, tol: f64) -> Result<PropertyReport> {
    check(Property::Monotonicity, m, &config(trials, seed, tol))
}

pub fn check_convexity(
    m: &Measure,
    trials: usize,
    seed: u64,
    alpha_grid: &[f64],
    tol: f64,
) -> Result<PropertyReport> {
    let cfg = PropertyConfig {
        alpha_grid: alpha_grid.to_vec(),
        ..config(trials, seed, tol)
    };
    check(Property::Convexity, m, &cfg)
}

pub fn check_subadditivity(m: &Measure, trials: usize, seed: u64, tol: f64) -> Result<PropertyReport> {
    check(Property::Subadditivity, m, &config(trials, seed, tol))
}

pub fn check_orthogonal_invariance(m: &Measure, trials: usize, seed: u64, tol: f64) -> Result<PropertyReport> {
    check(Property::Orthogonal, m, &config(trials, seed, tol))
}

pub fn check_schur_convexity(m: &Measure, trials: usize, seed: u64, tol: f64) -> Result<PropertyReport> {
    check(Property::Schur, m, &config(trials, seed, tol))
}
