//! Euler–Maruyama simulation of `ẋ = −L x + ξ` with white Gaussian `ξ`,
//! used as an independent estimate of the squared `H_2` norm.
//!
//! The disagreement `y = M_n x` and the mean `𝟏ᵀx/n` are propagated
//! separately. `L` annihilates `𝟏` and commutes with `M_n`, so `y` evolves
//! on its own and shifting `x_0` by `c𝟏` leaves it bit-for-bit unchanged.
//!
//! Noise is counter-based: the standard normal driving node `i` at step `s`
//! of trial `t` occupies a fixed position of the ChaCha8 stream selected by
//! `(seed, t)`, so trials are independent and reproducible in any order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::measures::{Measure, Network};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Discarded initial time; defaults to `5/λ_2`.
    pub burn_in: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Initial state; zeros when absent.
    pub x0: Option<Vec<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 200.0,
            burn_in: None,
            trials: 20,
            seed: 0,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H2Estimate {
    /// Mean over trials of the time-averaged `‖M_n x‖²`.
    pub estimate: f64,
    pub stderr: f64,
    /// `Σ_{i≥2} 1/(2λ_i)`.
    pub closed_form: f64,
    pub per_trial: Vec<f64>,
    pub steps: usize,
    pub burn_in: f64,
    pub warnings: Vec<String>,
}

/// One standard normal from two 64-bit words by Box–Muller, so every draw
/// consumes exactly four 32-bit words of the stream.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let a = rng.next_u64();
    let b = rng.next_u64();
    // (0, 1] keeps the logarithm finite
    let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn trial_stream(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// The normal sample for `(seed, trial, step, node)`, read by random access.
pub fn noise_sample(seed: u64, trial: usize, step: usize, node: usize, n: usize) -> f64 {
    let mut rng = trial_stream(seed, trial);
    rng.set_word_pos(4 * (step as u128 * n as u128 + node as u128));
    normal(&mut rng)
}

/// `out = −L y` using the edge list.
fn neg_laplacian_apply(g: &WeightedGraph, y: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for e in g.edges() {
        let f = e.w * (y[e.u] - y[e.v]);
        out[e.u] -= f;
        out[e.v] += f;
    }
}

fn centered(x: &[f64]) -> (Vec<f64>, f64) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| v - mean).collect(), mean)
}

/// State trajectory of one trial.
pub struct Trajectory {
    /// `M_n x` at the final step.
    pub y: Vec<f64>,
    /// `𝟏ᵀx/n` at the final step.
    pub mean: f64,
    /// Time average of `‖y‖²` after burn-in.
    pub average_energy: f64,
}

/// Integrates one trial. `noise = false` gives the deterministic decay.
pub fn simulate_trial(
    g: &WeightedGraph,
    x0: &[f64],
    dt: f64,
    steps: usize,
    burn_steps: usize,
    stream: Option<(u64, usize)>,
) -> Trajectory {
    let n = g.n();
    let (mut y, mut mean) = centered(x0);
    let mut ly = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut rng = stream.map(|(seed, trial)| trial_stream(seed, trial));
    let sqrt_dt = dt.sqrt();
    // Neumaier-compensated running sum
    let mut sum = 0.0;
    let mut comp = 0.0;
    for step in 0..steps {
        neg_laplacian_apply(g, &y, &mut ly);
        if let Some(rng) = rng.as_mut() {
            w.iter_mut().for_each(|v| *v = normal(rng));
            let wbar = w.iter().sum::<f64>() / n as f64;
            for i in 0..n {
                y[i] += dt * ly[i] + sqrt_dt * (w[i] - wbar);
            }
            mean += sqrt_dt * wbar;
        } else {
            for i in 0..n {
                y[i] += dt * ly[i];
            }
        }
        if step >= burn_steps {
            let e: f64 = y.iter().map(|v| v * v).sum();
            let t = sum + e;
            if sum.abs() >= e.abs() {
                comp += (sum - t) + e;
            } else {
                comp += (e - t) + sum;
            }
            sum = t;
        }
    }
    let kept = steps.saturating_sub(burn_steps).max(1);
    Trajectory {
        y,
        mean,
        average_energy: (sum + comp) / kept as f64,
    }
}

/// Pairwise summation in index order.
fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        len => pairwise_sum(&x[..len / 2]) + pairwise_sum(&x[len / 2..]),
    }
}

/// Estimates `‖G‖²_{H_2}` as the steady-state mean of `‖M_n x‖²`.
pub fn estimate_h2(g: &WeightedGraph, cfg: &SimConfig) -> Result<H2Estimate> {
    let net = Network::new(g.clone());
    let spec = net.spectrum()?;
    let lambda2 = spec.lambda2().expect("connected graph has n >= 2");
    let lambda_n = spec.lambda_max();
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {}", cfg.dt)));
    }
    if cfg.dt * lambda_n >= 2.0 {
        return Err(Error::Config(format!(
            "dt * lambda_max = {} violates the stability bound 2",
            cfg.dt * lambda_n
        )));
    }
    if cfg.trials < 2 {
        return Err(Error::Config("at least two trials are needed for a standard error".into()));
    }
    let x0 = match &cfg.x0 {
        Some(x) if x.len() != g.n() => {
            return Err(Error::Dimension {
                expected: g.n(),
                found: x.len(),
            })
        }
        Some(x) => x.clone(),
        None => vec![0.0; g.n()],
    };
    let mixing = 5.0 / lambda2;
    let burn_in = cfg.burn_in.unwrap_or(mixing);
    let mut warnings = Vec::new();
    if burn_in < mixing {
        warnings.push(format!(
            "burn-in {burn_in} is shorter than 5/lambda_2 = {mixing}; the estimate may be biased by the initial state"
        ));
    }
    if !(cfg.horizon > burn_in) {
        return Err(Error::Config(format!(
            "horizon {} must exceed the burn-in {burn_in}",
            cfg.horizon
        )));
    }
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let burn_steps = (burn_in / cfg.dt).round() as usize;
    let per_trial: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| simulate_trial(g, &x0, cfg.dt, steps, burn_steps, Some((cfg.seed, t))).average_energy)
        .collect();
    let k = per_trial.len() as f64;
    let estimate = pairwise_sum(&per_trial) / k;
    let dev: Vec<f64> = per_trial.iter().map(|v| (v - estimate).powi(2)).collect();
    let variance = pairwise_sum(&dev) / (k - 1.0);
    Ok(H2Estimate {
        estimate,
        stderr: (variance / k).sqrt(),
        closed_form: net.evaluate(&Measure::Energy1)?,
        per_trial,
        steps,
        burn_in,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Least-squares slope of `−log ‖M_n x(t)‖` over the second half of the
    /// horizon.
    pub rate: f64,
    pub lambda2: f64,
    pub relative_error: f64,
}

/// Noise-free run from `x0`; the disagreement decays like `e^{−λ_2 t}`.
pub fn fit_decay_rate(g: &WeightedGraph, x0: &[f64], dt: f64, horizon: f64) -> Result<DecayFit> {
    let net = Network::new(g.clone());
    let spec = net.spectrum()?;
    let lambda2 = spec.lambda2().expect("connected graph has n >= 2");
    if dt * spec.lambda_max() >= 2.0 || !(dt > 0.0) {
        return Err(Error::Config("dt violates the stability bound".into()));
    }
    if x0.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            found: x0.len(),
        });
    }
    let steps = (horizon / dt).round() as usize;
    let (mut y, _) = centered(x0);
    let mut ly = vec![0.0; g.n()];
    let mut samples = Vec::new();
    for step in 1..=steps {
        neg_laplacian_apply(g, &y, &mut ly);
        for (yi, li) in y.iter_mut().zip(&ly) {
            *yi += dt * li;
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 1e-250) {
            break;
        }
        if 2 * step >= steps {
            samples.push((step as f64 * dt, norm.ln()));
        }
    }
    if samples.len() < 2 {
        return Err(Error::numerical("disagreement vanished before the fitting window"));
    }
    let k = samples.len() as f64;
    let tm = samples.iter().map(|s| s.0).sum::<f64>() / k;
    let lm = samples.iter().map(|s| s.1).sum::<f64>() / k;
    let cov: f64 = samples.iter().map(|s| (s.0 - tm) * (s.1 - lm)).sum();
    let var: f64 = samples.iter().map(|s| (s.0 - tm).powi(2)).sum();
    let rate = -cov / var;
    Ok(DecayFit {
        rate,
        lambda2,
        relative_error: (rate - lambda2).abs() / lambda2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family};

    #[test]
    fn random_access_matches_sequential_stream() {
        let mut rng = trial_stream(5, 3);
        let n = 4;
        for step in 0..3 {
            for node in 0..n {
                let seq = normal(&mut rng);
                assert_eq!(seq.to_bits(), noise_sample(5, 3, step, node, n).to_bits());
            }
        }
    }

    #[test]
    fn normals_have_unit_variance() {
        let mut rng = trial_stream(1, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| normal(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.01);
    }

    #[test]
    fn shift_by_constant_is_invisible() {
        let g = generate(Family::Path, 3, 0).unwrap();
        let a = simulate_trial(&g, &[0.5, 1.5, 1.0], 1e-2, 500, 0, Some((9, 0)));
        let b = simulate_trial(&g, &[4.5, 5.5, 5.0], 1e-2, 500, 0, Some((9, 0)));
        assert_eq!(a.y, b.y);
        assert_eq!(a.average_energy.to_bits(), b.average_energy.to_bits());
        assert!((b.mean - a.mean - 4.0).abs() < 1e-12);
    }

    #[test]
    fn config_errors() {
        let g = generate(Family::Complete, 3, 0).unwrap();
        let bad_dt = SimConfig {
            dt: 0.7,
            ..Default::default()
        };
        assert!(matches!(estimate_h2(&g, &bad_dt), Err(Error::Config(_))));
        let short = SimConfig {
            horizon: 1.0,
            burn_in: Some(2.0),
            ..Default::default()
        };
        assert!(matches!(estimate_h2(&g, &short), Err(Error::Config(_))));
        let wrong_x0 = SimConfig {
            x0: Some(vec![0.0; 2]),
            ..Default::default()
        };
        assert!(matches!(estimate_h2(&g, &wrong_x0), Err(Error::Dimension { .. })));
    }

    #[test]
    fn short_burn_in_is_reported() {
        let g = generate(Family::Complete, 3, 0).unwrap();
        let cfg = SimConfig {
            dt: 1e-2,
            horizon: 10.0,
            burn_in: Some(0.1),
            trials: 4,
            ..Default::default()
        };
        assert_eq!(estimate_h2(&g, &cfg).unwrap().warnings.len(), 1);
    }

    #[test]
    fn noise_free_decay_rate() {
        let g = generate(Family::Path, 5, 0).unwrap();
        let fit = fit_decay_rate(&g, &[1.0, -0.3, 0.2, 0.9, -2.0], 1e-3, 30.0).unwrap();
        assert!(fit.relative_error < 0.05, "{fit:?}");
    }

    #[test]
    fn deterministic_across_runs() {
        let g = generate(Family::Complete, 3, 0).unwrap();
        let cfg = SimConfig {
            dt: 1e-2,
            horizon: 20.0,
            trials: 6,
            seed: 3,
            ..Default::default()
        };
        let a = estimate_h2(&g, &cfg).unwrap();
        let b = estimate_h2(&g, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
