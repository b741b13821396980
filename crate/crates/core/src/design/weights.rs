//! Edge-weight allocation on the unit simplex by projected gradient descent.
//!
//! For a spectral measure `ρ = φ(λ_2, …, λ_n)` the derivative with respect
//! to the weight of edge `e = (u, v)` is `Σ_i ∂φ/∂λ_i · (v_i[u] − v_i[v])²`,
//! because `∂L/∂w_e = b_e b_eᵀ`. Measures that depend on `λ_2` alone are not
//! differentiable where `λ_2` is repeated and are solved by cutting planes
//! instead.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use serde::Serialize;

use super::Topology;
use crate::error::{Error, Result};
use crate::graph::{components, LaplacianMatrix};
use crate::measures::{eigen_gradient, evaluate, evaluate_nonzero, local_error, Measure};
use crate::spectral::{eig_sym, laplacian_spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings {
    /// Target for the stationarity residual.
    pub tol: f64,
    pub max_iters: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 10_000,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightAllocationResult {
    pub edges: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
    pub objective: f64,
    /// Certified lower bound on the optimum, when the method provides one.
    pub objective_lower_bound: Option<f64>,
    pub iterations: usize,
    /// Largest deviation of a supported edge's gradient from the mean over
    /// supported edges.
    pub stationarity_residual: f64,
    /// Edges that ended at weight zero.
    pub active_set: Vec<(usize, usize)>,
    pub converged: bool,
    /// `stationary`, `roundoff_floor` (no step can lower the objective by
    /// more than rounding error), `line_search`, `max_iters` or, for the
    /// cutting-plane variant, `gap_certified`, `lp_floor` (the LP tolerance
    /// is reached) or `cut_limit`.
    pub stop_reason: &'static str,
    pub method: &'static str,
    /// Objective after each accepted step, starting from the uniform point.
    pub history: Vec<f64>,
}

/// Euclidean projection onto `{w ≥ 0, Σ w = 1}` by the sort-and-threshold
/// rule.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

struct Point {
    value: f64,
    gradient: Vec<f64>,
}

/// Objective and gradient at `w`, or `None` when the support does not
/// connect the nodes.
fn evaluate_point(t: &Topology, w: &[f64], m: &Measure) -> Result<Option<Point>> {
    let support = t.edges().iter().zip(w).filter(|(_, &x)| x > 0.0).map(|(&e, _)| e);
    if components(t.n(), support) != 1 {
        return Ok(None);
    }
    let lap = LaplacianMatrix::from_weights(t.n(), t.edges(), w);
    if let Measure::LocalError = m {
        let d = lap.degrees();
        let gradient = t
            .edges()
            .iter()
            .map(|&(u, v)| -0.5 / (d[u] * d[u]) - 0.5 / (d[v] * d[v]))
            .collect();
        return Ok(Some(Point {
            value: local_error(d),
            gradient,
        }));
    }
    let spec = match laplacian_spectrum(&lap) {
        Ok(s) => s,
        Err(Error::Connectivity { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let nonzero = spec.nonzero();
    let value = evaluate_nonzero(nonzero, m)?;
    let g = eigen_gradient(nonzero, m)?;
    let vecs = spec.eigenvectors();
    let gradient = t
        .edges()
        .iter()
        .map(|&(u, v)| {
            g.iter()
                .enumerate()
                .map(|(i, gi)| {
                    let diff = vecs[(u, i + 1)] - vecs[(v, i + 1)];
                    gi * diff * diff
                })
                .sum()
        })
        .collect();
    Ok(Some(Point { value, gradient }))
}

struct Stationarity {
    residual: f64,
    /// Most negative `g_e − mean` over zero-weight edges; negative values
    /// mean moving weight onto that edge would still help.
    inactive_slack: f64,
}

fn stationarity(w: &[f64], g: &[f64]) -> Stationarity {
    let support: Vec<f64> = w.iter().zip(g).filter(|(&x, _)| x > 0.0).map(|(_, &gi)| gi).collect();
    let mean = support.iter().sum::<f64>() / support.len().max(1) as f64;
    let residual = support.iter().map(|gi| (gi - mean).abs()).fold(0.0, f64::max);
    let inactive_slack = w
        .iter()
        .zip(g)
        .filter(|(&x, _)| x == 0.0)
        .map(|(_, &gi)| gi - mean)
        .fold(f64::INFINITY, f64::min);
    Stationarity {
        residual,
        inactive_slack,
    }
}

fn dot_diff(g: &[f64], a: &[f64], b: &[f64]) -> f64 {
    g.iter().zip(a.iter().zip(b)).map(|(gi, (x, y))| gi * (x - y)).sum()
}

/// Minimizes `m` over weight vectors on the unit simplex supported on the
/// topology's edges, starting from uniform weights.
pub fn optimize_weights(t: &Topology, m: &Measure, opts: &SolverSettings) -> Result<WeightAllocationResult> {
    if !(opts.tol > 0.0) || opts.max_iters == 0 {
        return Err(Error::Input("solver needs tol > 0 and max_iters >= 1".into()));
    }
    let w0 = t.uniform();
    let start = evaluate_point(t, &w0, m)?
        .ok_or_else(|| Error::Solver("topology is not connected under uniform weights".into()))?;
    // (best λ_2, LP upper bound on λ_2) for the cutting-plane variant
    let mut bracket = None;
    let (weights, history, iterations, stop_reason, method) = if m.is_lambda2_only() {
        let ((w, h, it, reason), gap, upper) = cutting_plane(t, m, opts, w0, start)?;
        bracket = gap.map(|g| (upper - g, upper));
        (w, h, it, reason, "cutting_plane")
    } else {
        let (w, h, it, reason) = projected_gradient(t, m, opts, w0, start)?;
        (w, h, it, reason, "projected_gradient")
    };
    let final_point = evaluate_point(t, &weights, m)?
        .ok_or_else(|| Error::Solver("final iterate disconnected the topology".into()))?;
    let stat = stationarity(&weights, &final_point.gradient);
    let objective = evaluate(&t.with_weights(&weights)?, m)?;
    let active_set = t
        .edges()
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w == 0.0)
        .map(|(&e, _)| e)
        .collect();
    Ok(WeightAllocationResult {
        edges: t.edges().to_vec(),
        weights,
        objective,
        // the objective is a decreasing multiple of 1/λ_2
        objective_lower_bound: bracket.map(|(best, upper)| objective * best / upper),
        iterations,
        stationarity_residual: stat.residual,
        active_set,
        converged: matches!(stop_reason, "stationary" | "roundoff_floor" | "gap_certified" | "lp_floor")
            || (stat.residual < opts.tol && stat.inactive_slack >= -opts.tol),
        stop_reason,
        method,
        history,
    })
}

type Run = (Vec<f64>, Vec<f64>, usize, &'static str);

fn projected_gradient(
    t: &Topology,
    m: &Measure,
    opts: &SolverSettings,
    mut w: Vec<f64>,
    mut point: Point,
) -> Result<Run> {
    let mut history = vec![point.value];
    let gmax = point.gradient.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let mut step = if gmax > 0.0 { 1.0 / gmax } else { 1.0 };
    for it in 0..opts.max_iters {
        let mut rejected_disconnects = 0usize;
        let stat = stationarity(&w, &point.gradient);
        if stat.residual < opts.tol && stat.inactive_slack >= -opts.tol {
            return Ok((w, history, it, "stationary"));
        }
        let mut s = step * 2.0;
        let mut accepted = None;
        let mut at_floor = false;
        for attempt in 0..opts.max_backtracks {
            let trial: Vec<f64> = w.iter().zip(&point.gradient).map(|(x, g)| x - s * g).collect();
            let next = project_simplex(&trial);
            if next == w {
                break;
            }
            if attempt == 0 {
                let predicted = -dot_diff(&point.gradient, &next, &w);
                at_floor = predicted <= 64.0 * f64::EPSILON * point.value.abs().max(1.0);
            }
            match evaluate_point(t, &next, m)? {
                Some(p) if p.value <= point.value + opts.armijo * dot_diff(&point.gradient, &next, &w) => {
                    accepted = Some((next, p));
                    break;
                }
                Some(_) => {}
                None => rejected_disconnects += 1,
            }
            s *= 0.5;
        }
        match accepted {
            Some((next, p)) => {
                w = next;
                point = p;
                step = s;
                history.push(point.value);
            }
            None => {
                if rejected_disconnects >= opts.max_backtracks {
                    return Err(Error::Solver(
                        "every trial step disconnected the topology".into(),
                    ));
                }
                let reason = if at_floor { "roundoff_floor" } else { "line_search" };
                return Ok((w, history, it, reason));
            }
        }
    }
    Ok((w, history, opts.max_iters, "max_iters"))
}

/// Cutting-plane rounds before giving up on certifying the gap.
const MAX_CUTS: usize = 400;

/// `λ_2` of the (possibly disconnected) weighted Laplacian, and one cut
/// `c_e = (x_u − x_v)² / ‖x‖²` for each vector `x ⊥ 𝟏` drawn from the
/// eigenspace near `λ_2`. Each cut bounds `λ_2(w') ≤ c · w'` for every `w'`.
fn lambda2_cuts(t: &Topology, w: &[f64]) -> Result<(f64, Vec<Vec<f64>>)> {
    let lap = LaplacianMatrix::from_weights(t.n(), t.edges(), w);
    let spec = eig_sym(lap.as_matrix())?;
    let ev = spec.eigenvalues();
    let band = 1e-6 * spec.lambda_max().max(1.0);
    let cluster: Vec<Vec<f64>> = (1..ev.len())
        .take_while(|&i| ev[i] <= ev[1] + band)
        .take(6)
        .map(|i| spec.eigenvector(i).iter().copied().collect())
        .collect();
    let mut dirs = cluster.clone();
    for i in 0..cluster.len() {
        for j in i + 1..cluster.len() {
            for sign in [1.0, -1.0] {
                dirs.push(cluster[i].iter().zip(&cluster[j]).map(|(a, b)| a + sign * b).collect());
            }
        }
    }
    let cuts = dirs
        .into_iter()
        .filter_map(|x| {
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let norm2: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
            (norm2 > 1e-12).then(|| {
                t.edges()
                    .iter()
                    .map(|&(u, v)| (x[u] - x[v]) * (x[u] - x[v]) / norm2)
                    .collect()
            })
        })
        .collect();
    Ok((ev[1], cuts))
}

fn lp_error(e: minilp::Error) -> Error {
    Error::Solver(format!("cutting-plane LP failed: {e}"))
}

/// Maximizes `λ_2` by Kelley's cutting-plane method. `λ_2(w)` is the minimum
/// of the linear functions `w ↦ Σ_e w_e (x_u − x_v)²` over unit `x ⊥ 𝟏`, so
/// the LP over the cuts collected so far bounds the optimum from above and
/// certifies the gap to the best iterate.
/// Also returns the final gap in `λ_2` and the LP upper bound on `λ_2`.
fn cutting_plane(
    t: &Topology,
    m: &Measure,
    opts: &SolverSettings,
    w0: Vec<f64>,
    start: Point,
) -> Result<(Run, Option<f64>, f64)> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Variable> = (0..t.m()).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let level = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    lp.add_constraint(vars.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
    let cut_expr = |c: &[f64]| {
        let mut e = LinearExpr::empty();
        e.add(level, 1.0);
        for (&v, &ce) in vars.iter().zip(c) {
            e.add(v, -ce);
        }
        e
    };

    let (mut best_l2, cuts) = lambda2_cuts(t, &w0)?;
    for c in &cuts {
        lp.add_constraint(cut_expr(c), ComparisonOp::Le, 0.0);
    }
    let mut best_w = w0;
    let mut history = vec![start.value];
    let mut sol = lp.solve().map_err(lp_error)?;
    let mut previous: Option<Vec<f64>> = None;
    let rounds = opts.max_iters.min(MAX_CUTS);
    for it in 0..rounds {
        let upper = sol.objective();
        let gap = Some((upper - best_l2).max(0.0));
        if upper - best_l2 <= opts.tol * best_l2.max(1.0) {
            return Ok(((best_w, history, it, "gap_certified"), gap, upper));
        }
        let raw: Vec<f64> = vars.iter().map(|&v| sol[v]).collect();
        // new cuts no longer move the LP: its own feasibility tolerance is reached
        if previous.as_ref().is_some_and(|p| p.iter().zip(&raw).all(|(a, b)| (a - b).abs() <= 1e-15)) {
            return Ok(((best_w, history, it, "lp_floor"), gap, upper));
        }
        let w = project_simplex(&raw);
        let (l2, cuts) = lambda2_cuts(t, &w)?;
        if l2 > best_l2 {
            if let Some(p) = evaluate_point(t, &w, m)? {
                best_l2 = l2;
                best_w = w;
                history.push(p.value);
            }
        }
        for c in &cuts {
            sol = sol.add_constraint(cut_expr(c), ComparisonOp::Le, 0.0).map_err(lp_error)?;
        }
        previous = Some(raw);
    }
    let upper = sol.objective();
    Ok(((best_w, history, rounds, "cut_limit"), Some((upper - best_l2).max(0.0)), upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family};
    use approx::assert_relative_eq;

    fn topo(f: Family, n: usize) -> Topology {
        Topology::of_graph(&generate(f, n, 0).unwrap()).unwrap()
    }

    #[test]
    fn projection_properties() {
        let cases: [&[f64]; 4] = [&[0.2, 0.3, 0.5], &[2.0, -1.0, 0.0], &[-5.0, -5.0], &[0.7, 0.7, 0.7, 0.7]];
        for y in cases {
            let p = project_simplex(y);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
        assert_eq!(project_simplex(&[0.25, 0.75]), vec![0.25, 0.75]);
        assert_eq!(project_simplex(&[2.0, -1.0, 0.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = topo(Family::ErdosRenyi { p: 0.5, weights: None }, 6);
        let mut w: Vec<f64> = (0..t.m()).map(|i| 1.0 + 0.3 * i as f64).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        for m in [Measure::Energy1, Measure::Energy2, Measure::Entropy, Measure::LocalError, Measure::zeta(3.0, 1.0).unwrap()] {
            let p = evaluate_point(&t, &w, &m).unwrap().unwrap();
            for e in 0..t.m() {
                let h = 1e-7;
                let mut up = w.clone();
                let mut dn = w.clone();
                up[e] += h;
                dn[e] -= h;
                let fu = evaluate_point(&t, &up, &m).unwrap().unwrap().value;
                let fd = evaluate_point(&t, &dn, &m).unwrap().unwrap().value;
                let num = (fu - fd) / (2.0 * h);
                assert!((num - p.gradient[e]).abs() < 1e-5 * num.abs().max(1.0), "{m} edge {e}");
            }
        }
    }

    #[test]
    fn path_energy_optimum() {
        let t = topo(Family::Path, 3);
        let r = optimize_weights(&t, &Measure::Energy1, &SolverSettings::default()).unwrap();
        assert!(r.converged);
        assert!((r.weights[0] - 0.5).abs() < 1e-6 && (r.weights[1] - 0.5).abs() < 1e-6);
        assert_relative_eq!(r.objective, 4.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn triangle_uniform_optimum() {
        let t = topo(Family::Complete, 3);
        let r = optimize_weights(&t, &Measure::Energy1, &SolverSettings::default()).unwrap();
        assert_relative_eq!(r.objective, 1.0, max_relative = 1e-12);
        assert!(r.history.windows(2).all(|h| h[1] <= h[0]));
    }

    #[test]
    fn path_interior_edge_gains_weight() {
        let t = topo(Family::Path, 4);
        let r = optimize_weights(&t, &Measure::Energy1, &SolverSettings::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.weights[1] > r.weights[0] && (r.weights[0] - r.weights[2]).abs() < 1e-6);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.history.windows(2).all(|h| h[1] <= h[0]));
        let uniform = evaluate(&t.with_weights(&t.uniform()).unwrap(), &Measure::Energy1).unwrap();
        assert!(r.objective < uniform);
    }

    #[test]
    fn lambda2_measures_use_cutting_planes() {
        // best λ_2 on P_4 with unit total weight is 1/5
        let t = topo(Family::Path, 4);
        let r = optimize_weights(&t, &Measure::ConvergenceTime, &SolverSettings::default()).unwrap();
        assert_eq!(r.method, "cutting_plane");
        assert!(r.converged);
        assert_relative_eq!(r.objective, 5.0, max_relative = 1e-7);
        let lower = r.objective_lower_bound.unwrap();
        assert!(lower <= 5.0 + 1e-12 && lower >= 5.0 * (1.0 - 1e-7));
        assert!(r.history.windows(2).all(|h| h[1] <= h[0]));

        // the cycle is edge-transitive, so uniform weights are optimal
        let c = topo(Family::Cycle, 6);
        let r = optimize_weights(&c, &Measure::Hinf, &SolverSettings::default()).unwrap();
        let uniform = evaluate(&c.with_weights(&c.uniform()).unwrap(), &Measure::Hinf).unwrap();
        assert_relative_eq!(r.objective, uniform, max_relative = 1e-8);
    }

    #[test]
    fn rejects_bad_settings() {
        let t = topo(Family::Path, 3);
        let bad = SolverSettings {
            tol: 0.0,
            ..Default::default()
        };
        assert!(optimize_weights(&t, &Measure::Energy1, &bad).is_err());
    }
}
