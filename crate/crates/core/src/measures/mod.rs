//! The systemic-measure catalog.
//!
//! Every measure except `local_error` is a symmetric function of the nonzero
//! Laplacian eigenvalues `λ_2, …, λ_n`; those are evaluated through
//! [`evaluate_nonzero`], which also accepts arbitrary positive vectors so the
//! Schur-convexity harness can probe it directly.

mod hp;
mod schur_fn;

pub use hp::{hp_coefficient, hp_norm, hp_norm_numeric, HpNumeric, TransferModel};
pub use schur_fn::{verify_decreasing_convex, CustomFn, SchurFn};

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::spectral::{consensus_spectrum, laplacian_spectrum, zero_tol, Spectrum};

/// An exponent in `[1, ∞]`; infinity is a distinguished value rather than a
/// large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::domain(format!("invalid exponent `{s}`")))?;
                Ok(Exponent::from(p))
            }
        }
    }
}

impl From<f64> for Exponent {
    fn from(p: f64) -> Self {
        if p == f64::INFINITY {
            Exponent::Infinity
        } else {
            Exponent::Finite(p)
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// Selects one measure from the catalog, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    /// `k · ζ(p)^{1/p}`; `k/λ_2` at `p = ∞`.
    Zeta { p: Exponent, k: f64 },
    /// `H_p` norm of the transfer function from disturbance to output.
    HpNorm { p: Exponent },
    H2,
    Hinf,
    /// `Σ 1/(2λ_i)`
    Energy1,
    /// `Σ 1/(2λ_i²)`
    Energy2,
    /// `1/λ_2`
    ConvergenceTime,
    /// `½ Σ_v 1/d_v`
    LocalError,
    /// `−Σ log λ_i`
    Entropy,
    /// `Σ f(λ_i)` for a registered decreasing convex `f`.
    SchurSum(SchurFn),
}

/// Which columns of the measure table a measure belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub schur_convex: bool,
    pub convex: bool,
}

pub const MEASURE_IDS: [&str; 10] = [
    "zeta_measure",
    "hp_norm",
    "h2",
    "hinf",
    "energy1",
    "energy2",
    "convergence_time",
    "local_error",
    "entropy",
    "schur_sum",
];

impl Measure {
    pub fn zeta(p: impl Into<Exponent>, k: f64) -> Result<Self> {
        let p = p.into();
        if let Exponent::Finite(x) = p {
            if !(x >= 1.0) {
                return Err(Error::domain(format!("zeta measure needs 1 <= p <= inf, got {x}")));
            }
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::domain(format!("zeta measure needs k > 0, got {k}")));
        }
        Ok(Measure::Zeta { p, k })
    }

    pub fn hp_norm(p: impl Into<Exponent>) -> Result<Self> {
        let p = p.into();
        check_hp_exponent(p)?;
        Ok(Measure::HpNorm { p })
    }

    /// Builds a measure from its identifier and optional parameters, as
    /// given on the command line.
    pub fn from_parts(
        id: &str,
        p: Option<Exponent>,
        k: Option<f64>,
        f: Option<&str>,
    ) -> Result<Self> {
        let need_p = || p.ok_or_else(|| Error::domain(format!("measure `{id}` needs --p")));
        Ok(match id {
            "zeta_measure" | "zeta" => Measure::zeta(need_p()?, k.unwrap_or(1.0))?,
            "hp_norm" => Measure::hp_norm(need_p()?)?,
            "h2" => Measure::H2,
            "hinf" => Measure::Hinf,
            "energy1" => Measure::Energy1,
            "energy2" => Measure::Energy2,
            "convergence_time" => Measure::ConvergenceTime,
            "local_error" => Measure::LocalError,
            "entropy" => Measure::Entropy,
            "schur_sum" => {
                let f = f.ok_or_else(|| Error::domain("measure `schur_sum` needs --f"))?;
                Measure::SchurSum(SchurFn::parse(f)?)
            }
            other => return Err(Error::domain(format!("unknown measure `{other}`"))),
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Measure::Zeta { .. } => "zeta_measure",
            Measure::HpNorm { .. } => "hp_norm",
            Measure::H2 => "h2",
            Measure::Hinf => "hinf",
            Measure::Energy1 => "energy1",
            Measure::Energy2 => "energy2",
            Measure::ConvergenceTime => "convergence_time",
            Measure::LocalError => "local_error",
            Measure::Entropy => "entropy",
            Measure::SchurSum(_) => "schur_sum",
        }
    }

    pub fn classification(&self) -> Classification {
        let (schur_convex, convex) = match self {
            Measure::ConvergenceTime | Measure::Energy1 | Measure::Zeta { .. } => (true, true),
            Measure::Energy2 | Measure::Entropy | Measure::SchurSum(_) => (true, false),
            Measure::HpNorm { .. } | Measure::H2 | Measure::Hinf => (true, false),
            Measure::LocalError => (false, true),
        };
        Classification {
            schur_convex,
            convex,
        }
    }

    /// Positively homogeneous of degree −1 under weight scaling.
    pub fn is_homogeneous(&self) -> bool {
        match self {
            Measure::Zeta { .. }
            | Measure::Hinf
            | Measure::ConvergenceTime
            | Measure::Energy1
            | Measure::LocalError => true,
            Measure::HpNorm { p } => p.is_infinite(),
            _ => false,
        }
    }

    /// Never negative; entropy is the only catalog entry that can be.
    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, Measure::Entropy)
    }

    /// A function of the Laplacian eigenvalues alone.
    pub fn is_spectral(&self) -> bool {
        !matches!(self, Measure::LocalError)
    }

    /// Depends on `λ_2` only, so it is not differentiable where `λ_2` is
    /// repeated.
    pub fn is_lambda2_only(&self) -> bool {
        match self {
            Measure::Hinf | Measure::ConvergenceTime => true,
            Measure::Zeta { p, .. } | Measure::HpNorm { p } => p.is_infinite(),
            _ => false,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Zeta { p, k } => write!(f, "zeta_measure(p={p},k={k})"),
            Measure::HpNorm { p } => write!(f, "hp_norm(p={p})"),
            Measure::SchurSum(func) => write!(f, "schur_sum(f={func})"),
            other => f.write_str(other.id()),
        }
    }
}

pub(crate) fn check_hp_exponent(p: Exponent) -> Result<()> {
    match p {
        Exponent::Finite(x) if !(x > 1.0 && x.is_finite()) => Err(Error::domain(format!(
            "hp_norm needs 1 < p <= inf, got {x}"
        ))),
        _ => Ok(()),
    }
}

/// `ζ(p) = Σ_{i≥2} λ_i^{−p}` over a vector of nonzero eigenvalues.
pub fn zeta_of(nonzero: &[f64], p: f64) -> f64 {
    nonzero.iter().map(|&x| x.powf(-p)).sum()
}

/// `(Σ x_i^{−p})^{1/p}`, computed relative to the smallest entry so large
/// exponents do not overflow.
fn power_mean_inverse(x: &[f64], p: f64) -> f64 {
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let s: f64 = x.iter().map(|&v| (v / min).powf(-p)).sum();
    s.powf(1.0 / p) / min
}

fn min_of(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Evaluates a spectral measure on the nonzero eigenvalues. The vector need
/// not be sorted but every entry must be positive.
pub fn evaluate_nonzero(x: &[f64], m: &Measure) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::domain("measures need at least two nodes"));
    }
    if x.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::domain("eigenvalues must be positive and finite"));
    }
    let half_sum = |g: &dyn Fn(f64) -> f64| x.iter().map(|&v| g(v)).sum::<f64>();
    Ok(match m {
        Measure::Zeta { p, k } => match p {
            Exponent::Finite(p) => k * power_mean_inverse(x, *p),
            Exponent::Infinity => k / min_of(x),
        },
        Measure::HpNorm { p } => {
            check_hp_exponent(*p)?;
            match p {
                Exponent::Finite(p) => (hp_coefficient(*p) * zeta_of(x, p - 1.0)).powf(1.0 / p),
                Exponent::Infinity => 1.0 / min_of(x),
            }
        }
        Measure::H2 => half_sum(&|v| 0.5 / v).sqrt(),
        Measure::Hinf | Measure::ConvergenceTime => 1.0 / min_of(x),
        Measure::Energy1 => half_sum(&|v| 0.5 / v),
        Measure::Energy2 => half_sum(&|v| 0.5 / (v * v)),
        Measure::Entropy => -half_sum(&f64::ln),
        Measure::SchurSum(f) => half_sum(&|v| f.eval(v)),
        Measure::LocalError => {
            return Err(Error::domain("local_error is not a function of the spectrum"))
        }
    })
}

/// `∂ρ/∂λ_i` for each entry of `x`. For measures that depend on `λ_2` alone
/// this is the subgradient that puts all weight on the smallest entry.
pub fn eigen_gradient(x: &[f64], m: &Measure) -> Result<Vec<f64>> {
    let value = evaluate_nonzero(x, m)?;
    if m.is_lambda2_only() {
        let (idx, &min) = x
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let scale = match m {
            Measure::Zeta { k, .. } => *k,
            _ => 1.0,
        };
        let mut g = vec![0.0; x.len()];
        g[idx] = -scale / (min * min);
        return Ok(g);
    }
    let g = x.iter().map(|&v| match m {
        // ρ = k S^{1/p}, S = Σ λ^{-p}  ⇒  ∂ρ/∂λ = −(ρ/S) λ^{−p−1}
        Measure::Zeta { p: Exponent::Finite(p), k } => {
            let s = (value / k).powf(*p);
            -(value / s) * v.powf(-p - 1.0)
        }
        // ρ = (c S)^{1/p}, S = Σ λ^{1−p}
        Measure::HpNorm { p: Exponent::Finite(p) } => {
            let cs = value.powf(*p);
            (value / (p * cs)) * hp_coefficient(*p) * (1.0 - p) * v.powf(-p)
        }
        Measure::H2 => -0.25 / (value * v * v),
        Measure::Energy1 => -0.5 / (v * v),
        Measure::Energy2 => -1.0 / (v * v * v),
        Measure::Entropy => -1.0 / v,
        Measure::SchurSum(f) => f.derivative(v),
        _ => unreachable!("handled above"),
    });
    Ok(g.collect())
}

fn require_connected(g: &WeightedGraph) -> Result<()> {
    if g.n() < 2 {
        return Err(Error::domain("measures need at least two nodes"));
    }
    if !g.is_connected() {
        return Err(Error::Connectivity {
            lambda2: 0.0,
            zero_tol: zero_tol(0.0),
        });
    }
    Ok(())
}

/// `½ Σ 1/d_v`.
pub fn local_error(degrees: &[f64]) -> f64 {
    0.5 * degrees.iter().map(|d| 1.0 / d).sum::<f64>()
}

pub fn evaluate(g: &WeightedGraph, m: &Measure) -> Result<f64> {
    Network::new(g.clone()).evaluate(m)
}

/// Evaluates a measure on a symmetric matrix that need not be a Laplacian,
/// such as an orthogonal similarity `U L Uᵀ`. Spectral measures use its
/// eigenvalues; `local_error` reads degrees from the diagonal.
pub fn evaluate_matrix(mat: &DMatrix<f64>, m: &Measure) -> Result<f64> {
    if let Measure::LocalError = m {
        let d: Vec<f64> = mat.diagonal().iter().copied().collect();
        if d.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::domain("local_error needs positive diagonal"));
        }
        return Ok(local_error(&d));
    }
    let spec = consensus_spectrum(mat)?;
    evaluate_nonzero(spec.nonzero(), m)
}

/// `ζ_G(p)` for any real `p`.
pub fn zeta(g: &WeightedGraph, p: f64) -> Result<f64> {
    let net = Network::new(g.clone());
    Ok(zeta_of(net.spectrum()?.nonzero(), p))
}

pub fn zeta_measure(g: &WeightedGraph, p: impl Into<Exponent>, k: f64) -> Result<f64> {
    evaluate(g, &Measure::zeta(p, k)?)
}

/// Entropy from the weighted spanning-tree count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeEntropy {
    pub n: usize,
    pub tau: f64,
    /// `−log(n τ)`, equal to `−Σ_{i≥2} log λ_i` by the matrix-tree theorem.
    pub value: f64,
    /// `log(n / τ)`, the closed form as usually printed. It disagrees with
    /// the spectral entropy whenever `n > 1` and is reported only for
    /// comparison.
    pub printed_form: f64,
}

pub const TREE_ENTROPY_WARNING: &str = "the closed form log(n/tau) does not equal -sum(log lambda_i); \
the matrix-tree theorem gives -log(n*tau), which is what is reported as the entropy \
(e.g. unit K_3: -log 9 vs log(3/3) = 0)";

pub fn entropy_via_trees(g: &WeightedGraph) -> Result<TreeEntropy> {
    require_connected(g)?;
    let n = g.n();
    let tau = g.spanning_tree_count();
    Ok(TreeEntropy {
        n,
        tau,
        value: -(n as f64 * tau).ln(),
        printed_form: (n as f64 / tau).ln(),
    })
}

/// A graph together with a lazily computed, cached Laplacian spectrum.
#[derive(Debug)]
pub struct Network {
    graph: WeightedGraph,
    spectrum: OnceLock<Result<Spectrum>>,
}

impl Network {
    pub fn new(graph: WeightedGraph) -> Self {
        Self {
            graph,
            spectrum: OnceLock::new(),
        }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn spectrum(&self) -> Result<&Spectrum> {
        self.spectrum
            .get_or_init(|| {
                if self.graph.n() < 2 {
                    return Err(Error::domain("measures need at least two nodes"));
                }
                laplacian_spectrum(&self.graph.laplacian())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn evaluate(&self, m: &Measure) -> Result<f64> {
        match m {
            Measure::LocalError => {
                require_connected(&self.graph)?;
                Ok(local_error(&self.graph.degrees()))
            }
            _ => evaluate_nonzero(self.spectrum()?.nonzero(), m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family};
    use approx::assert_relative_eq;

    fn k3() -> WeightedGraph {
        generate(Family::Complete, 3, 0).unwrap()
    }
    fn p3() -> WeightedGraph {
        generate(Family::Path, 3, 0).unwrap()
    }
    fn c4() -> WeightedGraph {
        generate(Family::Cycle, 4, 0).unwrap()
    }
    fn k4() -> WeightedGraph {
        generate(Family::Complete, 4, 0).unwrap()
    }

    #[test]
    fn zeta_examples() {
        assert_relative_eq!(zeta(&k4(), 1.0).unwrap(), 0.75, max_relative = 1e-13);
        assert_relative_eq!(zeta(&p3(), 1.0).unwrap(), 4.0 / 3.0, max_relative = 1e-13);
        assert_relative_eq!(zeta(&c4(), 2.0).unwrap(), 9.0 / 16.0, max_relative = 1e-13);
    }

    #[test]
    fn zeta_measure_examples() {
        assert_relative_eq!(
            zeta_measure(&k3(), Exponent::Infinity, 1.0).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            zeta_measure(&p3(), 1.0, 0.5).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-13
        );
        assert!(matches!(zeta_measure(&p3(), 0.5, 1.0), Err(Error::Domain(_))));
        assert!(matches!(zeta_measure(&p3(), 2.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn zeta_measure_halves_under_doubling() {
        let g = generate(
            Family::ErdosRenyi {
                p: 0.5,
                weights: Some((0.5, 2.0)),
            },
            8,
            3,
        )
        .unwrap();
        let g2 = g.scaled(2.0).unwrap();
        for p in [Exponent::Finite(1.0), Exponent::Finite(3.5), Exponent::Infinity] {
            for k in [0.5, 2.0] {
                let a = zeta_measure(&g, p, k).unwrap();
                let b = zeta_measure(&g2, p, k).unwrap();
                assert_relative_eq!(b, a / 2.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn table_examples() {
        assert_relative_eq!(evaluate(&p3(), &Measure::LocalError).unwrap(), 1.25);
        assert_relative_eq!(
            evaluate(&k3(), &Measure::Entropy).unwrap(),
            -2.0 * 3f64.ln(),
            max_relative = 1e-13
        );
        assert_relative_eq!(evaluate(&c4(), &Measure::Energy1).unwrap(), 0.625, max_relative = 1e-13);
        assert_relative_eq!(
            evaluate(&c4(), &Measure::Energy2).unwrap(),
            0.5 * (0.25 + 0.25 + 1.0 / 16.0),
            max_relative = 1e-13
        );
        assert_relative_eq!(evaluate(&p3(), &Measure::ConvergenceTime).unwrap(), 1.0, max_relative = 1e-13);
        assert_relative_eq!(evaluate(&p3(), &Measure::Hinf).unwrap(), 1.0, max_relative = 1e-13);
        assert_relative_eq!(
            evaluate(&k3(), &Measure::H2).unwrap(),
            (1.0f64 / 3.0).sqrt(),
            max_relative = 1e-13
        );
        let ssum = Measure::SchurSum(SchurFn::Inverse);
        assert_relative_eq!(evaluate(&p3(), &ssum).unwrap(), 2.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn disconnected_and_tiny_inputs() {
        let g = WeightedGraph::unit_weighted(3, &[(0, 1)]).unwrap();
        for m in [Measure::Energy1, Measure::LocalError, Measure::Entropy] {
            assert!(matches!(evaluate(&g, &m), Err(Error::Connectivity { .. })));
        }
        let single = WeightedGraph::empty(1).unwrap();
        assert!(matches!(evaluate(&single, &Measure::Energy1), Err(Error::Domain(_))));
    }

    #[test]
    fn trees_entropy_examples() {
        let cases = [(k3(), -(9f64).ln()), (p3(), -(3f64).ln()), (c4(), -(16f64).ln())];
        for (g, expect) in cases {
            let t = entropy_via_trees(&g).unwrap();
            assert_relative_eq!(t.value, expect, max_relative = 1e-12);
            assert_relative_eq!(
                t.value,
                evaluate(&g, &Measure::Entropy).unwrap(),
                max_relative = 1e-12
            );
        }
        let t = entropy_via_trees(&k3()).unwrap();
        assert_relative_eq!(t.tau, 3.0, max_relative = 1e-12);
        assert!(t.printed_form.abs() < 1e-12);
    }

    #[test]
    fn descriptor_parsing() {
        let m = Measure::from_parts("zeta_measure", Some("inf".parse().unwrap()), Some(2.0), None).unwrap();
        assert_eq!(m, Measure::Zeta { p: Exponent::Infinity, k: 2.0 });
        assert_eq!(m.to_string(), "zeta_measure(p=inf,k=2)");
        assert!(Measure::from_parts("zeta_measure", None, None, None).is_err());
        assert!(Measure::from_parts("hp_norm", Some(Exponent::Finite(1.0)), None, None).is_err());
        assert!(Measure::from_parts("schur_sum", None, None, Some("inverse_sq")).is_ok());
        assert!(Measure::from_parts("nope", None, None, None).is_err());
        for id in MEASURE_IDS {
            let m = Measure::from_parts(id, Some(Exponent::Finite(2.0)), None, Some("inverse"));
            assert_eq!(m.unwrap().id(), id);
        }
    }

    #[test]
    fn eigen_gradient_matches_finite_differences() {
        let x = [0.7, 1.3, 2.9, 4.1];
        let ms = [
            Measure::zeta(2.5, 0.7).unwrap(),
            Measure::hp_norm(3.0).unwrap(),
            Measure::H2,
            Measure::Energy1,
            Measure::Energy2,
            Measure::Entropy,
            Measure::SchurSum(SchurFn::ExpDecay(0.5)),
            Measure::ConvergenceTime,
        ];
        for m in &ms {
            let g = eigen_gradient(&x, m).unwrap();
            for i in 0..x.len() {
                let h = 1e-6;
                let mut up = x;
                let mut dn = x;
                up[i] += h;
                dn[i] -= h;
                let fd = (evaluate_nonzero(&up, m).unwrap() - evaluate_nonzero(&dn, m).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6, "{m} index {i}: fd {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn high_exponent_zeta_tends_to_inverse_lambda2() {
        for seed in 0..20 {
            let g = generate(
                Family::ErdosRenyi {
                    p: 0.4,
                    weights: Some((0.5, 2.0)),
                },
                10,
                seed,
            )
            .unwrap();
            let net = Network::new(g);
            let spec = net.spectrum().unwrap();
            let l2 = spec.lambda2().unwrap();
            let l3 = spec.eigenvalues()[2];
            if (l3 - l2) < 1e-3 * l2 {
                continue;
            }
            let v = net.evaluate(&Measure::zeta(64.0, 1.0).unwrap()).unwrap();
            assert!((v - 1.0 / l2).abs() < 1e-3 / l2);
        }
    }
}
