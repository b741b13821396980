//! `H_p` norms of the consensus transfer function `G(s) = M_n (sI + L)^{-1}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use statrs::function::beta::ln_beta;

use super::{check_hp_exponent, evaluate, Exponent, Measure};
use crate::error::{Error, Result};
use crate::graph::{centering_matrix, WeightedGraph};
use crate::quad::{integrate, QuadSettings};
use crate::spectral::{laplacian_spectrum, Spectrum};

/// `(1/2π) · B((p−1)/2, 1/2)`, the factor multiplying `ζ(p−1)` in `‖G‖_p^p`.
/// Both beta arguments are positive for `p > 1`.
pub fn hp_coefficient(p: f64) -> f64 {
    ln_beta(0.5 * (p - 1.0), 0.5).exp() / (2.0 * PI)
}

/// Closed-form `H_p` norm from the spectral zeta function.
pub fn hp_norm(g: &WeightedGraph, p: impl Into<Exponent>) -> Result<f64> {
    evaluate(g, &Measure::hp_norm(p)?)
}

/// The frequency response of the consensus network, described through the
/// Laplacian spectrum.
#[derive(Debug, Clone)]
pub struct TransferModel {
    spectrum: Spectrum,
}

impl TransferModel {
    pub fn new(g: &WeightedGraph) -> Result<Self> {
        if g.n() < 2 {
            return Err(Error::domain("transfer model needs at least two nodes"));
        }
        Ok(Self {
            spectrum: laplacian_spectrum(&g.laplacian())?,
        })
    }

    pub fn from_spectrum(spectrum: Spectrum) -> Self {
        Self { spectrum }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Singular values of `G(jω)` in eigenvalue order: `0` for the consensus
    /// mode, then `(ω² + λ_i²)^{-1/2}`.
    pub fn singular_values(&self, omega: f64) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .spectrum
            .eigenvalues()
            .iter()
            .map(|&l| (omega * omega + l * l).sqrt().recip())
            .collect();
        s[0] = 0.0;
        s
    }

    /// `Σ σ_i(ω)^p`, the `p`-th power of the Schatten `p`-norm of `G(jω)`.
    pub fn schatten_pow(&self, omega: f64, p: f64) -> f64 {
        self.spectrum
            .nonzero()
            .iter()
            .map(|&l| (omega * omega + l * l).powf(-0.5 * p))
            .sum()
    }

    /// `G(jω)^* G(jω) = M (ω² I + L²)^{-1} M`, formed by a dense solve rather
    /// than from the spectrum. Requires `ω ≠ 0`.
    pub fn gram(&self, omega: f64, laplacian: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = laplacian.nrows();
        if n != self.spectrum.n() {
            return Err(Error::Dimension {
                expected: self.spectrum.n(),
                found: n,
            });
        }
        if omega == 0.0 {
            return Err(Error::domain("gram matrix needs a nonzero frequency"));
        }
        let shifted = laplacian * laplacian + DMatrix::identity(n, n) * (omega * omega);
        let m = centering_matrix(n);
        let x = shifted
            .lu()
            .solve(&m)
            .ok_or_else(|| Error::numerical("singular shifted system"))?;
        let out = &m * x;
        Ok((&out + out.transpose()) * 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpNumeric {
    pub value: f64,
    /// Estimated absolute error of `‖G‖_p^p`.
    pub error: f64,
    pub evaluations: usize,
}

/// `H_p` norm by integrating `Σ σ_i(ω)^p` over frequency.
///
/// The half-line is split at `ω₀ = λ_2`. The head `[0, ω₀]` is integrated
/// directly. The tail uses `ω = ω₀ u^{-1/(p−1)}`, under which the integrand
/// becomes `a ω₀ Σ (ω₀² + λ_i² u^{2a})^{-p/2}` with `a = 1/(p−1)`, bounded
/// on `u ∈ (0, 1]` for every `p > 1`.
pub fn hp_norm_numeric(g: &WeightedGraph, p: f64, settings: &QuadSettings) -> Result<HpNumeric> {
    check_hp_exponent(Exponent::Finite(p))?;
    let model = TransferModel::new(g)?;
    hp_numeric_from_model(&model, p, settings)
}

pub(crate) fn hp_numeric_from_model(model: &TransferModel, p: f64, settings: &QuadSettings) -> Result<HpNumeric> {
    check_hp_exponent(Exponent::Finite(p))?;
    let lambdas = model.spectrum().nonzero();
    let w0 = lambdas[0];
    let a = 1.0 / (p - 1.0);
    let head = integrate(|w| model.schatten_pow(w, p), 0.0, w0, settings)?;
    let tail = integrate(
        |u: f64| {
            let ua = u.powf(2.0 * a);
            a * w0
                * lambdas
                    .iter()
                    .map(|&l| (w0 * w0 + l * l * ua).powf(-0.5 * p))
                    .sum::<f64>()
        },
        0.0,
        1.0,
        settings,
    )?;
    // (1/2π) ∫_ℝ = (1/π) ∫_0^∞ by symmetry in ω
    let pow = (head.value + tail.value) / PI;
    Ok(HpNumeric {
        value: pow.powf(1.0 / p),
        error: (head.error + tail.error) / PI,
        evaluations: head.evaluations + tail.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family};
    use crate::measures::{evaluate, zeta_of};
    use crate::spectral::eig_sym;
    use approx::assert_relative_eq;

    fn unit(f: Family, n: usize) -> WeightedGraph {
        generate(f, n, 0).unwrap()
    }

    #[test]
    fn coefficient_special_values() {
        assert_relative_eq!(hp_coefficient(2.0), 0.5, max_relative = 1e-13);
        assert_relative_eq!(hp_coefficient(3.0), 1.0 / PI, max_relative = 1e-13);
        // B(3/2, 1/2) = π/2
        assert_relative_eq!(hp_coefficient(4.0), 0.25, max_relative = 1e-13);
    }

    #[test]
    fn closed_form_examples() {
        let k3 = unit(Family::Complete, 3);
        assert_relative_eq!(hp_norm(&k3, 2.0).unwrap(), (1.0f64 / 3.0).sqrt(), max_relative = 1e-13);
        let want = (2.0 / (9.0 * PI)).powf(1.0 / 3.0);
        assert_relative_eq!(hp_norm(&k3, 3.0).unwrap(), want, max_relative = 1e-13);
        let p3 = unit(Family::Path, 3);
        assert_relative_eq!(hp_norm(&p3, Exponent::Infinity).unwrap(), 1.0, max_relative = 1e-13);
        assert!(matches!(hp_norm(&p3, 1.0), Err(Error::Domain(_))));
        assert!(matches!(hp_norm(&p3, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn h2_squared_is_energy() {
        for seed in 0..10 {
            let g = generate(
                Family::ErdosRenyi {
                    p: 0.4,
                    weights: Some((0.2, 3.0)),
                },
                9,
                seed,
            )
            .unwrap();
            let h2 = hp_norm(&g, 2.0).unwrap();
            let e1 = evaluate(&g, &Measure::Energy1).unwrap();
            assert_relative_eq!(h2 * h2, e1, max_relative = 1e-12);
            assert_relative_eq!(evaluate(&g, &Measure::H2).unwrap(), h2, max_relative = 1e-12);
        }
    }

    #[test]
    fn numeric_examples() {
        let s = QuadSettings::default();
        let k3 = unit(Family::Complete, 3);
        let v = hp_norm_numeric(&k3, 2.0, &s).unwrap().value;
        assert!((v - 0.577_350_269_189_625_7).abs() < 1e-6);
        let c4 = unit(Family::Cycle, 4);
        let v = hp_norm_numeric(&c4, 2.0, &s).unwrap().value;
        assert!((v - 0.625f64.sqrt()).abs() < 1e-6);
        let p3 = unit(Family::Path, 3);
        let num = hp_norm_numeric(&p3, 3.0, &s).unwrap().value;
        let exact = hp_norm(&p3, 3.0).unwrap();
        assert!((num - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn numeric_agrees_across_exponents() {
        let s = QuadSettings::default();
        let g = generate(
            Family::ErdosRenyi {
                p: 0.3,
                weights: Some((0.5, 2.0)),
            },
            12,
            5,
        )
        .unwrap();
        for p in [1.1, 1.5, 2.0, 3.0, 4.0, 7.0, 15.0] {
            let num = hp_norm_numeric(&g, p, &s).unwrap().value;
            let exact = hp_norm(&g, p).unwrap();
            assert!((num - exact).abs() / exact < 1e-8, "p = {p}: {num} vs {exact}");
        }
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let g = generate(
            Family::ErdosRenyi {
                p: 0.5,
                weights: Some((0.5, 2.0)),
            },
            7,
            2,
        )
        .unwrap();
        let model = TransferModel::new(&g).unwrap();
        let l = g.laplacian().into_matrix();
        for omega in [0.1, 1.0, 7.5] {
            let gram = model.gram(omega, &l).unwrap();
            let got = eig_sym(&gram).unwrap();
            let mut want: Vec<f64> = model.singular_values(omega).iter().map(|s| s * s).collect();
            want.sort_by(f64::total_cmp);
            for (a, b) in got.eigenvalues().iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
            let sum: f64 = model.singular_values(omega).iter().map(|s| s.powi(3)).sum();
            assert_relative_eq!(sum, model.schatten_pow(omega, 3.0), max_relative = 1e-12);
        }
        assert!(model.gram(0.0, &l).is_err());
    }

    #[test]
    fn zeta_shift_identity() {
        let g = unit(Family::Cycle, 5);
        let spec = laplacian_spectrum(&g.laplacian()).unwrap();
        for p in [1.5, 2.5, 5.0] {
            let lhs = hp_norm(&g, p).unwrap().powf(p);
            let rhs = hp_coefficient(p) * zeta_of(spec.nonzero(), p - 1.0);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }
}
