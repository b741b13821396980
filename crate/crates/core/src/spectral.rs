//! Symmetric eigendecomposition and the Laplacian pseudo-inverse.
//!
//! The eigensolver reduces the matrix to tridiagonal form with Householder
//! reflections and then diagonalizes it with implicit-shift QL sweeps
//! (the EISPACK `tred2`/`tql2` pair). Output is sorted ascending with a
//! fixed eigenvector sign convention, so identical inputs give identical
//! bits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::LaplacianMatrix;

/// QL sweeps allowed per eigenvalue before giving up.
pub const MAX_SWEEPS: usize = 50;

/// Relative asymmetry accepted by [`eig_sym`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Threshold separating the structural zero eigenvalue from `λ_2`.
pub fn zero_tol(lambda_max: f64) -> f64 {
    1e-8 * lambda_max.max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    residual: f64,
}

impl Spectrum {
    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors, one per column, in eigenvalue order.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    /// `max_i ‖M v_i − λ_i v_i‖_∞` against the input matrix.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `λ_2, …, λ_n`: every eigenvalue but the structural zero.
    pub fn nonzero(&self) -> &[f64] {
        &self.eigenvalues[1.min(self.eigenvalues.len())..]
    }

    pub fn lambda2(&self) -> Option<f64> {
        self.eigenvalues.get(1).copied()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Largest entry of `|VᵀV − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let v = &self.eigenvectors;
        let gram = v.transpose() * v;
        let n = gram.nrows();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.eigenvectors * d * self.eigenvectors.transpose()
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn eig_sym(m: &DMatrix<f64>) -> Result<Spectrum> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            found: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::domain(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
            residual: 0.0,
        });
    }

    // Row-major working copy of the lower triangle, symmetrized.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e);
    ql_implicit(n, &mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let sign = (0..n)
            .map(|r| v[r * n + k])
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, f64::signum);
        for r in 0..n {
            vecs[(r, col)] = sign * v[r * n + k];
        }
    }

    // Rayleigh quotients are second-order accurate in the eigenvector error,
    // which removes the last-ulp drift of the QL shifts.
    let mv = m * &vecs;
    let mut eigenvalues = eigenvalues;
    for (i, lambda) in eigenvalues.iter_mut().enumerate() {
        let col = vecs.column(i);
        *lambda = col.dot(&mv.column(i)) / col.dot(&col);
    }
    for i in 1..n {
        eigenvalues[i] = eigenvalues[i].max(eigenvalues[i - 1]);
    }

    let residual = residual(m, &eigenvalues, &vecs);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: vecs,
        residual,
    })
}

fn residual(m: &DMatrix<f64>, values: &[f64], vecs: &DMatrix<f64>) -> f64 {
    let mv = m * vecs;
    let mut worst: f64 = 0.0;
    for (i, &lambda) in values.iter().enumerate() {
        for r in 0..m.nrows() {
            worst = worst.max((mv[(r, i)] - lambda * vecs[(r, i)]).abs());
        }
    }
    worst
}

/// Householder reduction to symmetric tridiagonal form. On return `d` holds
/// the diagonal, `e[1..]` the subdiagonal and `v` the accumulated
/// orthogonal transform.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for x in e[..i].iter_mut() {
                *x = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal matrix, accumulating rotations
/// into `v`. Eigenvalues are left unsorted in `d`.
fn ql_implicit(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let at = |r: usize, c: usize| r * n + c;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut shift_total = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > f64::EPSILON * tst1 {
            m += 1;
        }

        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::Numerical {
                        msg: format!("QL iteration did not converge for eigenvalue {l}"),
                        iterations: Some(sweeps - 1),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in d[l + 2..n].iter_mut() {
                    *x -= h;
                }
                shift_total += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[at(k, i + 1)];
                        v[at(k, i + 1)] = s * v[at(k, i)] + c * h;
                        v[at(k, i)] = c * v[at(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= f64::EPSILON * tst1 {
                    break;
                }
            }
        }
        d[l] += shift_total;
        e[l] = 0.0;
    }
    Ok(())
}

/// Spectrum of a matrix assumed to be a connected-graph Laplacian (or an
/// orthogonal similarity of one): `λ_1` is snapped to exactly zero and
/// `λ_2` must clear [`zero_tol`].
pub fn consensus_spectrum(m: &DMatrix<f64>) -> Result<Spectrum> {
    let mut spec = eig_sym(m)?;
    let n = spec.n();
    if n == 0 {
        return Err(Error::domain("empty matrix"));
    }
    let tol = zero_tol(spec.lambda_max());
    let first = spec.eigenvalues[0];
    if first.abs() >= tol {
        return Err(Error::numerical(format!(
            "smallest eigenvalue {first:e} is not a structural zero (tolerance {tol:e})"
        )));
    }
    if n > 1 && spec.eigenvalues[1] <= tol {
        return Err(Error::Connectivity {
            lambda2: spec.eigenvalues[1],
            zero_tol: tol,
        });
    }
    spec.eigenvalues[0] = 0.0;
    Ok(spec)
}

pub fn laplacian_spectrum(l: &LaplacianMatrix) -> Result<Spectrum> {
    consensus_spectrum(l.as_matrix())
}

/// `L† = Σ_{i≥2} v_i v_iᵀ / λ_i`.
pub fn pseudo_inverse(l: &LaplacianMatrix) -> Result<DMatrix<f64>> {
    Ok(pseudo_inverse_from(&laplacian_spectrum(l)?))
}

pub fn pseudo_inverse_from(spec: &Spectrum) -> DMatrix<f64> {
    let n = spec.n();
    let mut out = DMatrix::zeros(n, n);
    for i in 1..n {
        let v = spec.eigenvectors.column(i);
        out += (v * v.transpose()) / spec.eigenvalues[i];
    }
    out
}

/// `A ⪯ B` in the positive semidefinite order, i.e. `λ_min(B − A) ≥ −tol`.
pub fn psd_order(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    let diff = b - a;
    let spec = eig_sym(&diff)?;
    Ok(spec.eigenvalues.first().is_none_or(|&min| min >= -tol))
}
