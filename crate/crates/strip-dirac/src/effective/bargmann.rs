//! Orthogonal polynomials of the Segal-Bargmann norm
//! `N_B(u)² = ∫ |u(y₁ + iy₂)|² e^{-Hess(y,y)} dy`.

use crate::error::{invalid, solver, Result};
use gauss_quad::hermite::GaussHermite;
use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::num::NonZeroUsize;

/// Hessian spectrum in the `a/2 ≤ b/2` convention plus the angle of the
/// eigenvector belonging to `a/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianSpectrum {
    pub a: f64,
    pub b: f64,
    pub angle: f64,
}

impl HessianSpectrum {
    pub fn of(hess: &Matrix2<f64>) -> Result<HessianSpectrum> {
        let sym = (hess + hess.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let (i, j) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
            (0, 1)
        } else {
            (1, 0)
        };
        let (a, b) = (2.0 * eig.eigenvalues[i], 2.0 * eig.eigenvalues[j]);
        if !(a > 0.0) {
            return invalid(format!("Hessian is not positive definite (a = {a:e})"));
        }
        let v = eig.eigenvectors.column(i);
        Ok(HessianSpectrum {
            a,
            b,
            angle: v[1].atan2(v[0]),
        })
    }

    pub fn det(&self) -> f64 {
        0.25 * self.a * self.b
    }

    /// `B = tr Hess`, the field strength at the minimum.
    pub fn trace(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

/// Monic `N_B`-orthogonal polynomials `P_m(z) = z^m + Σ_{n<m} c_{m,n} z^n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BargmannBasis {
    pub spectrum: HessianSpectrum,
    /// `coeffs[m][n] = c_{m,n}`, with `coeffs[m][m] = 1`.
    pub coeffs: Vec<Vec<Complex64>>,
    pub norms_sq: Vec<f64>,
    /// Relative change of `N_B(z^M)²` when the rule gains four nodes.
    pub resolution_drift: f64,
}

/// Tensor Gauss-Hermite rule for `e^{-Hess(y,y)}`: points as complex numbers.
fn tensor_rule(sp: &HessianSpectrum, n: usize) -> Vec<(Complex64, f64)> {
    let gh = GaussHermite::new(NonZeroUsize::new(n).expect("positive"));
    let pts: Vec<(f64, f64)> = gh.iter().map(|(x, w)| (*x, *w)).collect();
    // eigen-coordinates η with weight e^{-(aη₁² + bη₂²)/2}; η_i = x √(2/a_i)
    let (ca, cb) = ((2.0 / sp.a).sqrt(), (2.0 / sp.b).sqrt());
    let jac = ca * cb;
    let rot = Complex64::from_polar(1.0, sp.angle);
    let mut out = Vec::with_capacity(n * n);
    for (x1, w1) in &pts {
        for (x2, w2) in &pts {
            out.push((rot * Complex64::new(ca * x1, cb * x2), jac * w1 * w2));
        }
    }
    out
}

fn monomial_norm_sq(rule: &[(Complex64, f64)], m: usize) -> f64 {
    rule.iter()
        .map(|(z, w)| w * z.norm_sqr().powi(m as i32))
        .sum()
}

impl BargmannBasis {
    /// Modified Gram-Schmidt over `1, z, …, z^M` with a tensor Gauss-Hermite rule.
    pub fn orthogonalize(hess: &Matrix2<f64>, max_degree: usize) -> Result<BargmannBasis> {
        let spectrum = HessianSpectrum::of(hess)?;
        let n = max_degree + 8;
        let rule = tensor_rule(&spectrum, n);
        let wider = tensor_rule(&spectrum, n + 4);
        let (p, q) = (
            monomial_norm_sq(&rule, max_degree),
            monomial_norm_sq(&wider, max_degree),
        );
        let resolution_drift = (p - q).abs() / q;
        if !(resolution_drift < 1e-10) {
            return solver(format!(
                "Gauss-Hermite rule under-resolves z^{max_degree} (drift {resolution_drift:e})"
            ));
        }
        let zero = Complex64::new(0.0, 0.0);
        let inner = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
            u.iter()
                .zip(v)
                .zip(&rule)
                .map(|((a, b), (_, w))| a * b.conj() * *w)
                .sum()
        };
        let mut samples: Vec<Vec<Complex64>> = Vec::new();
        let mut coeffs: Vec<Vec<Complex64>> = Vec::new();
        let mut norms_sq = Vec::new();
        for m in 0..=max_degree {
            let mut s: Vec<Complex64> = rule.iter().map(|(z, _)| z.powu(m as u32)).collect();
            let mut c = vec![zero; m + 1];
            c[m] = Complex64::new(1.0, 0.0);
            for k in 0..m {
                let r = inner(&s, &samples[k]) / norms_sq[k];
                for (x, y) in s.iter_mut().zip(&samples[k]) {
                    *x -= r * y;
                }
                for (j, ck) in coeffs[k].iter().enumerate() {
                    c[j] -= r * ck;
                }
            }
            norms_sq.push(inner(&s, &s).re);
            samples.push(s);
            coeffs.push(c);
        }
        Ok(BargmannBasis {
            spectrum,
            coeffs,
            norms_sq,
            resolution_drift,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `b_{m,j} = j!·c_{m,j}`, the coefficients of `P_m = Σ b_{m,j} Z^j / j!`.
    pub fn b(&self, m: usize, j: usize) -> Complex64 {
        self.coeffs[m][j] * factorial(j)
    }

    /// Rescaled Hermite form: with `ε = (b - a)/(ab)`,
    /// `c_{m,m-2l} = m! (-ε/2)^l / (l! (m-2l)!)` in the eigenframe.
    pub fn closed_form_coeffs(&self, m: usize) -> Vec<Complex64> {
        let sp = &self.spectrum;
        let eps = (sp.b - sp.a) / (sp.a * sp.b);
        let mut c = vec![Complex64::new(0.0, 0.0); m + 1];
        for l in 0..=m / 2 {
            let v =
                factorial(m) * (-0.5 * eps).powi(l as i32) / (factorial(l) * factorial(m - 2 * l));
            // P_m(z) = e^{imθ} P̃_m(e^{-iθ} z)
            c[m - 2 * l] = Complex64::from_polar(v, 2.0 * l as f64 * sp.angle);
        }
        c
    }

    /// `N_B(P_m)² = 2π m! (a+b)^m / (ab)^{m+1/2}`.
    pub fn closed_form_norm_sq(&self, m: usize) -> f64 {
        let sp = &self.spectrum;
        2.0 * PI * factorial(m) * (sp.a + sp.b).powi(m as i32) / (sp.a * sp.b).powf(m as f64 + 0.5)
    }

    /// `d_B^k = N_B(P_{k-1}) / (k-1)!` from the Gram-Schmidt data.
    pub fn d_b(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.coeffs.len() {
            return invalid(format!("k = {k} outside 1..={}", self.coeffs.len()));
        }
        Ok(self.norms_sq[k - 1].sqrt() / factorial(k - 1))
    }
}

/// `(d_B^k)² = π B^{k-1} / (2^{k-1} (k-1)! det^{k-1/2})` with `B = tr Hess`.
pub fn d_b_closed(k: usize, hess: &Matrix2<f64>) -> Result<f64> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let sp = HessianSpectrum::of(hess)?;
    let km = (k - 1) as f64;
    let sq =
        PI * sp.trace().powf(km) / (2f64.powf(km) * factorial(k - 1) * sp.det().powf(km + 0.5));
    Ok(sq.sqrt())
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|j| j as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_gives_monomials() {
        let basis = BargmannBasis::orthogonalize(&Matrix2::new(0.5, 0.0, 0.0, 0.5), 5).unwrap();
        for m in 0..=5 {
            for n in 0..m {
                assert!(basis.coeffs[m][n].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rotated_hessian_matches_closed_form() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let r = Matrix2::new(c, -s, s, c);
        let hess = r * Matrix2::new(0.5, 0.0, 0.0, 1.5) * r.transpose();
        let basis = BargmannBasis::orthogonalize(&hess, 4).unwrap();
        for m in 0..=4 {
            let cf = basis.closed_form_coeffs(m);
            for n in 0..=m {
                assert!((basis.coeffs[m][n] - cf[n]).norm() < 1e-9, "{m} {n}");
            }
        }
    }
}
