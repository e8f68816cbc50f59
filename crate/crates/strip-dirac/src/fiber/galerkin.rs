//! Variational route to the first fiber eigenvalues.
//!
//! The form `Q^±(ψ) = ‖Lψ‖² + λh‖ψ‖²_∂ − λ²‖ψ‖²` with `L = ±h∂_t + ξ + t` is
//! assembled on a basis made of the normalized kernel `k̂` of `L` and an
//! orthonormal basis of the Legendre polynomials orthogonal to `k̂`. Since
//! `Lk̂ = 0` exactly, the only coupling between `k̂` and the rest is through
//! the boundary term, and the ground energy follows from a secular equation
//! that keeps full relative accuracy even when `μ₁⁺` is exponentially small.

use super::Sign;
use crate::error::{solver, Result};
use crate::numerics::legendre;
use crate::numerics::quad::Rule;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default polynomial degree for the Galerkin space.
pub fn default_degree(h: f64, delta: f64) -> usize {
    ((40.0 + 12.0 * delta / h.sqrt()).ceil() as usize).min(400)
}

/// Quadrature adapted to Gaussian layers of width `√h` and boundary layers
/// of width `h` on `[-δ, δ]`.
pub(crate) fn adapted_rule(xi: f64, h: f64, delta: f64, n: usize) -> Rule {
    let mut br = vec![-delta, delta];
    let mut d = h / 16.0;
    while d < 2.0 * delta {
        br.push(-delta + d);
        br.push(delta - d);
        d *= 2.0;
    }
    let c = -xi;
    let sh = h.sqrt();
    for k in [0.0, 0.5, 1.0, 2.0, 3.0, 4.5, 6.5] {
        br.push(c + k * sh);
        br.push(c - k * sh);
    }
    let mut br: Vec<f64> = br.into_iter().filter(|x| x.abs() <= delta).collect();
    br.sort_by(f64::total_cmp);
    br.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * h);
    Rule::piecewise(n, &br)
}

/// Assembled form `Q^±` on the kernel-augmented Galerkin space.
#[derive(Debug, Clone)]
pub struct FiberForm {
    pub sign: Sign,
    pub xi: f64,
    pub h: f64,
    pub delta: f64,
    /// `k̂(δ), k̂(-δ)`.
    pub k_bd: [f64; 2],
    /// Values of the complement basis at `δ` (row 0) and `-δ` (row 1).
    pub r_bd: [DVector<f64>; 2],
    /// `⟨L r_i, L r_j⟩`.
    pub stiff: DMatrix<f64>,
    /// `⟨r_i', r_j'⟩`, for H¹ norms.
    pub grad_gram: DMatrix<f64>,
    /// `⟨r_i', k̂'⟩` and `‖k̂'‖²`.
    pub grad_cross: DVector<f64>,
    pub k_grad_sq: f64,
}

/// Lowest eigenpair of the assembled form at fixed `λ`.
#[derive(Debug, Clone)]
pub struct Ground {
    pub energy: f64,
    /// Coefficient on `k̂` followed by the complement coefficients.
    pub x0: f64,
    pub y: DVector<f64>,
}

impl FiberForm {
    pub fn assemble(xi: f64, h: f64, delta: f64, sign: Sign, degree: usize) -> Result<FiberForm> {
        let np = degree + 1;
        let rule = adapted_rule(xi, h, delta, np + 4);
        let s = sign.factor();
        // ln k(t) = ∓(ξ+t)²/2h; ln‖k‖² by log-sum-exp over the adapted rule
        let lnk: Vec<f64> = rule
            .nodes
            .iter()
            .map(|&t| -s * (xi + t).powi(2) / (2.0 * h))
            .collect();
        let ln_norm2 = if s > 0.0 {
            crate::numerics::special::ln_gauss_mass(xi, h, -delta, delta)
        } else {
            let m = lnk.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(2.0 * b));
            m + rule
                .weights
                .iter()
                .zip(&lnk)
                .map(|(w, l)| w * (2.0 * l - m).exp())
                .sum::<f64>()
                .ln()
        };
        let khat = |lk: f64| (lk - 0.5 * ln_norm2).exp();
        let k_at = |t: f64| khat(-s * (xi + t).powi(2) / (2.0 * h));
        let k_bd = [k_at(delta), k_at(-delta)];

        let sd = delta.sqrt();
        let leg = |t: f64| {
            let (p, dp) = legendre::orthonormal(degree, t / delta);
            let p: Vec<f64> = p.iter().map(|v| v / sd).collect();
            let dp: Vec<f64> = dp.iter().map(|v| v / (sd * delta)).collect();
            (p, dp)
        };
        let nq = rule.len();
        let mut pv = DMatrix::zeros(nq, np);
        let mut pd = DMatrix::zeros(nq, np);
        let mut kv = DVector::zeros(nq);
        let mut kd = DVector::zeros(nq);
        for (q, &t) in rule.nodes.iter().enumerate() {
            let (p, dp) = leg(t);
            for j in 0..np {
                pv[(q, j)] = p[j];
                pd[(q, j)] = dp[j];
            }
            kv[q] = khat(lnk[q]);
            kd[q] = -s * (xi + t) / h * kv[q];
        }
        let w = DVector::from_column_slice(&rule.weights);
        let c = pv.transpose() * kv.component_mul(&w);
        let cn = c.norm();
        // Householder H with H c = -sgn(c₀)|c| e₀; rows 1.. of H p are ⊥ k̂
        let mut v = c.clone();
        let sg = if c[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sg * cn;
        let vv = v.norm_squared();
        let mut hmat = DMatrix::identity(np, np);
        if vv > 0.0 {
            hmat -= (&v * v.transpose()) * (2.0 / vv);
        }
        let hc0 = -sg * cn;
        let res2 = 1.0 - cn * cn;
        let keep0 = res2 > 1e-8;
        // coefficient matrix: columns are basis functions in the p_j basis,
        // plus a k̂ coefficient
        let first = if keep0 { 0 } else { 1 };
        let nr = np - first;
        let mut coef = DMatrix::zeros(np, nr);
        let mut kcoef = DVector::zeros(nr);
        for (col, i) in (first..np).enumerate() {
            let mut row = hmat.row(i).transpose();
            let mut kc = 0.0;
            if i == 0 {
                kc = -hc0;
                let sc = 1.0 / res2.sqrt();
                row *= sc;
                kc *= sc;
            }
            coef.set_column(col, &row);
            kcoef[col] = kc;
        }
        let rv = &pv * &coef + &kv * kcoef.transpose();
        if keep0 {
            // clean up rounding in the near-kernel direction
            let mut col = rv.column(0).into_owned();
            let proj = col.component_mul(&w).dot(&kv);
            col -= &kv * proj;
            let nrm = col.component_mul(&w).dot(&col).sqrt();
            let ratio = 1.0 / nrm;
            coef.column_mut(0).scale_mut(ratio);
            kcoef[0] = (kcoef[0] - proj) * ratio;
        }
        let rv = &pv * &coef + &kv * kcoef.transpose();
        let rd = &pd * &coef + &kd * kcoef.transpose();
        // L r uses only the polynomial part since L k̂ = 0
        let pl = {
            let mut m = &pd * s * h;
            for (q, &t) in rule.nodes.iter().enumerate() {
                for j in 0..np {
                    m[(q, j)] += (xi + t) * pv[(q, j)];
                }
            }
            m * &coef
        };
        let weighted = |m: &DMatrix<f64>| {
            let mut out = m.clone();
            for (q, mut row) in out.row_iter_mut().enumerate() {
                row *= w[q];
            }
            out
        };
        let stiff = pl.transpose() * weighted(&pl);
        let grad_gram = rd.transpose() * weighted(&rd);
        let grad_cross = rd.transpose() * kd.component_mul(&w);
        let k_grad_sq = kd.component_mul(&w).dot(&kd);
        let gram = rv.transpose() * weighted(&rv);
        let orth = (gram - DMatrix::identity(nr, nr)).amax();
        if orth > 1e-8 {
            return solver(format!("Galerkin basis lost orthonormality ({orth:e})"));
        }
        let bd = |t: f64| {
            let (p, _) = leg(t);
            let p = DVector::from_vec(p);
            coef.transpose() * p + &kcoef * k_at(t)
        };
        let r_bd = [bd(delta), bd(-delta)];
        Ok(FiberForm {
            sign,
            xi,
            h,
            delta,
            k_bd,
            r_bd,
            stiff: (&stiff + stiff.transpose()) * 0.5,
            grad_gram,
            grad_cross,
            k_grad_sq,
        })
    }

    pub fn dim(&self) -> usize {
        self.stiff.nrows()
    }

    /// `ν = h(k̂(δ)² + k̂(-δ)²)`, the Rayleigh value of the kernel function.
    pub fn kernel_value(&self) -> f64 {
        self.h * (self.k_bd[0].powi(2) + self.k_bd[1].powi(2))
    }

    fn coupling(&self) -> DVector<f64> {
        &self.r_bd[0] * self.k_bd[0] + &self.r_bd[1] * self.k_bd[1]
    }

    fn block(&self, lambda: f64) -> DMatrix<f64> {
        let b = &self.r_bd[0] * self.r_bd[0].transpose() + &self.r_bd[1] * self.r_bd[1].transpose();
        let n = self.dim();
        &self.stiff + b * (lambda * self.h) - DMatrix::identity(n, n) * (lambda * lambda)
    }

    /// Lowest eigenvalue `ℓ₁(λ)` and its eigenvector.
    pub fn ground(&self, lambda: f64) -> Result<Ground> {
        let a00 = lambda * self.kernel_value() - lambda * lambda;
        let a = self.coupling() * (lambda * self.h);
        let (d, v) = crate::numerics::linalg::eigh(self.block(lambda));
        let z = v.transpose() * &a;
        let f = |l: f64| {
            let mut acc = a00 - l;
            for i in 0..d.len() {
                acc -= z[i] * z[i] / (d[i] - l);
            }
            acc
        };
        let hi = d[0];
        let gap = (hi.abs() * 1e-15).max(f64::MIN_POSITIVE);
        if f(hi - gap) >= 0.0 {
            // the kernel does not couple to the lowest complement mode
            let y = v.column(0).into_owned();
            return Ok(Ground {
                energy: hi,
                x0: 0.0,
                y,
            });
        }
        let mut lo = a00.min(hi) - a.norm() - gap;
        while f(lo) <= 0.0 {
            lo -= lo.abs().max(1.0);
        }
        let mut hi_b = hi;
        // safeguarded Newton inside [lo, hi_b)
        let mut l = if a00 < hi {
            a00.max(lo)
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..200 {
            let fl = f(l);
            if fl == 0.0 {
                break;
            }
            if fl > 0.0 {
                lo = l;
            } else {
                hi_b = l;
            }
            let mut dfl = -1.0;
            for i in 0..d.len() {
                dfl -= z[i] * z[i] / (d[i] - l).powi(2);
            }
            let mut next = l - fl / dfl;
            if !(next > lo && next < hi_b) {
                next = 0.5 * (lo + hi_b);
            }
            let scale = l.abs().max(next.abs()).max(f64::MIN_POSITIVE);
            let done = (next - l).abs() <= 1e-15 * scale || hi_b - lo <= 1e-15 * scale;
            l = next;
            if done {
                break;
            }
        }
        let mut y = DVector::zeros(d.len());
        for i in 0..d.len() {
            let c = -z[i] / (d[i] - l);
            y += v.column(i) * c;
        }
        Ok(Ground {
            energy: l,
            x0: 1.0,
            y,
        })
    }

    /// Sign-certified test `ℓ₁(λ) > 0` together with the smooth function
    /// `G(λ) = F_λ(0)/λ`, valid when the complement block is positive.
    fn sign_probe(&self, lambda: f64) -> (bool, Option<f64>) {
        let blk = self.block(lambda);
        let Some(ch) = blk.cholesky() else {
            return (false, None);
        };
        let w = self.coupling();
        let sol = ch.solve(&w);
        let g = self.kernel_value() - lambda - lambda * self.h * self.h * w.dot(&sol);
        (g > 0.0, Some(g))
    }

    /// Positive root of `λ ↦ ℓ₁(λ)`.
    pub fn root(&self) -> Result<f64> {
        let upper0 = match self.sign {
            Sign::Plus => self.kernel_value() + 1.0,
            Sign::Minus => 2.0 * self.h.sqrt() + self.xi.abs() + self.delta,
        };
        let mut lo = (1e-3 * self.kernel_value()).min(1e-3 * upper0).max(1e-300);
        let mut tries = 0;
        while !self.sign_probe(lo).0 {
            lo *= 1e-3;
            tries += 1;
            if tries > 100 || lo < 1e-300 {
                return solver("no positive sign of ℓ₁ near λ = 0");
            }
        }
        let mut hi = upper0;
        tries = 0;
        while self.sign_probe(hi).0 {
            lo = hi;
            hi *= 2.0;
            tries += 1;
            if tries > 60 {
                return solver("root bracket exhausted");
            }
        }
        let (mut a, mut b) = crate::numerics::optimize::bisect_sign(
            |x| Ok(self.sign_probe(x).0),
            lo,
            hi,
            1e-6,
            400,
        )?;
        // Illinois polish on G when both ends are in the positive-block regime
        let (ga, gb) = (self.sign_probe(a).1, self.sign_probe(b).1);
        if let (Some(mut fa), Some(mut fb)) = (ga, gb) {
            let mut side = 0;
            for _ in 0..100 {
                let c = (a * fb - b * fa) / (fb - fa);
                if !(c > a && c < b) {
                    break;
                }
                let (pos, g) = self.sign_probe(c);
                let Some(fc) = g else { break };
                if pos {
                    a = c;
                    fa = fc;
                    if side == 1 {
                        fb *= 0.5;
                    }
                    side = 1;
                } else {
                    b = c;
                    fb = fc;
                    if side == -1 {
                        fa *= 0.5;
                    }
                    side = -1;
                }
                if b - a <= 4e-16 * b || fc == 0.0 {
                    break;
                }
            }
        }
        if b - a > 1e-14 * b {
            let r = crate::numerics::optimize::bisect_sign(
                |x| Ok(self.sign_probe(x).0),
                a,
                b,
                1e-15,
                200,
            )?;
            a = r.0;
            b = r.1;
        }
        Ok(0.5 * (a + b))
    }

    /// Rayleigh-type functional `ρ^±` of the vector `(x0, y)`.
    pub fn rho(&self, x0: f64, y: &DVector<f64>) -> f64 {
        let n2 = x0 * x0 + y.norm_squared();
        let b0 = x0 * self.k_bd[0] + self.r_bd[0].dot(y);
        let b1 = x0 * self.k_bd[1] + self.r_bd[1].dot(y);
        let bd = b0 * b0 + b1 * b1;
        let lq = y.dot(&(&self.stiff * y)).max(0.0);
        let hb = self.h * bd;
        (hb + (hb * hb + 4.0 * n2 * lq).sqrt()) / (2.0 * n2)
    }

    /// Minimize `ρ^±` by the safeguarded iteration `λ ← ρ(ground(λ))`
    /// from `restarts` seeded random starting vectors; returns the minimum
    /// value and its minimizer `(x0, y)` normalized in L².
    pub fn minimize_rho(&self, restarts: usize, seed: u64) -> Result<(f64, f64, DVector<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let mut best: Option<(f64, f64, DVector<f64>)> = None;
        for _ in 0..restarts.max(1) {
            let x0: f64 = rng.gen_range(-1.0..1.0);
            let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let mut lam = self.rho(x0, &y);
            let mut cur = (x0, y);
            let mut converged = false;
            for _ in 0..200 {
                let g = self.ground(lam)?;
                let next = self.rho(g.x0, &g.y);
                if next < lam {
                    cur = (g.x0, g.y);
                }
                if !(next < lam) || lam - next <= 1e-15 * lam {
                    lam = lam.min(next);
                    converged = true;
                    break;
                }
                lam = next;
            }
            if !converged {
                return solver("ρ iteration did not converge");
            }
            if best.as_ref().map_or(true, |b| lam < b.0) {
                let nrm = (cur.0 * cur.0 + cur.1.norm_squared()).sqrt();
                best = Some((lam, cur.0 / nrm, cur.1 / nrm));
            }
        }
        Ok(best.expect("at least one restart"))
    }

    /// H¹ norm of the complement part `Σ y_i r_i` and L² norm of the
    /// kernel part, for a normalized state `(x0, y)`.
    pub fn split_norms(&self, x0: f64, y: &DVector<f64>) -> (f64, f64) {
        let h1 = y.norm_squared() + y.dot(&(&self.grad_gram * y));
        (h1.max(0.0).sqrt(), x0.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_at_zero_lambda_vanishes() {
        for sign in [Sign::Plus, Sign::Minus] {
            let f = FiberForm::assemble(0.3, 0.1, 1.0, sign, 60).unwrap();
            let g = f.ground(0.0).unwrap();
            assert!(g.energy.abs() < 1e-14, "{sign:?} {}", g.energy);
        }
    }

    #[test]
    fn kernel_value_matches_nu1() {
        let f = FiberForm::assemble(0.4, 0.1, 1.0, Sign::Plus, 40).unwrap();
        let nu = super::super::nu1(0.4, 0.1, 1.0);
        assert!((f.kernel_value() / nu - 1.0).abs() < 1e-12);
        let g = f.rho(1.0, &DVector::zeros(f.dim()));
        assert!((g / nu - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_is_scale_invariant() {
        let f = FiberForm::assemble(0.0, 0.2, 1.0, Sign::Minus, 30).unwrap();
        let y = DVector::from_fn(f.dim(), |i, _| ((i * 7 % 5) as f64 - 2.0) * 0.1);
        let a = f.rho(0.3, &y);
        let b = f.rho(-0.3 * 4.0, &(&y * -4.0));
        assert!((a / b - 1.0).abs() < 1e-13);
    }
}
