//! Model problems at unit field strength: the half-line form that fixes the
//! constant `a₀`, the whole-line Landau level, and the one-dimensional
//! Schrödinger operator induced by curvature.

use crate::curve::CurvatureProfile;
use crate::error::{invalid, solver, Result};
use crate::numerics::linalg::eigh_pencil;
use crate::numerics::optimize::{bisect_sign, brent_min, scan_then_brent};
use crate::numerics::quad::Rule;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Standard Legendre `P_0..=P_n` and derivatives at `x`.
fn legendre_std(n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut p, mut dp) = crate::numerics::legendre::orthonormal(n, x);
    for k in 0..=n {
        let s = ((2 * k + 1) as f64 / 2.0).sqrt();
        p[k] /= s;
        dp[k] /= s;
    }
    (p, dp)
}

/// Galerkin pieces of `‖(−∂_t + ξ + t)u‖²` on an interval, split by powers
/// of `ξ`: `S(ξ) = S₀ + ξS₁ + ξ²M`.
#[derive(Debug, Clone)]
struct LineForm {
    s0: DMatrix<f64>,
    s1: DMatrix<f64>,
    mass: DMatrix<f64>,
    /// Basis values at `t = 0` (half-line only).
    at0: DVector<f64>,
    /// Nodal values of the basis, for post-processing.
    rule: Rule,
    values: DMatrix<f64>,
}

impl LineForm {
    /// `half = true`: `[0, T]` with `u(T) = 0`, basis `P_n − P_{n+1}`.
    /// `half = false`: `[−T, T]` with Dirichlet ends, basis `P_n − P_{n+2}`.
    fn new(t_max: f64, n: usize, half: bool) -> LineForm {
        let (a, b) = if half { (0.0, t_max) } else { (-t_max, t_max) };
        let rule = Rule::composite(n + 8, 4, a, b);
        let nq = rule.len();
        let jac = 2.0 / (b - a);
        let shift = if half { 1 } else { 2 };
        let basis = |t: f64| {
            let x = (2.0 * t - a - b) / (b - a);
            let (p, dp) = legendre_std(n + shift, x);
            let v: Vec<f64> = (0..n).map(|k| p[k] - p[k + shift]).collect();
            let d: Vec<f64> = (0..n).map(|k| (dp[k] - dp[k + shift]) * jac).collect();
            (v, d)
        };
        let mut values = DMatrix::zeros(nq, n);
        let mut lt = DMatrix::zeros(nq, n); // (−∂ + t)φ
        for (q, &t) in rule.nodes.iter().enumerate() {
            let (v, d) = basis(t);
            for k in 0..n {
                values[(q, k)] = v[k];
                lt[(q, k)] = -d[k] + t * v[k];
            }
        }
        let mut wv = values.clone();
        for (q, mut row) in wv.row_iter_mut().enumerate() {
            row *= rule.weights[q];
        }
        let mut wl = lt.clone();
        for (q, mut row) in wl.row_iter_mut().enumerate() {
            row *= rule.weights[q];
        }
        let s0 = lt.transpose() * &wl;
        let cross = lt.transpose() * &wv;
        let s1 = &cross + cross.transpose();
        let mass = values.transpose() * &wv;
        let at0 = DVector::from_vec(basis(0.0).0);
        LineForm {
            s0,
            s1,
            mass,
            at0,
            rule,
            values,
        }
    }

    /// Lowest eigenpair of `S(ξ) + λ e₀e₀ᵀ` relative to the mass matrix.
    fn lowest(&self, lambda: f64, xi: f64) -> Result<(f64, DVector<f64>)> {
        let mut a = &self.s0 + &self.s1 * xi + &self.mass * (xi * xi);
        if lambda != 0.0 {
            a += &self.at0 * self.at0.transpose() * lambda;
        }
        let a = (&a + a.transpose()) * 0.5;
        let (vals, vecs) = eigh_pencil(&a, &self.mass)?;
        Ok((vals[0], vecs.column(0).into_owned()))
    }

    /// Fraction of `∫|u|²` carried where the predicate holds.
    fn mass_fraction(&self, c: &DVector<f64>, region: impl Fn(f64) -> bool) -> f64 {
        let u = &self.values * c;
        let (mut inside, mut total) = (0.0, 0.0);
        for ((&t, &w), &v) in self.rule.nodes.iter().zip(&self.rule.weights).zip(u.iter()) {
            total += w * v * v;
            if region(t) {
                inside += w * v * v;
            }
        }
        inside / total
    }
}

/// The constant `a₀` and diagnostics of its computation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct A0Report {
    pub a0: f64,
    /// Minimizer over `ξ` of the ground energy at `λ = a₀`.
    pub xi_hat: f64,
    /// `min_ξ` of the ground energy at `λ = a₀`, minus `a₀²` (zero at the root).
    pub residual: f64,
    /// Mass of the ground state beyond `t = 8`.
    pub tail_mass: f64,
    pub truncation: f64,
    pub basis: usize,
}

/// Half-line model with unit field. `g(λ) = min_ξ inf Q⁻_{λ,ξ,ℝ₊} / ‖u‖²`.
pub struct HalfLine {
    form: LineForm,
}

impl HalfLine {
    pub fn new(t_max: f64, n: usize) -> Result<HalfLine> {
        if t_max < 12.0 {
            return invalid(format!("half-line truncation {t_max} below 12"));
        }
        if n < 16 {
            return invalid("half-line basis needs at least 16 functions");
        }
        Ok(HalfLine {
            form: LineForm::new(t_max, n, true),
        })
    }

    /// Bottom of `Q⁻_{λ,ξ,ℝ₊}` normalized by `‖u‖²` (includes `−λ²`).
    pub fn energy(&self, lambda: f64, xi: f64) -> Result<f64> {
        Ok(self.form.lowest(lambda, xi)?.0 - lambda * lambda)
    }

    /// `(min_ξ energy, argmin)`, searched near `guess` when given.
    pub fn min_over_xi(&self, lambda: f64, guess: Option<f64>) -> Result<(f64, f64)> {
        let f = |xi: f64| self.energy(lambda, xi);
        let (x, v) = match guess {
            Some(g) => brent_min(f, g - 0.6, g + 0.6, 1e-10, 300)?,
            None => scan_then_brent(f, -5.0, 3.0, 33, 1e-10)?,
        };
        Ok((v, x))
    }
}

pub fn halfline_a0(t_max: f64, n: usize) -> Result<A0Report> {
    let hl = HalfLine::new(t_max, n)?;
    let eps = 1e-3;
    let top = std::f64::consts::SQRT_2 - eps;
    let g = |lam: f64| hl.min_over_xi(lam, Some(-lam)).map(|r| r.0);
    let (g_lo, g_hi) = (hl.min_over_xi(eps, None)?.0, hl.min_over_xi(top, None)?.0);
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return solver(format!(
            "no sign change of g on (ε, √2−ε): g = {g_lo:e}, {g_hi:e}"
        ));
    }
    let (mut a, mut b) = bisect_sign(|x| Ok(g(x)? > 0.0), eps, top, 1e-4, 100)?;
    let (mut fa, mut fb) = (g(a)?, g(b)?);
    let mut side = 0;
    for _ in 0..60 {
        let c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            break;
        }
        let fc = g(c)?;
        if fc > 0.0 {
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
        if b - a < 1e-13 || fc == 0.0 {
            break;
        }
    }
    let a0 = if fa.abs() < fb.abs() { a } else { b };
    let (residual, xi_hat) = hl.min_over_xi(a0, Some(-a0))?;
    let (_, c) = hl.form.lowest(a0, xi_hat)?;
    let tail_mass = hl.form.mass_fraction(&c, |t| t > 8.0);
    Ok(A0Report {
        a0,
        xi_hat,
        residual,
        tail_mass,
        truncation: t_max,
        basis: n,
    })
}

/// Bottom of `Q⁻_{λ,ξ,ℝ}` on `[−T, T]` minus the Landau level `2 − λ²`.
pub fn landau_check(lambda: f64, xi: f64, t_max: f64, n: usize) -> Result<f64> {
    if !(lambda >= 0.0) {
        return invalid("λ must be non-negative");
    }
    let form = LineForm::new(t_max, n, false);
    let (e, c) = form.lowest(0.0, xi)?;
    let edge = form.mass_fraction(&c, |t| t.abs() > t_max - 2.0);
    if edge > 1e-14 {
        return invalid(format!("truncation {t_max} too small: edge mass {edge:e}"));
    }
    Ok((e - lambda * lambda) - (2.0 - lambda * lambda))
}

/// Ground energies of `D_s² − κ²/(12(1∓δκ)²)` on `[−T, T]` with Dirichlet ends.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundState {
    /// Negative ground energy of each candidate, if any.
    pub candidates: [Option<f64>; 2],
    /// Minimum of the candidates; `None` when neither is negative.
    pub lambda: Option<f64>,
}

/// The potential vanishes outside the support, so the exterior solution is
/// `sinh(k(T − |s|))` exactly; the interior is integrated with RK4 and the
/// ground energy is located by Sturm counting.
pub fn curvature_bound_state(
    profile: &CurvatureProfile,
    delta: f64,
    t_max: f64,
    steps: usize,
) -> Result<BoundState> {
    profile.validate()?;
    let l0 = profile.support();
    if !(t_max > l0) {
        return invalid(format!("truncation {t_max} must exceed the support {l0}"));
    }
    if delta * profile.max_abs() >= 1.0 {
        return invalid("δ·max|κ| must be below 1");
    }
    let mut cands = [None, None];
    for (slot, sg) in [(0, 1.0), (1, -1.0)] {
        let v = |s: f64| {
            let k = profile.kappa(s);
            -k * k / (12.0 * (1.0 - sg * delta * k).powi(2))
        };
        cands[slot] = ground_energy(&v, l0, t_max, steps.max(200))?;
    }
    let lambda = match cands {
        [Some(a), Some(b)] => Some(a.min(b)),
        [a, b] => a.or(b),
    };
    Ok(BoundState {
        candidates: cands,
        lambda,
    })
}

fn ground_energy(v: &dyn Fn(f64) -> f64, l0: f64, t_max: f64, steps: usize) -> Result<Option<f64>> {
    let vmin = (0..=1000)
        .map(|i| v(-l0 + 2.0 * l0 * i as f64 / 1000.0))
        .fold(0.0f64, f64::min);
    if vmin >= 0.0 {
        return Ok(None);
    }
    let ext = t_max - l0;
    // decay rate of the exterior solution: u'/u = ∓k coth(k ext)
    let rate = |e: f64| {
        if e < 0.0 {
            let k = (-e).sqrt();
            k / (k * ext).tanh()
        } else {
            1.0 / ext
        }
    };
    // true when the ground energy lies above e
    let below = |e: f64| -> bool {
        let r = rate(e);
        let dx = 2.0 * l0 / steps as f64;
        let (mut u, mut du) = (1.0, r);
        let f = |s: f64, u: f64| (v(s) - e) * u;
        for i in 0..steps {
            let s = -l0 + i as f64 * dx;
            let k1u = du;
            let k1d = f(s, u);
            let k2u = du + 0.5 * dx * k1d;
            let k2d = f(s + 0.5 * dx, u + 0.5 * dx * k1u);
            let k3u = du + 0.5 * dx * k2d;
            let k3d = f(s + 0.5 * dx, u + 0.5 * dx * k2u);
            let k4u = du + dx * k3d;
            let k4d = f(s + dx, u + dx * k3u);
            let un = u + dx / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            du += dx / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            if un <= 0.0 {
                return false;
            }
            u = un;
        }
        du + r * u > 0.0
    };
    if below(0.0) {
        return Ok(None);
    }
    // in x = −e the predicate "energy above the ground state" holds below −E₀
    let (lo, hi) = bisect_sign(|x| Ok(!below(-x)), 0.0, -vmin * 1.01, 1e-12, 400)?;
    Ok(Some(-0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landau_level_is_two() {
        for &xi in &[-2.0, 0.0, 2.0] {
            assert!(landau_check(0.5, xi, 12.0, 90).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn free_operator_has_no_bound_state() {
        let b = curvature_bound_state(&CurvatureProfile::Zero, 0.1, 20.0, 400).unwrap();
        assert!(b.lambda.is_none());
    }
}
