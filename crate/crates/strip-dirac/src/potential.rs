//! Magnetic potential `φ` with `Δφ = 1` on the curved strip and `φ = 0` on its
//! boundary, solved in tubular coordinates, plus the analysis of its minimum.
//!
//! In coordinates `(s,t)` the Laplacian reads
//! `m⁻¹[∂_s(m⁻¹∂_s u) + ∂_t(m ∂_t u)]`, which is discretized in flux form with
//! second-order differences. The truncated ends `s = ±L` carry the straight
//! profile `φ₀(t) = (t² - δ²)/2`.

use crate::curve::TubularMap;
use crate::error::{invalid, solver, Error, Result};
use crate::numerics::interp::{Grid2, Jet2};
use nalgebra::{DVector, Matrix2, SymmetricEigen};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::{Deserialize, Serialize};

/// `φ₀(t) = (t² - δ²)/2`.
pub fn phi0(t: f64, delta: f64) -> f64 {
    0.5 * (t * t - delta * delta)
}

/// Default truncation half-length `L₀ + 6δ`.
pub fn default_truncation(map: &TubularMap) -> f64 {
    map.curve.support() + 6.0 * map.delta
}

/// Solve `Δu = rhs` on `[-L, L] × [-δ, δ]` with Dirichlet data `bc` on the
/// whole rectangle boundary. Returns the grid and the max discrete residual.
pub(crate) fn solve_dirichlet(
    map: &TubularMap,
    l: f64,
    ns: usize,
    nt: usize,
    rhs: impl Fn(f64, f64) -> f64,
    bc: impl Fn(f64, f64) -> f64,
) -> Result<(Grid2, f64)> {
    if ns < 5 || nt < 5 {
        return invalid("grid needs at least 5 points per direction");
    }
    let delta = map.delta;
    let ds = 2.0 * l / (ns - 1) as f64;
    let dt = 2.0 * delta / (nt - 1) as f64;
    let s = |i: usize| -l + i as f64 * ds;
    let t = |j: usize| -delta + j as f64 * dt;
    let kappa = |x: f64| map.curve.profile.kappa(x);
    let (mi, mj) = (ns - 2, nt - 2);
    let idx = |i: usize, j: usize| (i - 1) * mj + (j - 1);
    let n = mi * mj;

    let mut values = vec![0.0; ns * nt];
    for i in 0..ns {
        for j in 0..nt {
            if i == 0 || j == 0 || i == ns - 1 || j == nt - 1 {
                values[i * nt + j] = bc(s(i), t(j));
            }
        }
    }

    // assemble -(flux operator), which is symmetric positive definite
    let mut coo = CooMatrix::new(n, n);
    let mut b = DVector::zeros(n);
    let (is2, it2) = (1.0 / (ds * ds), 1.0 / (dt * dt));
    for i in 1..ns - 1 {
        let (kl, kc, kr) = (kappa(s(i) - 0.5 * ds), kappa(s(i)), kappa(s(i) + 0.5 * ds));
        for j in 1..nt - 1 {
            let tj = t(j);
            let w_l = is2 / (1.0 - tj * kl);
            let w_r = is2 / (1.0 - tj * kr);
            let w_d = it2 * (1.0 - (tj - 0.5 * dt) * kc);
            let w_u = it2 * (1.0 - (tj + 0.5 * dt) * kc);
            let row = idx(i, j);
            coo.push(row, row, w_l + w_r + w_d + w_u);
            let mut acc = -(1.0 - tj * kc) * rhs(s(i), tj);
            for (ii, jj, w) in [
                (i - 1, j, w_l),
                (i + 1, j, w_r),
                (i, j - 1, w_d),
                (i, j + 1, w_u),
            ] {
                if ii == 0 || jj == 0 || ii == ns - 1 || jj == nt - 1 {
                    acc += w * values[ii * nt + jj];
                } else {
                    coo.push(row, idx(ii, jj), -w);
                }
            }
            b[row] = acc;
        }
    }
    let a = CscMatrix::from(&coo);
    let chol =
        CscCholesky::factor(&a).map_err(|e| Error::Solver(format!("Cholesky failed: {e}")))?;
    let x = chol.solve(&b);
    let x = x.column(0);
    let r = &a * &x - &b;
    let bnorm = b.amax().max(1.0);
    let residual = r.amax() / bnorm;
    for i in 1..ns - 1 {
        for j in 1..nt - 1 {
            values[i * nt + j] = x[idx(i, j)];
        }
    }
    let grid = Grid2 {
        s0: -l,
        ds,
        ns,
        t0: -delta,
        dt,
        nt,
        values,
    };
    Ok((grid, residual))
}

/// Gradient and Hessian of a tubular-coordinate field in physical coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: Matrix2<f64>,
}

/// Convert `(s,t)` derivatives of a scalar to physical ones.
pub(crate) fn physical_jet(map: &TubularMap, s: f64, t: f64, j: &Jet2) -> PhysicalJet {
    let p = map.curve.point(s);
    let (k, dk) = map.curve.profile.eval(s);
    let m = 1.0 - t * k;
    let tau = p.tangent;
    let n = p.normal;
    // physical gradient: (u_s/m) τ + u_t n
    let gs = j.fs / m;
    let grad = [gs * tau[0] + j.ft * n[0], gs * tau[1] + j.ft * n[1]];
    // Hessian in the orthonormal frame e₁ = m⁻¹∂_s, e₂ = ∂_t, using
    // ∇_{e₁}e₁ = (κ/m) n and ∇_{e₂}e₁ = 0
    let m_s = -t * dk;
    let h11 = (j.fss - j.fs * m_s / m) / (m * m) - k * j.ft / m;
    let h12 = j.fst / m + k * j.fs / (m * m);
    let h22 = j.ftt;
    let f = Matrix2::new(tau[0], n[0], tau[1], n[1]);
    let hf = Matrix2::new(h11, h12, h12, h22);
    let hess = f * hf * f.transpose();
    PhysicalJet {
        value: j.f,
        grad,
        hess,
    }
}

/// Grid solution of `Δφ = 1`, `φ|∂Ω = 0`.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub map: TubularMap,
    /// Truncation half-length `L`.
    pub l: f64,
    pub grid: Grid2,
    /// Max discrete residual of the linear system, relative.
    pub residual: f64,
}

impl PotentialField {
    /// Solve on an `ns × nt` grid (boundary nodes included).
    pub fn solve(
        map: &TubularMap,
        l: f64,
        ns: usize,
        nt: usize,
        tol: f64,
    ) -> Result<PotentialField> {
        let l0 = map.curve.support();
        if !(l > l0) {
            return invalid(format!(
                "truncation L = {l} must exceed the support L₀ = {l0}"
            ));
        }
        let delta = map.delta;
        let (grid, residual) = solve_dirichlet(
            map,
            l,
            ns,
            nt,
            |_, _| 1.0,
            |_, t| {
                if (t.abs() - delta).abs() < 1e-14 * delta {
                    0.0
                } else {
                    phi0(t, delta)
                }
            },
        )?;
        if !(residual <= tol) {
            return solver(format!(
                "Poisson residual {residual:e} above tolerance {tol:e}"
            ));
        }
        Ok(PotentialField {
            map: map.clone(),
            l,
            grid,
            residual,
        })
    }

    /// Solve with grid spacing close to `h` in both directions.
    pub fn solve_with_spacing(
        map: &TubularMap,
        l: f64,
        h: f64,
        tol: f64,
    ) -> Result<PotentialField> {
        let nt = ((2.0 * map.delta / h).round() as usize).max(4) + 1;
        let ns = ((2.0 * l / h).round() as usize).max(4) + 1;
        PotentialField::solve(map, l, ns, nt, tol)
    }

    pub fn delta(&self) -> f64 {
        self.map.delta
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet2 {
        self.grid.jet(s, t)
    }

    pub fn value(&self, s: f64, t: f64) -> f64 {
        if s.abs() >= self.l {
            return phi0(t, self.map.delta);
        }
        self.grid.value(s, t)
    }

    pub fn physical(&self, s: f64, t: f64) -> PhysicalJet {
        physical_jet(&self.map, s, t, &self.grid.jet(s, t))
    }

    /// `A = ∇φ^⊥ = (-∂₂φ, ∂₁φ)` at tubular coordinates `(s,t)`.
    pub fn vector_potential_st(&self, s: f64, t: f64) -> [f64; 2] {
        let g = self.physical(s, t).grad;
        [-g[1], g[0]]
    }

    /// `A` at a physical point.
    pub fn vector_potential(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        let (s, t) = self.map.inverse(x)?;
        if t.abs() > self.map.delta || s.abs() > self.l {
            return invalid("point outside the truncated domain");
        }
        Ok(self.vector_potential_st(s, t))
    }

    /// Minimum over both boundary components of the outward normal derivative.
    pub fn boundary_normal_derivative(&self) -> BoundaryDerivative {
        let g = &self.grid;
        let nt = g.nt;
        let mut best = BoundaryDerivative {
            min: f64::INFINITY,
            s: 0.0,
            upper: true,
        };
        for i in 0..g.ns {
            let up =
                (3.0 * g.at(i, nt - 1) - 4.0 * g.at(i, nt - 2) + g.at(i, nt - 3)) / (2.0 * g.dt);
            let lo = -(-3.0 * g.at(i, 0) + 4.0 * g.at(i, 1) - g.at(i, 2)) / (2.0 * g.dt);
            for (v, upper) in [(up, true), (lo, false)] {
                if v < best.min {
                    best = BoundaryDerivative {
                        min: v,
                        s: g.s(i),
                        upper,
                    };
                }
            }
        }
        best
    }

    /// Locate and analyse the minimum of `φ`.
    pub fn locate_minimum(&self) -> Result<MinimumReport> {
        let g = &self.grid;
        let delta = self.map.delta;
        let (mut bi, mut bj, mut bv) = (1, 1, f64::INFINITY);
        for i in 1..g.ns - 1 {
            for j in 1..g.nt - 1 {
                if g.at(i, j) < bv {
                    bv = g.at(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        let interior_node = bi > 1 && bi < g.ns - 2 && bj > 1 && bj < g.nt - 2;
        // damped Newton on the interpolant, steepest descent where the
        // Hessian is indefinite, steps capped at one cell
        let (mut s, mut t) = (g.s(bi), g.t(bj));
        let (s_lim, t_lim) = (self.l - 3.0 * g.ds, delta - 3.0 * g.dt);
        let mut converged = false;
        for _ in 0..500 {
            let j = g.jet(s, t);
            let grad = nalgebra::Vector2::new(j.fs, j.ft);
            let h = Matrix2::new(j.fss, j.fst, j.fst, j.ftt);
            let newton = if h[(0, 0)] > 0.0 && h.determinant() > 0.0 {
                h.try_inverse().map(|hi| hi * grad)
            } else {
                None
            };
            let mut step = newton.unwrap_or_else(|| {
                nalgebra::Vector2::new(j.fs * g.ds * g.ds, j.ft * g.dt * g.dt) * 1e6
            });
            let scale = (step[0].abs() / g.ds).max(step[1].abs() / g.dt);
            if scale > 1.0 {
                step /= scale;
            }
            let mut accepted = false;
            for _ in 0..40 {
                let (s1, t1) = (s - step[0], t - step[1]);
                if s1.abs() < s_lim && t1.abs() < t_lim && g.jet(s1, t1).f <= j.f {
                    s = s1;
                    t = t1;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || (step[0] / g.ds).hypot(step[1] / g.dt) < 1e-12 {
                converged = newton.is_some();
                break;
            }
        }
        if !converged {
            s = g.s(bi);
            t = g.t(bj);
        }
        let jet = g.jet(s, t);
        let phi_min = jet.f.min(bv);
        let pj = self.physical(s, t);
        let eig = SymmetricEigen::new(pj.hess);
        let (mut e0, mut e1) = (eig.eigenvalues[0], eig.eigenvalues[1]);
        if e0 > e1 {
            std::mem::swap(&mut e0, &mut e1);
        }
        let margin = 1e-6 * delta * delta;
        let cells = 3.0;
        let mut competitors = 0;
        for i in 1..g.ns - 1 {
            for j in 1..g.nt - 1 {
                let far = (g.s(i) - s).abs() > cells * g.ds || (g.t(j) - t).abs() > cells * g.dt;
                if far && g.at(i, j) < phi_min + margin {
                    competitors += 1;
                }
            }
        }
        let interior = interior_node && t.abs() < delta - g.dt && s.abs() < self.l - g.ds;
        let flags = MinimumFlags {
            unique_min: competitors == 0,
            nondegenerate: e0 > 1e-6,
            strictly_below_straight: phi_min < -0.5 * delta * delta - 1e-10 * delta * delta,
            interior,
        };
        Ok(MinimumReport {
            s_min: s,
            t_min: t,
            x_min: self.map.theta_map(s, t),
            phi_min,
            hessian: [
                [pj.hess[(0, 0)], pj.hess[(0, 1)]],
                [pj.hess[(1, 0)], pj.hess[(1, 1)]],
            ],
            a: 2.0 * e0,
            b: 2.0 * e1,
            flags,
        })
    }

    /// Change in `φ_min` when the truncation is doubled at the same spacing.
    pub fn truncation_sensitivity(&self) -> Result<f64> {
        let ns = ((4.0 * self.l / self.grid.ds).round() as usize) + 1;
        let wide = PotentialField::solve(&self.map, 2.0 * self.l, ns, self.grid.nt, 1e-8)?;
        Ok((wide.locate_minimum()?.phi_min - self.locate_minimum()?.phi_min).abs())
    }
}

/// Location and value of `min ∂_Nφ` over `∂Ω`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundaryDerivative {
    pub min: f64,
    pub s: f64,
    /// `true` for the component `t = +δ`.
    pub upper: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimumFlags {
    pub unique_min: bool,
    pub nondegenerate: bool,
    pub strictly_below_straight: bool,
    pub interior: bool,
}

impl MinimumFlags {
    pub fn all(&self) -> bool {
        self.unique_min && self.nondegenerate && self.strictly_below_straight && self.interior
    }
}

/// Minimum of `φ` with its Hessian; eigenvalues of the Hessian are `a/2 ≤ b/2`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MinimumReport {
    pub s_min: f64,
    pub t_min: f64,
    pub x_min: [f64; 2],
    pub phi_min: f64,
    pub hessian: [[f64; 2]; 2],
    pub a: f64,
    pub b: f64,
    pub flags: MinimumFlags,
}

impl MinimumReport {
    pub fn det_hessian(&self) -> f64 {
        0.25 * self.a * self.b
    }

    /// Error unless every structural flag holds.
    pub fn require(&self) -> Result<()> {
        let f = &self.flags;
        let mut bad = Vec::new();
        if !f.interior {
            bad.push("minimum not interior");
        }
        if !f.nondegenerate {
            bad.push("degenerate Hessian");
        }
        if !f.unique_min {
            bad.push("minimum not unique");
        }
        if !f.strictly_below_straight {
            bad.push("φ_min not below -δ²/2");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Assumption(bad.join(", ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{BaseCurve, CurvatureProfile};

    fn bump_map(delta: f64) -> TubularMap {
        let c = BaseCurve::build(
            CurvatureProfile::GaussianBump {
                amplitude: 0.8,
                width: 0.8,
                support: 3.0,
            },
            1e-12,
        )
        .unwrap();
        TubularMap::new(c, delta).unwrap()
    }

    #[test]
    fn phi0_values() {
        assert_eq!(phi0(1.0, 1.0), 0.0);
        assert_eq!(phi0(0.0, 1.0), -0.5);
        assert_eq!(phi0(0.5, 1.0), -0.375);
    }

    #[test]
    fn straight_strip_recovers_phi0() {
        let c = BaseCurve::build(CurvatureProfile::Zero, 1e-12).unwrap();
        let map = TubularMap::new(c, 1.0).unwrap();
        let f = PotentialField::solve(&map, 3.0, 61, 21, 1e-10).unwrap();
        for &(s, t) in &[(0.0, 0.0), (1.3, 0.55), (-2.2, -0.8)] {
            assert!((f.value(s, t) - phi0(t, 1.0)).abs() < 1e-11);
        }
        let r = f.locate_minimum().unwrap();
        assert!(!r.flags.nondegenerate && !r.flags.unique_min);
        let bd = f.boundary_normal_derivative();
        assert!((bd.min - 1.0).abs() < 1e-10);
        let a = f.vector_potential_st(0.4, 0.3);
        assert!((a[0] + 0.3).abs() < 1e-10 && a[1].abs() < 1e-10);
    }

    #[test]
    fn bump_dips_below_straight_and_is_symmetric() {
        let map = bump_map(1.0);
        let l = default_truncation(&map);
        let f = PotentialField::solve_with_spacing(&map, l, 0.05, 1e-9).unwrap();
        let r = f.locate_minimum().unwrap();
        assert!(r.flags.all(), "{:?}", r.flags);
        assert!(r.s_min.abs() < 1e-5, "{}", r.s_min);
        assert!(r.phi_min < -0.51 && r.t_min > 0.05);
        assert!((r.a + r.b - 2.0).abs() < 1e-2);
        assert!((f.value(1.1, 0.1) - f.value(-1.1, 0.1)).abs() < 1e-10);
        assert!(f.boundary_normal_derivative().min > 0.0);
        for v in &f.grid.values {
            assert!(*v <= 1e-14);
        }
    }
}
