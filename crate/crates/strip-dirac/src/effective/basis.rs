//! Hardy space of the curved strip, spanned by pushforwards of disk monomials.
//!
//! With `g : 𝔻 → Ω`, `g(0) = z_min`, the functions
//! `e_n = ((g⁻¹)')^{1/2} (g⁻¹)^n` are orthogonal in `L²(∂Ω)` with norm `2π`.
//! The Gram matrix and the derivatives at `z_min` are computed numerically,
//! so both carry the discretization error of the conformal map.

use crate::conformal::{Biholomorphism, DiskMap};
use crate::error::{invalid, solver, Result};
use crate::numerics::linalg::eigh;
use crate::numerics::quad::Rule;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Points per contour used for derivatives at `z_min`.
const CONTOUR_POINTS: usize = 64;

#[derive(Debug, Clone)]
pub struct HardyBasis {
    pub bih: Arc<Biholomorphism>,
    pub disk: DiskMap,
    /// Number of basis functions `M`.
    pub order: usize,
    /// `gram[(m,n)] = ∫_{∂Ω} ē_m e_n dσ`.
    pub gram: DMatrix<Complex64>,
    /// `deriv[(j,n)] = e_n^{(j)}(z_min)`.
    pub deriv: DMatrix<Complex64>,
    pub condition: f64,
    pub contour_radius: f64,
    /// Half-length of the boundary parametrization actually integrated.
    pub reach: f64,
}

/// Minimum-norm interpolants `v_0..v_{k-1}` and `d_H^k`.
#[derive(Debug, Clone)]
pub struct HardyMinimizer {
    pub k: usize,
    pub d_h: f64,
    /// Column `l` holds the coefficients of `v_l`.
    pub v: DMatrix<Complex64>,
    /// Max over `j, l` of `|v_l^{(j)}(z_min) - δ_{jl}|`.
    pub constraint_residual: f64,
}

/// Summary written to reports.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BasisSummary {
    pub order: usize,
    pub condition: f64,
    pub gram_defect: f64,
    pub contour_radius: f64,
}

impl HardyBasis {
    /// `order` functions and derivatives up to `max_derivative - 1` at the
    /// disk-map base point.
    pub fn build(
        bih: Arc<Biholomorphism>,
        disk: DiskMap,
        order: usize,
        max_derivative: usize,
    ) -> Result<HardyBasis> {
        if order == 0 || max_derivative == 0 {
            return invalid("basis order and derivative count must be positive");
        }
        let delta = bih.delta();
        // |e_n|² decays like e^{-π|s|/2δ} along the strip
        let reach = bih.l + 2.0 * delta / PI * 40.0;
        let gram = boundary_gram(&bih, &disk, order, reach);
        let (vals, _) = eigh(gram.clone());
        let condition = vals[vals.len() - 1] / vals[0];
        if !(vals[0] > 0.0) {
            return solver("boundary Gram matrix is not positive definite");
        }
        let map = &bih.map;
        let z0 = map.theta_map(disk.s, disk.t);
        let radius = 0.5 * map.boundary_distance(disk.s, disk.t);
        let mut deriv = DMatrix::zeros(max_derivative, order);
        let mut s_guess = disk.s;
        for q in 0..CONTOUR_POINTS {
            let ang = 2.0 * PI * q as f64 / CONTOUR_POINTS as f64;
            let x = [z0[0] + radius * ang.cos(), z0[1] + radius * ang.sin()];
            let (s, t) = map.inverse_near(x, s_guess)?;
            s_guess = s;
            let vals = eval_raw(&bih, &disk, order, s, t);
            for j in 0..max_derivative {
                let rot = Complex64::from_polar(1.0, -(j as f64) * ang);
                for (n, v) in vals.iter().enumerate() {
                    deriv[(j, n)] += v * rot;
                }
            }
        }
        for j in 0..max_derivative {
            let scale =
                super::bargmann::factorial(j) / (CONTOUR_POINTS as f64 * radius.powi(j as i32));
            for n in 0..order {
                deriv[(j, n)] *= scale;
            }
        }
        Ok(HardyBasis {
            bih,
            disk,
            order,
            gram,
            deriv,
            condition,
            contour_radius: radius,
            reach,
        })
    }

    /// All basis functions at tubular coordinates `(s,t)`.
    pub fn eval_st(&self, s: f64, t: f64) -> Vec<Complex64> {
        eval_raw(&self.bih, &self.disk, self.order, s, t)
    }

    /// `Σ c_n e_n` at a physical point, found by Newton from `s_guess`.
    pub fn eval_phys(
        &self,
        coeffs: &DVector<Complex64>,
        x: [f64; 2],
        s_guess: f64,
    ) -> Result<Complex64> {
        let (s, t) = self.bih.map.inverse_near(x, s_guess)?;
        if !(t.abs() < self.bih.delta()) {
            return invalid("point outside the domain");
        }
        Ok(self
            .eval_st(s, t)
            .iter()
            .zip(coeffs.iter())
            .map(|(e, c)| e * c)
            .sum())
    }

    /// `max |G/2π - I|`, zero for an exact map.
    pub fn gram_defect(&self) -> f64 {
        let n = self.order;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.gram[(i, j)] / (2.0 * PI) - target).norm());
            }
        }
        worst
    }

    pub fn summary(&self) -> BasisSummary {
        BasisSummary {
            order: self.order,
            condition: self.condition,
            gram_defect: self.gram_defect(),
            contour_radius: self.contour_radius,
        }
    }

    /// Basis restricted to its first `m` functions (a nested subspace).
    pub fn truncate(&self, m: usize) -> Result<HardyBasis> {
        if m == 0 || m > self.order {
            return invalid(format!(
                "cannot truncate a basis of order {} to {m}",
                self.order
            ));
        }
        let mut out = self.clone();
        out.order = m;
        out.gram = self.gram.view((0, 0), (m, m)).into_owned();
        out.deriv = self.deriv.columns(0, m).into_owned();
        let (vals, _) = eigh(out.gram.clone());
        out.condition = vals[m - 1] / vals[0];
        Ok(out)
    }

    /// `⟨u, v⟩_{∂Ω} = ∫ ū v` for coefficient vectors.
    pub fn inner(&self, u: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
        (u.adjoint() * &self.gram * v)[(0, 0)]
    }

    /// Least-norm solutions of `u^{(j)}(z_min) = δ_{jl}`, `j, l < k`.
    pub fn minimize(&self, k: usize) -> Result<HardyMinimizer> {
        if k == 0 || k > self.deriv.nrows() {
            return invalid(format!("k = {k} outside 1..={}", self.deriv.nrows()));
        }
        if self.order < k + 8 {
            return invalid(format!(
                "basis order {} below k + 8 = {}",
                self.order,
                k + 8
            ));
        }
        let d = self.deriv.rows(0, k).into_owned();
        let chol = self.gram.clone().cholesky().ok_or_else(|| {
            crate::Error::Solver("boundary Gram matrix is not positive definite".into())
        })?;
        let x = chol.solve(&d.adjoint());
        let s = &d * &x;
        let sv = s.clone().singular_values();
        if !(sv.min() > 1e-12 * sv.max()) {
            return solver("interpolation constraints are rank deficient");
        }
        let sinv = s
            .try_inverse()
            .ok_or_else(|| crate::Error::Solver("singular constraint matrix".into()))?;
        let v = x * &sinv;
        let d_h = sinv[(k - 1, k - 1)].re.sqrt();
        let check = &d * &v;
        let mut constraint_residual: f64 = 0.0;
        for j in 0..k {
            for l in 0..k {
                let target = if j == l { 1.0 } else { 0.0 };
                constraint_residual = constraint_residual.max((check[(j, l)] - target).norm());
            }
        }
        Ok(HardyMinimizer {
            k,
            d_h,
            v,
            constraint_residual,
        })
    }

    /// `Tayl_{H²}(u) = Σ_{l<k} u^{(l)}(z_min) v_l`.
    pub fn taylor_project(&self, u: &DVector<Complex64>, k: usize) -> Result<DVector<Complex64>> {
        let mz = self.minimize(k)?;
        let d = self.deriv.rows(0, k);
        Ok(&mz.v * (d * u))
    }

    /// `u^{(j)}(z_min)` for `j < max_derivative`.
    pub fn derivatives(&self, u: &DVector<Complex64>) -> DVector<Complex64> {
        &self.deriv * u
    }
}

fn eval_raw(bih: &Biholomorphism, disk: &DiskMap, order: usize, s: f64, t: f64) -> Vec<Complex64> {
    let jet = bih.eval_st(s, t);
    let (g, root) = disk.pullback(&jet, bih.map.curve.theta(s));
    let mut out = Vec::with_capacity(order);
    let mut acc = root;
    for _ in 0..order {
        out.push(acc);
        acc *= g;
    }
    out
}

fn boundary_gram(
    bih: &Biholomorphism,
    disk: &DiskMap,
    order: usize,
    reach: f64,
) -> DMatrix<Complex64> {
    let delta = bih.delta();
    let l = bih.l;
    let inner_width = 4.0 * bih.beta.ds;
    let panels = (2.0 * l / inner_width).ceil() as usize;
    let mut rules = vec![Rule::composite(8, panels, -l, l)];
    let outer_panels = ((reach - l) / (0.5 * delta)).ceil() as usize;
    rules.push(Rule::composite(12, outer_panels, l, reach));
    rules.push(Rule::composite(12, outer_panels, -reach, -l));
    let mut gram = DMatrix::<Complex64>::zeros(order, order);
    for rule in &rules {
        for (s, w) in rule.nodes.iter().zip(&rule.weights) {
            for side in [-1.0, 1.0] {
                let t = side * delta;
                let wt = w * bih.map.metric(*s, t);
                let e = DVector::from_vec(eval_raw(bih, disk, order, *s, t));
                gram.ger(
                    Complex64::new(wt, 0.0),
                    &e.conjugate(),
                    &e,
                    Complex64::new(1.0, 0.0),
                );
            }
        }
    }
    crate::numerics::linalg::hermitize(&mut gram);
    gram
}
