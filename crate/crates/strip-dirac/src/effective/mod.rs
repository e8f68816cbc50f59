//! Effective eigenvalues built from the Hardy space of the curved strip and
//! the Segal-Bargmann space attached to the minimum of `φ`.

pub mod bargmann;
pub mod basis;

pub use bargmann::{d_b_closed, BargmannBasis, HessianSpectrum};
pub use basis::{BasisSummary, HardyBasis, HardyMinimizer};

use crate::conformal::Biholomorphism;
use crate::error::{invalid, solver, Result};
use crate::numerics::linalg::eigh_pencil;
use crate::numerics::quad::Rule;
use crate::potential::{MinimumReport, PotentialField};
use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// `d_H^k = √(2π)/(k-1)! · |g'(0)|^{k-1/2}`.
pub fn d_h_closed(k: usize, g_prime_abs: f64) -> Result<f64> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    Ok((2.0 * PI).sqrt() / bargmann::factorial(k - 1) * g_prime_abs.powf(k as f64 - 0.5))
}

/// Weights drop below `e^{-CUTOFF}` of their peak are discarded.
const WEIGHT_CUTOFF: f64 = 60.0;

/// Tensor quadrature in tubular coordinates: fine panels on a window around
/// the minimum, coarser ones elsewhere. Weights include the Jacobian `m`.
#[derive(Debug, Clone)]
pub struct InteriorRule {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    /// `φ - φ_min` at the node.
    pub dphi: Vec<f64>,
    /// Whether the node lies in the Laplace window.
    pub window: Vec<bool>,
}

fn breaks_with_window(lo: f64, hi: f64, coarse: f64, wlo: f64, whi: f64, fine: f64) -> Vec<f64> {
    let mut b = Vec::new();
    let n = ((hi - lo) / coarse).ceil().max(1.0) as usize;
    b.extend((0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64));
    let (wlo, whi) = (wlo.max(lo), whi.min(hi));
    if whi > wlo {
        let m = ((whi - wlo) / fine).ceil().max(1.0) as usize;
        b.extend((0..=m).map(|i| wlo + (whi - wlo) * i as f64 / m as f64));
    }
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-9 * (1.0 + x.abs()));
    b
}

impl InteriorRule {
    /// Rule resolving `e^{-2(φ-φ_min)/h}` for `h_min ≤ h ≤ h_max` on `|s| ≤ reach`.
    pub fn build(
        field: &PotentialField,
        min: &MinimumReport,
        reach: f64,
        h_min: f64,
        h_max: f64,
    ) -> Result<InteriorRule> {
        if !(h_min > 0.0 && h_max >= h_min) {
            return invalid("need 0 < h_min ≤ h_max");
        }
        let delta = field.delta();
        let (sig_s, sig_t) = ((h_min / min.a).sqrt(), (h_min / min.b).sqrt());
        let (ws, wt) = (10.0 * sig_s, 10.0 * sig_t);
        let sb = breaks_with_window(
            -reach,
            reach,
            (0.5 * delta).min(2.0 * sig_s),
            min.s_min - ws,
            min.s_min + ws,
            0.5 * sig_s,
        );
        let tb = breaks_with_window(
            -delta,
            delta,
            (0.25 * delta).min(2.0 * h_min.sqrt()),
            min.t_min - wt,
            min.t_min + wt,
            0.5 * sig_t,
        );
        let rs = Rule::piecewise(10, &sb);
        let rt = Rule::piecewise(10, &tb);
        let mut out = InteriorRule {
            s: vec![],
            t: vec![],
            w: vec![],
            dphi: vec![],
            window: vec![],
        };
        for (s, ws_) in rs.nodes.iter().zip(&rs.weights) {
            for (t, wt_) in rt.nodes.iter().zip(&rt.weights) {
                let dphi = field.value(*s, *t) - min.phi_min;
                if 2.0 * dphi / h_max > WEIGHT_CUTOFF {
                    continue;
                }
                out.s.push(*s);
                out.t.push(*t);
                out.w.push(ws_ * wt_ * field.map.metric(*s, *t));
                out.dphi.push(dphi);
                out.window
                    .push((s - min.s_min).abs() <= ws && (t - min.t_min).abs() <= wt);
            }
        }
        if out.s.is_empty() {
            return solver("interior rule is empty");
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// Basis samples on an interior rule, shared by every `h`.
#[derive(Debug, Clone)]
pub struct EffectiveSetup {
    pub basis: HardyBasis,
    pub rule: InteriorRule,
    pub min: MinimumReport,
    /// `samples[(q, n)] = e_n` at node `q`.
    pub samples: DMatrix<Complex64>,
}

/// `λ_k^eff(h)` for one `h` and basis size, in log scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveLevels {
    pub h: f64,
    pub order: usize,
    pub log_lambda: Vec<f64>,
    /// Smallest pencil eigenvalue `ν` used (`λ ∝ 1/ν`).
    pub min_nu: f64,
    /// Fraction of `G̃_w[0,0]` carried by the Laplace window.
    pub window_fraction: f64,
    /// `G̃_w[0,0]` divided by its Laplace approximation `2πh/√(ab)·|e₀(z_min)|²`.
    pub laplace_ratio: f64,
}

impl EffectiveSetup {
    pub fn new(
        field: &PotentialField,
        basis: HardyBasis,
        h_min: f64,
        h_max: f64,
    ) -> Result<EffectiveSetup> {
        let min = field.locate_minimum()?;
        min.require()?;
        // e^{-2(φ-φ_min)/h}|e_n|² falls below e^{-60} of its peak well before this
        let reach = basis
            .reach
            .min(field.l.max(basis.bih.l) + 2.0 * field.delta() / PI * 30.0);
        let rule = InteriorRule::build(field, &min, reach, h_min, h_max)?;
        let m = basis.order;
        let rows: Vec<Vec<Complex64>> = (0..rule.len())
            .into_par_iter()
            .map(|q| basis.eval_st(rule.s[q], rule.t[q]))
            .collect();
        let samples = DMatrix::from_fn(rule.len(), m, |q, n| rows[q][n]);
        Ok(EffectiveSetup {
            basis,
            rule,
            min,
            samples,
        })
    }

    /// `G̃_w[m,n] = ∫ ē_m e_n e^{-2(φ-φ_min)/h}` over the first `m` functions.
    pub fn weighted_gram(&self, h: f64, m: usize) -> DMatrix<Complex64> {
        let mut scaled = self.samples.columns(0, m).into_owned();
        for (q, mut row) in scaled.row_iter_mut().enumerate() {
            let w = (self.rule.w[q] * (-2.0 * self.rule.dphi[q] / h).exp()).sqrt();
            row *= Complex64::new(w, 0.0);
        }
        let mut g = scaled.adjoint() * &scaled;
        crate::numerics::linalg::hermitize(&mut g);
        g
    }

    /// Rayleigh-Ritz values of `h‖u‖²_∂ / ‖e^{-(φ-φ_min)/h}u‖²` on the first `m` functions.
    pub fn levels(&self, h: f64, m: usize, k_max: usize) -> Result<EffectiveLevels> {
        if m > self.basis.order || k_max == 0 || k_max > m {
            return invalid(format!("need 1 ≤ k_max ≤ m ≤ {}", self.basis.order));
        }
        let gw = self.weighted_gram(h, m);
        let gb = self.basis.gram.view((0, 0), (m, m)).into_owned().scale(h);
        // G̃_w x = ν h G_∂ x, so λ = e^{2φ_min/h}/ν and the largest ν come first
        let (nu, _) = eigh_pencil(&gw, &gb)?;
        let mut log_lambda = Vec::with_capacity(k_max);
        let mut min_nu = f64::INFINITY;
        for k in 0..k_max {
            let v = nu[m - 1 - k];
            if !(v > 0.0) {
                return solver(format!(
                    "weighted Gram pencil is numerically singular at h = {h} (ν = {v:e})"
                ));
            }
            min_nu = min_nu.min(v);
            log_lambda.push(2.0 * self.min.phi_min / h - v.ln());
        }
        let mut inside = 0.0;
        let mut total = 0.0;
        for q in 0..self.rule.len() {
            let c = self.rule.w[q]
                * (-2.0 * self.rule.dphi[q] / h).exp()
                * self.samples[(q, 0)].norm_sqr();
            total += c;
            if self.rule.window[q] {
                inside += c;
            }
        }
        let e0 = self.basis.eval_st(self.min.s_min, self.min.t_min)[0].norm_sqr();
        let laplace = 2.0 * PI * h / (self.min.a * self.min.b).sqrt() * e0;
        Ok(EffectiveLevels {
            h,
            order: m,
            log_lambda,
            min_nu,
            window_fraction: inside / total,
            laplace_ratio: total / laplace,
        })
    }
}

/// One row of the effective-spectrum report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveEntry {
    pub h: f64,
    /// `ln λ_k^eff(h)`, `k = 1..`.
    pub log_lambda: Vec<f64>,
    /// `ln[h^{1-k} e^{2φ_min/h} (d_H^k/d_B^k)²]`.
    pub log_asymptote: Vec<f64>,
    /// `λ_k^eff` divided by the asymptote.
    pub ratio: Vec<f64>,
    /// `ln λ_k^eff` with four more basis functions.
    pub log_lambda_refined: Vec<f64>,
    /// Largest `|Δ ln λ_k|` between the two basis sizes.
    pub truncation_change: f64,
    pub min_nu: f64,
    pub window_fraction: f64,
    pub laplace_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveSpectrumReport {
    pub delta: f64,
    pub phi_min: f64,
    pub s_min: f64,
    pub t_min: f64,
    pub a: f64,
    pub b: f64,
    pub g_prime_abs: f64,
    pub order: usize,
    pub d_h_closed: Vec<f64>,
    pub d_h_minimized: Vec<f64>,
    pub d_b: Vec<f64>,
    pub basis: BasisSummary,
    pub entries: Vec<EffectiveEntry>,
    /// Every `λ` in this report is stored as a natural logarithm.
    pub log_scale: bool,
}

/// Options for [`lambda_eff`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveOptions {
    pub k_max: usize,
    /// Basis size `M`; the convergence check uses `M + 4`.
    pub order: usize,
}

impl Default for EffectiveOptions {
    fn default() -> Self {
        EffectiveOptions {
            k_max: 2,
            order: 12,
        }
    }
}

/// Effective eigenvalues over an `h` ladder.
pub fn lambda_eff(
    field: &PotentialField,
    bih: Arc<Biholomorphism>,
    h_list: &[f64],
    opts: EffectiveOptions,
) -> Result<EffectiveSpectrumReport> {
    if h_list.is_empty() || h_list.iter().any(|h| !(*h > 0.0)) {
        return invalid("h list must be non-empty and positive");
    }
    let k_max = opts.k_max;
    if k_max == 0 || opts.order < k_max + 8 {
        return invalid(format!(
            "need k_max ≥ 1 and order ≥ k_max + 8, got {} and {}",
            k_max, opts.order
        ));
    }
    let min = field.locate_minimum()?;
    min.require()?;
    let disk = bih.disk_map(min.s_min, min.t_min)?;
    let big = HardyBasis::build(bih, disk, opts.order + 4, k_max)?;
    let small = big.truncate(opts.order)?;
    let h_min = h_list.iter().copied().fold(f64::INFINITY, f64::min);
    let h_max = h_list.iter().copied().fold(0.0, f64::max);
    let setup = EffectiveSetup::new(field, big, h_min, h_max)?;

    let hess = Matrix2::new(
        min.hessian[0][0],
        min.hessian[0][1],
        min.hessian[1][0],
        min.hessian[1][1],
    );
    let mut d_h = Vec::new();
    let mut d_h_min = Vec::new();
    let mut d_b = Vec::new();
    for k in 1..=k_max {
        d_h.push(d_h_closed(k, disk.g_prime_abs)?);
        d_h_min.push(small.minimize(k)?.d_h);
        d_b.push(d_b_closed(k, &hess)?);
    }
    let mut entries = Vec::new();
    for &h in h_list {
        let lv = setup.levels(h, opts.order, k_max)?;
        let fine = setup.levels(h, opts.order + 4, k_max)?;
        let mut log_asymptote = Vec::new();
        let mut ratio = Vec::new();
        for k in 1..=k_max {
            let la = (1.0 - k as f64) * h.ln()
                + 2.0 * min.phi_min / h
                + 2.0 * (d_h[k - 1] / d_b[k - 1]).ln();
            ratio.push((lv.log_lambda[k - 1] - la).exp());
            log_asymptote.push(la);
        }
        let truncation_change = lv
            .log_lambda
            .iter()
            .zip(&fine.log_lambda)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        entries.push(EffectiveEntry {
            h,
            log_lambda: lv.log_lambda,
            log_asymptote,
            ratio,
            log_lambda_refined: fine.log_lambda,
            truncation_change,
            min_nu: lv.min_nu,
            window_fraction: lv.window_fraction,
            laplace_ratio: lv.laplace_ratio,
        });
    }
    Ok(EffectiveSpectrumReport {
        delta: field.delta(),
        phi_min: min.phi_min,
        s_min: min.s_min,
        t_min: min.t_min,
        a: min.a,
        b: min.b,
        g_prime_abs: disk.g_prime_abs,
        order: opts.order,
        d_h_closed: d_h,
        d_h_minimized: d_h_min,
        d_b,
        basis: small.summary(),
        entries,
        log_scale: true,
    })
}

/// Effective eigenvalues below the positive essential threshold at one `h`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapEntry {
    pub h: f64,
    pub log_lambda_ess_plus: f64,
    pub count: usize,
    /// `ln λ_ess⁺ - ln λ_k^eff`; positive entries are inside the gap.
    pub log_margins: Vec<f64>,
}

/// Compare each report row with `(h, ln λ_ess⁺(h))` pairs at matching `h`.
pub fn gap_report(
    report: &EffectiveSpectrumReport,
    thresholds: &[(f64, f64)],
) -> Result<Vec<GapEntry>> {
    let mut out = Vec::new();
    for e in &report.entries {
        let Some(&(_, lt)) = thresholds
            .iter()
            .find(|(h, _)| (h - e.h).abs() <= 1e-12 * e.h)
        else {
            return invalid(format!("no threshold supplied for h = {}", e.h));
        };
        let log_margins: Vec<f64> = e.log_lambda.iter().map(|l| lt - l).collect();
        let count = log_margins.iter().filter(|m| **m > 0.0).count();
        out.push(GapEntry {
            h: e.h,
            log_lambda_ess_plus: lt,
            count,
            log_margins,
        });
    }
    Ok(out)
}

/// Relative size of `(-2ih∂_z̄ - A₁ - iA₂)(e^{-φ/h} v)` on sample points, with
/// `∂_z̄` replaced by centered differences of step `eta`. The identity makes
/// it vanish for holomorphic `v`, so what remains is the difference error.
pub fn intertwining_residual(
    field: &PotentialField,
    basis: &HardyBasis,
    coeffs: &DVector<Complex64>,
    h: f64,
    eta: f64,
    samples: &[(f64, f64)],
) -> Result<f64> {
    if !(h > 0.0 && eta > 0.0) {
        return invalid("h and the difference step must be positive");
    }
    let map = &field.map;
    let phi_ref = field.locate_minimum().map(|m| m.phi_min).unwrap_or(0.0);
    let big_f = |x: [f64; 2], s_guess: f64| -> Result<Complex64> {
        let (s, t) = map.inverse_near(x, s_guess)?;
        let v = basis.eval_phys(coeffs, x, s)?;
        Ok(v * (-(field.value(s, t) - phi_ref) / h).exp())
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &(s, t) in samples {
        if map.boundary_distance(s, t) < 2.0 * eta || s.abs() > field.l {
            return invalid(format!(
                "sample ({s}, {t}) too close to the boundary for step {eta}"
            ));
        }
        let x = map.theta_map(s, t);
        let f0 = big_f(x, s)?;
        let fx = (big_f([x[0] + eta, x[1]], s)? - big_f([x[0] - eta, x[1]], s)?) / (2.0 * eta);
        let fy = (big_f([x[0], x[1] + eta], s)? - big_f([x[0], x[1] - eta], s)?) / (2.0 * eta);
        let dbar = (fx + Complex64::i() * fy) * 0.5;
        let a = field.vector_potential_st(s, t);
        let r = Complex64::new(0.0, -2.0 * h) * dbar - Complex64::new(a[0], a[1]) * f0;
        worst = worst.max(r.norm());
        scale = scale.max(f0.norm());
    }
    Ok(worst / scale)
}

/// A 3×3 lattice of interior points around the minimum.
pub fn intertwining_samples(min: &MinimumReport, delta: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in -1..=1 {
        for j in -1..=1 {
            let t = (min.t_min + 0.3 * delta * j as f64).clamp(-0.6 * delta, 0.6 * delta);
            out.push((min.s_min + 0.5 * delta * i as f64, t));
        }
    }
    out
}

/// Unit vector `e_n` of length `m`.
pub fn unit_coeffs(m: usize, n: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(m);
    v[n] = Complex64::new(1.0, 0.0);
    v
}
