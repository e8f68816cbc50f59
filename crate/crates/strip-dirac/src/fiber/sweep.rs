//! Dispersion curves and the thresholds of the essential spectrum.

use super::{check_hd, dirac_fiber_eigs, mu1_via_root, FiberSpec, Sign};
use crate::error::{invalid, Error, Result};
use crate::numerics::optimize::{brent_min, scan_then_brent};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sampled branches `μ_k^±(ξ,h)`, negative ones stored as positive numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionCurve {
    pub h: f64,
    pub delta: f64,
    pub xi: Vec<f64>,
    /// `positive[i][k] = μ_{k+1}^+(xi[i])`.
    pub positive: Vec<Vec<f64>>,
    pub negative: Vec<Vec<f64>>,
}

impl DispersionCurve {
    pub fn branches(&self) -> usize {
        self.positive.first().map_or(0, |v| v.len())
    }

    /// Largest `|μ(ξ) − μ(−ξ)|` over mirrored sample pairs, relative to `μ`.
    pub fn evenness_defect(&self) -> f64 {
        let n = self.xi.len();
        let mut worst: f64 = 0.0;
        for i in 0..n / 2 {
            let j = n - 1 - i;
            if (self.xi[i] + self.xi[j]).abs() > 1e-12 {
                continue;
            }
            for (a, b) in self.positive[i].iter().zip(&self.positive[j]) {
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
            }
            for (a, b) in self.negative[i].iter().zip(&self.negative[j]) {
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
            }
        }
        worst
    }

    /// Sample index and value of the smallest `μ₁^±`.
    pub fn branch_min(&self, sign: Sign) -> (usize, f64) {
        let col: &Vec<Vec<f64>> = match sign {
            Sign::Plus => &self.positive,
            Sign::Minus => &self.negative,
        };
        col.iter()
            .enumerate()
            .map(|(i, v)| (i, v[0]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, f64::NAN))
    }
}

/// Default window half-width `δ + 2√h + 2`.
pub fn default_window(h: f64, delta: f64) -> f64 {
    delta + 2.0 * h.sqrt() + 2.0
}

/// Sweep `ξ` over `[-w, w]` (`w` defaults to [`default_window`]) with an odd
/// number of samples so that the grid is symmetric and contains `ξ = 0`.
pub fn dispersion_sweep(
    h: f64,
    delta: f64,
    window: Option<f64>,
    k: usize,
    resolution: usize,
) -> Result<DispersionCurve> {
    dispersion_sweep_with_grid(h, delta, window, k, resolution, None)
}

/// [`dispersion_sweep`] with a fixed collocation size instead of [`super::default_grid`].
pub fn dispersion_sweep_with_grid(
    h: f64,
    delta: f64,
    window: Option<f64>,
    k: usize,
    resolution: usize,
    grid: Option<usize>,
) -> Result<DispersionCurve> {
    check_hd(h, delta)?;
    if k == 0 {
        return invalid("need at least one branch");
    }
    let w = window.unwrap_or_else(|| default_window(h, delta));
    if !(w > 0.0) {
        return invalid("window half-width must be positive");
    }
    let n = resolution.max(3) | 1;
    let xi: Vec<f64> = (0..n)
        .map(|i| -w + 2.0 * w * i as f64 / (n - 1) as f64)
        .collect();
    let rows: Vec<_> = xi
        .par_iter()
        .map(|&x| {
            let mut spec = FiberSpec::new(h, delta, x);
            if let Some(n) = grid {
                spec.n = n;
            }
            dirac_fiber_eigs(&spec, k).map_err(|e| match e {
                Error::Solver(m) if !m.starts_with("ξ") => Error::Solver(format!("ξ = {x}: {m}")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (positive, negative) = rows.into_iter().map(|r| (r.positive, r.negative)).unzip();
    Ok(DispersionCurve {
        h,
        delta,
        xi,
        positive,
        negative,
    })
}

/// Infima of the fiber branches and where they are attained.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub h: f64,
    pub delta: f64,
    pub lambda_plus: f64,
    pub xi_plus: f64,
    pub nu1_at_zero: f64,
    /// `λ_ess⁺ / ν₁(0,h)`.
    pub ratio_plus: f64,
    pub lambda_minus: f64,
    pub xi_minus: f64,
    pub a0: f64,
    /// `λ_ess⁻ / √h`, to be compared with `a₀`.
    pub ratio_minus: f64,
    /// `δ − √h a₀`, the expected location of the negative minimum.
    pub xi_minus_predicted: f64,
}

impl ThresholdReport {
    pub fn compute(h: f64, delta: f64, a0: f64) -> Result<ThresholdReport> {
        let (lp, xp) = threshold_pos(h, delta)?;
        let (lm, xm) = threshold_neg(h, delta, a0)?;
        let nu = super::nu1(0.0, h, delta);
        Ok(ThresholdReport {
            h,
            delta,
            lambda_plus: lp,
            xi_plus: xp,
            nu1_at_zero: nu,
            ratio_plus: lp / nu,
            lambda_minus: lm,
            xi_minus: xm,
            a0,
            ratio_minus: lm / h.sqrt(),
            xi_minus_predicted: delta - h.sqrt() * a0,
        })
    }
}

/// `λ_ess⁺(h) = inf_ξ μ₁⁺(ξ,h)` and a minimizer `ξ* ≥ 0`.
pub fn threshold_pos(h: f64, delta: f64) -> Result<(f64, f64)> {
    check_hd(h, delta)?;
    let w = default_window(h, delta);
    let f = |x: f64| mu1_via_root(x, h, delta, Sign::Plus).map(f64::ln);
    let (x, lv) = scan_then_brent(f, 0.0, w, 25, 1e-8)?;
    Ok((lv.exp(), x))
}

/// `λ_ess⁻(h) = inf_ξ μ₁⁻(ξ,h)`; the scan is refined around `δ − √h a₀`.
pub fn threshold_neg(h: f64, delta: f64, a0: f64) -> Result<(f64, f64)> {
    check_hd(h, delta)?;
    if !(a0 > 0.0 && a0 < std::f64::consts::SQRT_2) {
        return invalid(format!("a₀ = {a0} outside (0, √2)"));
    }
    let w = default_window(h, delta);
    let f = |x: f64| mu1_via_root(x, h, delta, Sign::Minus);
    let (xs, vs) = scan_then_brent(f, 0.0, w, 25, 1e-8)?;
    let guess = delta - h.sqrt() * a0;
    let span = 3.0 * h.sqrt();
    let (xg, vg) = brent_min(f, (guess - span).max(0.0), guess + span, 1e-9, 200)?;
    Ok(if vg <= vs { (vg, xg) } else { (vs, xs) })
}
