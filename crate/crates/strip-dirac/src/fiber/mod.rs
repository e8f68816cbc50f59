//! Fibered one-dimensional Dirac operators on `(-δ, δ)`:
//! `ψ ↦ ((ξ+t−h∂_t)ψ₂, (ξ+t+h∂_t)ψ₁)` with `ψ₁(±δ) = ∓ψ₂(±δ)`.

pub mod collocation;
pub mod galerkin;
pub mod halfline;
pub mod sweep;

pub use collocation::{dirac_fiber_eigs, FiberEigs};
pub use galerkin::FiberForm;
pub use halfline::{curvature_bound_state, halfline_a0, landau_check, A0Report, BoundState};
pub use sweep::{
    dispersion_sweep, dispersion_sweep_with_grid, threshold_neg, threshold_pos, DispersionCurve,
    ThresholdReport,
};

use crate::error::{invalid, Error, Result};
use crate::numerics::special::{ln_add_exp, ln_gauss_mass};
use serde::{Deserialize, Serialize};

/// Which half of the spectrum (and which quadratic form) is addressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    #[default]
    SpectralCollocation,
    SecondOrderFd,
}

/// Parameters of one fiber problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub h: f64,
    pub delta: f64,
    pub xi: f64,
    /// Grid size (collocation points minus one).
    pub n: usize,
    #[serde(default)]
    pub discretization: Discretization,
}

impl FiberSpec {
    pub fn new(h: f64, delta: f64, xi: f64) -> FiberSpec {
        FiberSpec {
            h,
            delta,
            xi,
            n: default_grid(h, delta, xi),
            discretization: Discretization::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_hd(self.h, self.delta)?;
        if !self.xi.is_finite() {
            return invalid("ξ must be finite");
        }
        if self.n < 16 {
            return invalid(format!("grid size {} below 16", self.n));
        }
        Ok(())
    }
}

/// Collocation size resolving scales `√h` and `h/(|ξ|-δ)` on `(-δ, δ)`.
pub fn default_grid(h: f64, delta: f64, xi: f64) -> usize {
    let excess = (xi.abs() - delta).max(0.0);
    let n = 48.0 + 14.0 * delta / h.sqrt() + 1.5 * excess * delta / h;
    (n.ceil() as usize).clamp(48, 320)
}

pub(crate) fn check_hd(h: f64, delta: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return invalid(format!("h must be positive, got {h}"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return invalid(format!("δ must be positive, got {delta}"));
    }
    Ok(())
}

/// `ln ν₁(ξ,h)`, where `ν₁ = h(e^{-(ξ-δ)²/h} + e^{-(ξ+δ)²/h}) / ∫_{-δ}^{δ} e^{-(ξ+t)²/h} dt`.
pub fn ln_nu1(xi: f64, h: f64, delta: f64) -> f64 {
    h.ln() + ln_add_exp(-(xi - delta).powi(2) / h, -(xi + delta).powi(2) / h)
        - ln_gauss_mass(xi, h, -delta, delta)
}

/// `ν₁(ξ,h)`, the Rayleigh value of the Gaussian `e^{-(ξ+t)²/2h}`.
pub fn nu1(xi: f64, h: f64, delta: f64) -> f64 {
    ln_nu1(xi, h, delta).exp()
}

/// `ℓ₁^±(λ,ξ,h)`, the bottom of the form `Q^±_{λ,ξ,h}` on `H¹(-δ,δ)`.
pub fn quad_form_ground(lambda: f64, xi: f64, h: f64, delta: f64, sign: Sign) -> Result<f64> {
    check_hd(h, delta)?;
    if !(lambda >= 0.0) {
        return invalid("λ must be non-negative");
    }
    let f = FiberForm::assemble(xi, h, delta, sign, galerkin::default_degree(h, delta))?;
    Ok(f.ground(lambda)?.energy)
}

/// `μ₁^±(ξ,h)` as the positive root of `λ ↦ ℓ₁^±(λ,ξ,h)`.
pub fn mu1_via_root(xi: f64, h: f64, delta: f64, sign: Sign) -> Result<f64> {
    check_hd(h, delta)?;
    let f = FiberForm::assemble(xi, h, delta, sign, galerkin::default_degree(h, delta))?;
    f.root().map_err(|e| annotate(e, xi))
}

/// `μ₁^±(ξ,h)` as the minimum of the Rayleigh-type functional `ρ^±`.
pub fn mu1_via_rho(xi: f64, h: f64, delta: f64, sign: Sign) -> Result<f64> {
    check_hd(h, delta)?;
    let f = FiberForm::assemble(xi, h, delta, sign, galerkin::default_degree(h, delta))?;
    Ok(f.minimize_rho(5, 0x5eed)?.0)
}

/// Distance of the `ρ⁺` minimizer from its projection on the Gaussian.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProjectorResidual {
    /// `‖ψ_ξ − Π_ξψ_ξ‖_{H¹}`.
    pub residual: f64,
    /// The same multiplied by `h^{3/2} e^{δ²/h}`.
    pub scaled: f64,
    /// `‖Π_ξψ_ξ‖`.
    pub projection_norm: f64,
    pub mu1: f64,
}

pub fn kernel_projector_residual(xi: f64, h: f64, delta: f64) -> Result<ProjectorResidual> {
    check_hd(h, delta)?;
    let f = FiberForm::assemble(xi, h, delta, Sign::Plus, galerkin::default_degree(h, delta))?;
    let (mu, x0, y) = f.minimize_rho(5, 0x5eed)?;
    let cap = 2.0 * h.sqrt() * (-delta * delta / h).exp();
    if mu > cap {
        return invalid(format!("ξ = {xi} is outside Ξ_h (μ₁⁺ = {mu:e} > {cap:e})"));
    }
    let (residual, projection_norm) = f.split_norms(x0, &y);
    Ok(ProjectorResidual {
        residual,
        scaled: residual * h.powf(1.5) * (delta * delta / h).exp(),
        projection_norm,
        mu1: mu,
    })
}

fn annotate(e: Error, xi: f64) -> Error {
    match e {
        Error::Solver(m) => Error::Solver(format!("ξ = {xi}: {m}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu1_matches_direct_formula_where_representable() {
        for &(xi, h) in &[(0.0, 0.3), (0.7, 0.2), (-1.4, 0.5)] {
            let d: f64 = 1.0;
            let sh = f64::sqrt(h);
            let den = 0.5
                * (std::f64::consts::PI * h).sqrt()
                * (libm::erf((xi + d) / sh) - libm::erf((xi - d) / sh));
            let num = h * ((-(xi - d) * (xi - d) / h).exp() + (-(xi + d) * (xi + d) / h).exp());
            assert!((nu1(xi, h, d) / (num / den) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn root_and_rho_agree_at_moderate_h() {
        for sign in [Sign::Plus, Sign::Minus] {
            let a = mu1_via_root(0.5, 0.2, 1.0, sign).unwrap();
            let b = mu1_via_rho(0.5, 0.2, 1.0, sign).unwrap();
            assert!((a / b - 1.0).abs() < 1e-9, "{sign:?} {a} {b}");
        }
    }
}
