//! Conformal map `f = α + iβ` from the curved strip onto `S_δ`.
//!
//! `β` is harmonic with `β = ±δ` on the two boundary curves; it is solved in
//! tubular coordinates with `β = t` at the truncation ends. `α` is recovered
//! by integrating `∇α = (∂₂β, -∂₁β)`, which in tubular coordinates reads
//! `α_s = m β_t`, `α_t = -β_s / m`. Beyond the truncation the map is taken to
//! be `s + it`.

use crate::curve::TubularMap;
use crate::error::{invalid, solver, Result};
use crate::numerics::interp::{Grid2, Jet2};
use crate::potential::solve_dirichlet;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `f̃(s,t)` and the complex derivative `f'` at the corresponding physical point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapJet {
    pub f: Complex64,
    pub df: Complex64,
}

#[derive(Debug, Clone)]
pub struct Biholomorphism {
    pub map: TubularMap,
    pub l: f64,
    pub alpha: Grid2,
    pub beta: Grid2,
    /// Max relative residual of the sparse Laplace solve.
    pub solve_residual: f64,
    /// Max circulation of `∇α` per unit cell area.
    pub loop_residual: f64,
}

/// Sup-norm deviations of `f̃` from the identity `(s,t) ↦ s + it`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityDeviation {
    pub value: f64,
    pub derivative: f64,
}

impl IdentityDeviation {
    /// `‖f̃ - id‖_{C¹}`.
    pub fn c1(&self) -> f64 {
        self.value.max(self.derivative)
    }
}

/// Default truncation for the map, `L₀ + 10δ`: `β - t` decays like `e^{-π|s|/2δ}`.
pub fn default_truncation(map: &TubularMap) -> f64 {
    map.curve.support() + 10.0 * map.delta
}

impl Biholomorphism {
    /// Grid with `ns × nt` nodes; both counts are rounded up to odd numbers so
    /// that the basepoint `(0, 0)` is a node.
    pub fn solve(map: &TubularMap, l: f64, ns: usize, nt: usize) -> Result<Biholomorphism> {
        if !(l > 0.0) {
            return invalid("truncation length must be positive");
        }
        let (ns, nt) = (ns | 1, nt | 1);
        let (beta, solve_residual) = solve_dirichlet(map, l, ns, nt, |_, _| 0.0, |_, t| t)?;
        let kappa = |s: f64| map.curve.profile.kappa(s);
        let (ds, dt) = (beta.ds, beta.dt);
        let mut bs = vec![0.0; ns * nt];
        let mut bt = vec![0.0; ns * nt];
        for i in 0..ns {
            for j in 0..nt {
                let jet = beta.jet(beta.s(i), beta.t(j));
                bs[i * nt + j] = jet.fs;
                bt[i * nt + j] = jet.ft;
            }
        }
        let m = |i: usize, j: usize| 1.0 - beta.t(j) * kappa(beta.s(i));
        let a_s = |i: usize, j: usize| m(i, j) * bt[i * nt + j];
        let a_t = |i: usize, j: usize| -bs[i * nt + j] / m(i, j);

        // trapezoid sweeps: along t = 0 from s = 0, then along each column
        let (i0, j0) = (ns / 2, nt / 2);
        let mut alpha = vec![0.0; ns * nt];
        for i in i0 + 1..ns {
            alpha[i * nt + j0] =
                alpha[(i - 1) * nt + j0] + 0.5 * ds * (a_s(i - 1, j0) + a_s(i, j0));
        }
        for i in (0..i0).rev() {
            alpha[i * nt + j0] =
                alpha[(i + 1) * nt + j0] - 0.5 * ds * (a_s(i + 1, j0) + a_s(i, j0));
        }
        for i in 0..ns {
            for j in j0 + 1..nt {
                alpha[i * nt + j] = alpha[i * nt + j - 1] + 0.5 * dt * (a_t(i, j - 1) + a_t(i, j));
            }
            for j in (0..j0).rev() {
                alpha[i * nt + j] = alpha[i * nt + j + 1] - 0.5 * dt * (a_t(i, j + 1) + a_t(i, j));
            }
        }
        let mut loop_residual: f64 = 0.0;
        for i in 0..ns - 1 {
            for j in 0..nt - 1 {
                let c = 0.5 * ds * (a_s(i, j) + a_s(i + 1, j))
                    + 0.5 * dt * (a_t(i + 1, j) + a_t(i + 1, j + 1))
                    - 0.5 * ds * (a_s(i, j + 1) + a_s(i + 1, j + 1))
                    - 0.5 * dt * (a_t(i, j) + a_t(i, j + 1));
                loop_residual = loop_residual.max(c.abs() / (ds * dt));
            }
        }
        let alpha = Grid2 {
            values: alpha,
            ..beta.clone()
        };
        let bih = Biholomorphism {
            map: map.clone(),
            l,
            alpha,
            beta,
            solve_residual,
            loop_residual,
        };
        if let Some((s, t)) = bih.vanishing_derivative() {
            return solver(format!("f' vanishes near (s, t) = ({s:.3}, {t:.3})"));
        }
        Ok(bih)
    }

    /// Grid spacing close to `h` in both directions.
    pub fn solve_with_spacing(map: &TubularMap, l: f64, h: f64) -> Result<Biholomorphism> {
        if !(h > 0.0) {
            return invalid("grid spacing must be positive");
        }
        let ns = (2.0 * l / h).round() as usize + 1;
        let nt = (2.0 * map.delta / h).round() as usize + 1;
        Self::solve(map, l, ns.max(5), nt.max(5))
    }

    pub fn delta(&self) -> f64 {
        self.map.delta
    }

    fn jets(&self, s: f64, t: f64) -> (Jet2, Jet2) {
        if s.abs() >= self.l {
            let a = Jet2 {
                f: s,
                fs: 1.0,
                ..Jet2::default()
            };
            let b = Jet2 {
                f: t,
                ft: 1.0,
                ..Jet2::default()
            };
            (a, b)
        } else {
            (self.alpha.jet(s, t), self.beta.jet(s, t))
        }
    }

    /// `f̃(s,t)` and `f'` at `Θ(s,t)`; `f' = ∂₂β + i∂₁β` by Cauchy-Riemann.
    pub fn eval_st(&self, s: f64, t: f64) -> MapJet {
        let (a, b) = self.jets(s, t);
        let p = self.map.curve.point(s);
        let m = 1.0 - t * p.kappa;
        let g = [
            b.fs / m * p.tangent[0] + b.ft * p.normal[0],
            b.fs / m * p.tangent[1] + b.ft * p.normal[1],
        ];
        MapJet {
            f: Complex64::new(a.f, b.f),
            df: Complex64::new(g[1], g[0]),
        }
    }

    /// `f(x)` for a physical point.
    pub fn forward(&self, x: [f64; 2]) -> Result<MapJet> {
        let (s, t) = self.map.inverse(x)?;
        Ok(self.eval_st(s, t))
    }

    /// Tubular coordinates of `f⁻¹(w)`, by Newton on the interpolated map.
    pub fn inverse_st(&self, w: Complex64) -> Result<(f64, f64)> {
        let d = self.delta();
        if !(w.im.abs() < d) {
            return invalid(format!("{w} outside the strip |Im w| < {d}"));
        }
        let (mut s, mut t) = (w.re, w.im);
        for _ in 0..60 {
            let (a, b) = self.jets(s, t);
            let (ra, rb) = (a.f - w.re, b.f - w.im);
            let det = a.fs * b.ft - a.ft * b.fs;
            let ds = (ra * b.ft - rb * a.ft) / det;
            let dt = (a.fs * rb - b.fs * ra) / det;
            s -= ds;
            t = (t - dt).clamp(-d, d);
            if ds.abs().max(dt.abs()) < 1e-14 * (1.0 + s.abs()) {
                return Ok((s, t));
            }
        }
        solver(format!("inverse conformal map did not converge at {w}"))
    }

    fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let g = &self.beta;
        (0..g.ns).flat_map(move |i| (0..g.nt).map(move |j| (g.s(i), g.t(j))))
    }

    fn vanishing_derivative(&self) -> Option<(f64, f64)> {
        self.nodes()
            .find(|&(s, t)| !(self.eval_st(s, t).df.norm() > 1e-8))
    }

    /// Max of `|α_s - mβ_t|` and `|α_t + β_s/m|` over the grid nodes.
    pub fn cr_residual(&self) -> f64 {
        self.nodes()
            .map(|(s, t)| {
                let (a, b) = (self.alpha.jet(s, t), self.beta.jet(s, t));
                let m = self.map.metric(s, t);
                (a.fs - m * b.ft).abs().max((a.ft + b.fs / m).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Sup-norm distance of `f̃` and its first derivatives to the identity.
    pub fn identity_deviation(&self) -> IdentityDeviation {
        let mut out = IdentityDeviation {
            value: 0.0,
            derivative: 0.0,
        };
        for (s, t) in self.nodes() {
            let (a, b) = (self.alpha.jet(s, t), self.beta.jet(s, t));
            out.value = out.value.max((a.f - s).abs()).max((b.f - t).abs());
            let d = [a.fs - 1.0, a.ft, b.fs, b.ft - 1.0];
            out.derivative = d.iter().fold(out.derivative, |acc, x| acc.max(x.abs()));
        }
        out
    }

    /// `(‖f'‖_∞, ‖(f⁻¹)'‖_∞)` on the grid; the identity tails contribute 1.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        let (mut hi, mut lo) = (1.0f64, 1.0f64);
        for (s, t) in self.nodes() {
            let r = self.eval_st(s, t).df.norm();
            hi = hi.max(r);
            lo = lo.min(r);
        }
        (hi, 1.0 / lo)
    }

    /// Disk map `g : 𝔻 → Ω` with `g(0) = Θ(s,t)`.
    pub fn disk_map(&self, s: f64, t: f64) -> Result<DiskMap> {
        let d = self.delta();
        if !(t.abs() < d) {
            return invalid("base point must be interior");
        }
        let jet = self.eval_st(s, t);
        let c = PI / (4.0 * d);
        let w0 = (jet.f * c).tanh();
        let r = w0.norm();
        if r > 1.0 - 1e-8 {
            return solver(format!("base point too close to the boundary (|w₀| = {r})"));
        }
        let scale = 4.0 * d / PI;
        let mobius = 1.0 - r * r;
        let artanh = 1.0 / (Complex64::new(1.0, 0.0) - w0 * w0).norm();
        let inverse = 1.0 / jet.df.norm();
        Ok(DiskMap {
            delta: d,
            s,
            t,
            f0: jet.f,
            df0: jet.df,
            w0,
            chain: ChainFactors {
                scale,
                mobius,
                artanh,
                inverse,
            },
            g_prime_abs: scale * mobius * artanh * inverse,
        })
    }
}

/// Moduli of the chain-rule factors of `g = f⁻¹ ∘ (4δ/π)artanh ∘ M`,
/// `M(w) = (w + w₀)/(1 + w̄₀w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainFactors {
    /// `4δ/π`.
    pub scale: f64,
    /// `|M'(0)| = 1 - |w₀|²`.
    pub mobius: f64,
    /// `|artanh'(w₀)| = 1/|1 - w₀²|`.
    pub artanh: f64,
    /// `|(f⁻¹)'(f(z))| = 1/|f'(z)|`.
    pub inverse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskMap {
    pub delta: f64,
    /// Tubular coordinates of `g(0)`.
    pub s: f64,
    pub t: f64,
    pub f0: Complex64,
    pub df0: Complex64,
    /// `tanh(π f(z₀)/4δ)`.
    pub w0: Complex64,
    pub chain: ChainFactors,
    pub g_prime_abs: f64,
}

impl DiskMap {
    fn c(&self) -> f64 {
        PI / (4.0 * self.delta)
    }

    /// `g(w)` in tubular coordinates.
    pub fn eval_st(&self, bih: &Biholomorphism, w: Complex64) -> Result<(f64, f64)> {
        if !(w.norm() < 1.0) {
            return invalid("point outside the unit disk");
        }
        let z = (w + self.w0) / (Complex64::new(1.0, 0.0) + self.w0.conj() * w);
        bih.inverse_st(z.atanh() / self.c())
    }

    /// `g⁻¹` and `((g⁻¹)')^{1/2}` at the physical point with tubular
    /// coordinates `(s,t)`, given `f` there. The square root of `f'` follows
    /// the continuous branch `arg f' ≈ -θ(s)`.
    pub fn pullback(&self, jet: &MapJet, theta: f64) -> (Complex64, Complex64) {
        let c = self.c();
        let one = Complex64::new(1.0, 0.0);
        let cf = jet.f * c;
        let tau = cf.tanh();
        let den = one - self.w0.conj() * tau;
        let g = (tau - self.w0) / den;
        let rot = Complex64::from_polar(1.0, theta);
        let sqrt_df = (jet.df * rot).sqrt() * Complex64::from_polar(1.0, -0.5 * theta);
        let root = one * (1.0 - self.w0.norm_sqr()).sqrt() / den / cf.cosh() * c.sqrt() * sqrt_df;
        (g, root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{BaseCurve, CurvatureProfile};

    #[test]
    fn straight_strip_is_identity() {
        let c = BaseCurve::build(CurvatureProfile::Zero, 1e-12).unwrap();
        let map = TubularMap::new(c, 1.0).unwrap();
        let b = Biholomorphism::solve_with_spacing(&map, 6.0, 0.1).unwrap();
        assert!(b.identity_deviation().c1() < 1e-10);
        let d = b.disk_map(0.0, 0.0).unwrap();
        assert!((d.g_prime_abs - 4.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn inverse_round_trip_on_bump() {
        let p = CurvatureProfile::GaussianBump {
            amplitude: 0.8,
            width: 0.8,
            support: 3.0,
        };
        let map = TubularMap::new(BaseCurve::build(p, 1e-12).unwrap(), 1.0).unwrap();
        let b = Biholomorphism::solve_with_spacing(&map, 8.0, 0.1).unwrap();
        for &(s, t) in &[(0.0, 0.1), (1.3, -0.7), (-2.0, 0.9)] {
            let w = b.eval_st(s, t).f;
            let (s2, t2) = b.inverse_st(w).unwrap();
            assert!((s - s2).abs() < 1e-10 && (t - t2).abs() < 1e-10);
        }
    }
}
