//! Base curve built from a compactly supported curvature, and the tubular map
//! `Θ(s,t) = γ(s) + t n(s)` with metric factor `m(s,t) = 1 - tκ(s)`.
//!
//! The curve is parametrized by arclength. Inside the support `[-L₀, L₀]` the
//! tangent angle and position are tabulated from high-order quadrature and
//! interpolated; outside the support the straight continuation is evaluated in
//! closed form.

use crate::error::{invalid, Error, Result};
use crate::numerics::interp::Table1;
use crate::numerics::quad::Rule;
use serde::{Deserialize, Serialize};

/// Curvature profile `κ(s)` with compact support `|s| ≤ L₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurvatureProfile {
    /// `κ ≡ 0`, the straight strip.
    Zero,
    /// `a·exp(-s²/w²)·χ(s/L₀)` with a C^∞ cutoff `χ` equal to one on `|x| ≤ 1/2`.
    GaussianBump {
        amplitude: f64,
        width: f64,
        support: f64,
    },
    /// `a·(1 - (s/L₀)²)³` on `|s| ≤ L₀`, C² across the support edge.
    PiecewisePolynomial { amplitude: f64, support: f64 },
}

fn bump(y: f64) -> (f64, f64) {
    if y <= 0.0 {
        (0.0, 0.0)
    } else {
        let v = (-1.0 / y).exp();
        (v, v / (y * y))
    }
}

/// Smooth cutoff: value and derivative in `x`.
fn cutoff(x: f64) -> (f64, f64) {
    let r = x.abs();
    if r <= 0.5 {
        return (1.0, 0.0);
    }
    if r >= 1.0 {
        return (0.0, 0.0);
    }
    let u = 2.0 * (r - 0.5);
    let (p, dp) = bump(1.0 - u);
    let (q, dq) = bump(u);
    let den = p + q;
    let val = p / den;
    let dval_du = (-dp * den - p * (-dp + dq)) / (den * den);
    (val, dval_du * 2.0 * x.signum())
}

impl CurvatureProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CurvatureProfile::Zero => Ok(()),
            CurvatureProfile::GaussianBump {
                amplitude,
                width,
                support,
            } => {
                if !(amplitude.is_finite() && width > 0.0 && support > 0.0) {
                    return invalid("gaussian bump needs finite amplitude, width > 0, support > 0");
                }
                Ok(())
            }
            CurvatureProfile::PiecewisePolynomial { amplitude, support } => {
                if !(amplitude.is_finite() && support > 0.0) {
                    return invalid("polynomial profile needs finite amplitude and support > 0");
                }
                Ok(())
            }
        }
    }

    /// Half-length `L₀` of the support (zero for the straight strip).
    pub fn support(&self) -> f64 {
        match *self {
            CurvatureProfile::Zero => 0.0,
            CurvatureProfile::GaussianBump { support, .. } => support,
            CurvatureProfile::PiecewisePolynomial { support, .. } => support,
        }
    }

    /// Smallest length scale of the profile, used to size tables.
    pub fn feature_scale(&self) -> f64 {
        match *self {
            CurvatureProfile::Zero => 1.0,
            CurvatureProfile::GaussianBump { width, support, .. } => width.min(support / 2.0),
            CurvatureProfile::PiecewisePolynomial { support, .. } => support / 2.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            CurvatureProfile::Zero => true,
            CurvatureProfile::GaussianBump { amplitude, .. } => amplitude == 0.0,
            CurvatureProfile::PiecewisePolynomial { amplitude, .. } => amplitude == 0.0,
        }
    }

    /// `(κ(s), κ'(s))`.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        match *self {
            CurvatureProfile::Zero => (0.0, 0.0),
            CurvatureProfile::GaussianBump {
                amplitude,
                width,
                support,
            } => {
                if s.abs() >= support {
                    return (0.0, 0.0);
                }
                let (c, dc) = cutoff(s / support);
                let g = amplitude * (-(s * s) / (width * width)).exp();
                let dg = -2.0 * s / (width * width) * g;
                (g * c, dg * c + g * dc / support)
            }
            CurvatureProfile::PiecewisePolynomial { amplitude, support } => {
                if s.abs() >= support {
                    return (0.0, 0.0);
                }
                let x = s / support;
                let q = 1.0 - x * x;
                (
                    amplitude * q * q * q,
                    amplitude * 3.0 * q * q * (-2.0 * x) / support,
                )
            }
        }
    }

    pub fn kappa(&self, s: f64) -> f64 {
        self.eval(s).0
    }

    /// `max |κ|` estimated on a fine sample of the support.
    pub fn max_abs(&self) -> f64 {
        let l0 = self.support();
        if l0 == 0.0 {
            return 0.0;
        }
        let n = 4001;
        (0..n)
            .map(|i| self.kappa(-l0 + 2.0 * l0 * i as f64 / (n - 1) as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// Arclength-parametrized curve with `γ'' = κ n`, `n = γ'^⊥`.
#[derive(Debug, Clone)]
pub struct BaseCurve {
    pub profile: CurvatureProfile,
    pub tol: f64,
    l0: f64,
    theta: Table1,
    gx: Table1,
    gy: Table1,
    /// `θ` and `γ` at `s = ±L₀`, used for the exact straight continuation.
    ends: [(f64, f64, f64); 2],
}

/// Sampled point of the curve with its frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub theta: f64,
    pub gamma: [f64; 2],
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    pub kappa: f64,
}

impl BaseCurve {
    /// Tabulate `θ = ∫₀ˢ κ` and `γ = ∫₀ˢ (cos θ, sin θ)` on the support.
    pub fn build(profile: CurvatureProfile, tol: f64) -> Result<BaseCurve> {
        profile.validate()?;
        if !(tol > 0.0) {
            return invalid("quadrature tolerance must be positive");
        }
        let l0 = profile.support();
        if l0 == 0.0 {
            let zero = Table1 {
                x0: 0.0,
                dx: 1.0,
                values: vec![0.0; 8],
            };
            return Ok(BaseCurve {
                profile,
                tol,
                l0,
                theta: zero.clone(),
                gx: zero.clone(),
                gy: zero,
                ends: [(0.0, 0.0, 0.0); 2],
            });
        }
        let mut cells = (2.0 * l0 / (profile.feature_scale() / 200.0)).ceil() as usize;
        cells += cells % 2;
        for _ in 0..4 {
            let coarse = integrate_tables(&profile, l0, cells, 8);
            let fine = integrate_tables(&profile, l0, cells, 16);
            let err = coarse
                .iter()
                .zip(&fine)
                .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            if err <= tol {
                let [theta, gx, gy] = fine;
                let last = theta.values.len() - 1;
                let ends = [
                    (theta.values[0], gx.values[0], gy.values[0]),
                    (theta.values[last], gx.values[last], gy.values[last]),
                ];
                return Ok(BaseCurve {
                    profile,
                    tol,
                    l0,
                    theta,
                    gx,
                    gy,
                    ends,
                });
            }
            cells *= 2;
        }
        Err(Error::Solver(format!(
            "curve quadrature did not reach tol {tol:e}"
        )))
    }

    pub fn support(&self) -> f64 {
        self.l0
    }

    /// Total turning `θ(+∞) - θ(-∞)`.
    pub fn total_turning(&self) -> f64 {
        self.ends[1].0 - self.ends[0].0
    }

    pub fn theta(&self, s: f64) -> f64 {
        if s >= self.l0 {
            self.ends[1].0
        } else if s <= -self.l0 {
            self.ends[0].0
        } else {
            self.theta.eval(s).0
        }
    }

    pub fn point(&self, s: f64) -> CurvePoint {
        let kappa = self.profile.kappa(s);
        let (theta, gamma) = if s >= self.l0 || s <= -self.l0 {
            let (th, x, y) = if s >= self.l0 {
                self.ends[1]
            } else {
                self.ends[0]
            };
            let anchor = if s >= self.l0 { self.l0 } else { -self.l0 };
            let d = s - anchor;
            (th, [x + d * th.cos(), y + d * th.sin()])
        } else {
            (self.theta.eval(s).0, [self.gx.eval(s).0, self.gy.eval(s).0])
        };
        let (sn, cs) = theta.sin_cos();
        CurvePoint {
            theta,
            gamma,
            tangent: [cs, sn],
            normal: [-sn, cs],
            kappa,
        }
    }
}

/// Cumulative tables of θ, γx, γy on `cells + 1` uniform nodes of `[-L₀, L₀]`,
/// each cell integrated with a nested `q`-point Gauss rule.
fn integrate_tables(profile: &CurvatureProfile, l0: f64, cells: usize, q: usize) -> [Table1; 3] {
    let ds = 2.0 * l0 / cells as f64;
    let mid = cells / 2;
    let base = Rule::gauss_legendre(q, 0.0, 1.0);
    let theta_int = |a: f64, b: f64| -> f64 {
        let h = b - a;
        base.nodes
            .iter()
            .zip(&base.weights)
            .map(|(x, w)| w * h * profile.kappa(a + h * x))
            .sum()
    };
    let n = cells + 1;
    let mut th = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    // march outward from s = 0 (node `mid`) in both directions
    for dir in [1i64, -1] {
        let mut i = mid as i64;
        while (dir > 0 && (i as usize) < cells) || (dir < 0 && i > 0) {
            let j = (i + dir) as usize;
            let a = -l0 + i as f64 * ds;
            let b = -l0 + j as f64 * ds;
            let h = b - a;
            let th_a = th[i as usize];
            let mut sx = 0.0;
            let mut sy = 0.0;
            for (x, w) in base.nodes.iter().zip(&base.weights) {
                let sig = a + h * x;
                let t = th_a + theta_int(a, sig);
                sx += w * h * t.cos();
                sy += w * h * t.sin();
            }
            th[j] = th_a + theta_int(a, b);
            gx[j] = gx[i as usize] + sx;
            gy[j] = gy[i as usize] + sy;
            i += dir;
        }
    }
    let mk = |values| Table1 {
        x0: -l0,
        dx: ds,
        values,
    };
    [mk(th), mk(gx), mk(gy)]
}

/// `Θ(s,t) = γ(s) + t n(s)` on `ℝ × [-δ, δ]`.
#[derive(Debug, Clone)]
pub struct TubularMap {
    pub curve: BaseCurve,
    pub delta: f64,
    /// `1 - δ·max|κ|`, the smallest metric factor.
    pub min_metric: f64,
}

impl TubularMap {
    /// Reject `δ·max|κ| ≥ 1` and sampled self-intersections.
    pub fn new(curve: BaseCurve, delta: f64) -> Result<TubularMap> {
        if !(delta > 0.0 && delta.is_finite()) {
            return invalid("half-width δ must be positive");
        }
        let kmax = curve.profile.max_abs();
        if delta * kmax >= 1.0 {
            return invalid(format!(
                "δ·max|κ| = {:.4} ≥ 1: metric factor 1 - tκ vanishes",
                delta * kmax
            ));
        }
        let map = TubularMap {
            curve,
            delta,
            min_metric: 1.0 - delta * kmax,
        };
        if let Some((s1, s2)) = map.self_intersection() {
            return Err(Error::Assumption(format!(
                "tubular map not injective: samples at s = {s1:.3} and s = {s2:.3} overlap"
            )));
        }
        Ok(map)
    }

    pub fn metric(&self, s: f64, t: f64) -> f64 {
        1.0 - t * self.curve.profile.kappa(s)
    }

    pub fn theta_map(&self, s: f64, t: f64) -> [f64; 2] {
        let p = self.curve.point(s);
        [p.gamma[0] + t * p.normal[0], p.gamma[1] + t * p.normal[1]]
    }

    /// Distance from `Θ(s,t)` to the two boundary curves, by sampling
    /// `|s' - s| ≤ 4δ` and refining the best sample.
    pub fn boundary_distance(&self, s: f64, t: f64) -> f64 {
        let x = self.theta_map(s, t);
        let reach = 4.0 * self.delta;
        let n = 400;
        let mut best = f64::INFINITY;
        for side in [-1.0, 1.0] {
            let d = |u: f64| {
                let y = self.theta_map(u, side * self.delta);
                (x[0] - y[0]).hypot(x[1] - y[1])
            };
            let step = 2.0 * reach / n as f64;
            let (mut bu, mut bd) = (s, f64::INFINITY);
            for i in 0..=n {
                let u = s - reach + i as f64 * step;
                let v = d(u);
                if v < bd {
                    (bu, bd) = (u, v);
                }
            }
            let refined = crate::numerics::optimize::brent_min(
                |u| Ok(d(u)),
                bu - step,
                bu + step,
                1e-12,
                100,
            )
            .map(|r| r.1)
            .unwrap_or(bd);
            best = best.min(refined.min(bd));
        }
        best
    }

    /// Pairwise sampled test: points with `|s - s'| > 2δ` must stay apart.
    fn self_intersection(&self) -> Option<(f64, f64)> {
        let l0 = self.curve.support();
        if l0 == 0.0 {
            return None;
        }
        let reach = l0 + 4.0 * self.delta + 2.0;
        let ds = (self.delta / 4.0).min(0.05);
        let ns = (2.0 * reach / ds).ceil() as usize + 1;
        let ts = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let dt = 0.5 * self.delta;
        let thresh = 0.5 * ds.min(dt);
        let mut pts = Vec::with_capacity(ns * ts.len());
        for i in 0..ns {
            let s = -reach + i as f64 * ds;
            for &u in &ts {
                pts.push((s, self.theta_map(s, u * self.delta)));
            }
        }
        for (a, (sa, pa)) in pts.iter().enumerate() {
            for (sb, pb) in pts.iter().skip(a + 1) {
                if (sb - sa).abs() <= 2.0 * self.delta {
                    continue;
                }
                let d = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
                if d < thresh {
                    return Some((*sa, *sb));
                }
            }
        }
        None
    }

    /// Inverse tubular coordinates of a physical point, by Newton on `s`.
    pub fn inverse(&self, x: [f64; 2]) -> Result<(f64, f64)> {
        let l0 = self.curve.support();
        let s = if l0 == 0.0 {
            x[0]
        } else {
            let reach = l0 + 4.0 * self.delta + 2.0;
            let n = 800;
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..=n {
                let s = -reach + 2.0 * reach * i as f64 / n as f64;
                let g = self.curve.point(s).gamma;
                let d = (x[0] - g[0]).hypot(x[1] - g[1]);
                if d < best.0 {
                    best = (d, s);
                }
            }
            // tails: project onto the straight continuations
            for end in [-1.0, 1.0] {
                let anchor = end * reach;
                let p = self.curve.point(anchor);
                let along = (x[0] - p.gamma[0]) * p.tangent[0] + (x[1] - p.gamma[1]) * p.tangent[1];
                if along * end > 0.0 {
                    best.1 = anchor + along;
                }
            }
            best.1
        };
        self.inverse_near(x, s)
    }

    /// Newton iteration for the inverse starting from the guess `s`.
    pub fn inverse_near(&self, x: [f64; 2], mut s: f64) -> Result<(f64, f64)> {
        for _ in 0..50 {
            let p = self.curve.point(s);
            let d = [x[0] - p.gamma[0], x[1] - p.gamma[1]];
            let g = d[0] * p.tangent[0] + d[1] * p.tangent[1];
            let t = d[0] * p.normal[0] + d[1] * p.normal[1];
            let m = 1.0 - t * p.kappa;
            let step = g / m;
            s += step;
            if step.abs() < 1e-14 * (1.0 + s.abs()) {
                let p = self.curve.point(s);
                let t = (x[0] - p.gamma[0]) * p.normal[0] + (x[1] - p.gamma[1]) * p.normal[1];
                return Ok((s, t));
            }
        }
        Err(Error::Solver("inverse tubular map did not converge".into()))
    }
}
