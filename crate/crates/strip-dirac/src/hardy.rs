//! Hardy space of the straight strip `S_δ = {|Im z| < δ}` in its Fourier
//! picture. With the unitary transform `û(ξ) = (2π)^{-1/2} ∫ u(x) e^{-ixξ} dx`,
//! a holomorphic `u` on the strip satisfies `û_y(ξ) = e^{-yξ} û(ξ)` on each
//! horizontal line, so every norm reduces to a weighted integral of `|û|²`.
//!
//! Elements are stored as piecewise-polynomial samples of `û` on Gauss-Legendre
//! panels. Outside the panels `û` is taken to be zero; an optional set of tail
//! samples measures how much weighted mass that truncation discards.

use crate::error::{invalid, Result};
use crate::numerics::quad::Rule;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Default bound on the relative weighted tail mass.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Sample of `|û|²` beyond the grid edge, kept only to certify decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    pub xi: f64,
    pub weight: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripHardyElement {
    pub delta: f64,
    /// Panel breakpoints, increasing.
    pub breaks: Vec<f64>,
    /// Gauss-Legendre points per panel.
    pub order: usize,
    pub xi: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
    pub tail: Vec<TailSample>,
    pub tail_tol: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return invalid(format!("strip half-width must be positive, got {delta}"));
    }
    Ok(())
}

/// `sinh(2δξ)/ξ`, the interior kernel, with its removable singularity.
fn interior_kernel(delta: f64, xi: f64) -> f64 {
    let x = 2.0 * delta * xi;
    if x.abs() < 1e-3 {
        let x2 = x * x;
        2.0 * delta * (1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0)))
    } else {
        x.sinh() / xi
    }
}

/// `√((2k)! / (2^{2k+1} π))`, the Cauchy-estimate constant.
pub fn cauchy_constant(k: u32) -> f64 {
    let mut fact = 1.0;
    for j in 1..=2 * k {
        fact *= j as f64;
    }
    (fact / (2f64.powi(2 * k as i32 + 1) * std::f64::consts::PI)).sqrt()
}

impl StripHardyElement {
    /// Sample `f` on the panels given by `breaks`; `û = 0` outside.
    pub fn from_fn(
        delta: f64,
        breaks: &[f64],
        order: usize,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<StripHardyElement> {
        check_delta(delta)?;
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("panel breakpoints must be strictly increasing");
        }
        if order < 2 {
            return invalid("need at least two points per panel");
        }
        let rule = Rule::piecewise(order, breaks);
        let values = rule.nodes.iter().map(|&x| f(x)).collect();
        Ok(StripHardyElement {
            delta,
            breaks: breaks.to_vec(),
            order,
            xi: rule.nodes,
            weights: rule.weights,
            values,
            tail: Vec::new(),
            tail_tol: DEFAULT_TAIL_TOL,
        })
    }

    /// Sample `f` on `[-edge, edge]` and record its tail on `edge < |ξ| < 3·edge`.
    pub fn from_fn_with_tail(
        delta: f64,
        edge: f64,
        panels: usize,
        order: usize,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<StripHardyElement> {
        if !(edge > 0.0) {
            return invalid("grid edge must be positive");
        }
        let panels = panels.max(1);
        let breaks: Vec<f64> = (0..=panels)
            .map(|i| -edge + 2.0 * edge * i as f64 / panels as f64)
            .collect();
        let mut u = Self::from_fn(delta, &breaks, order, &f)?;
        let side = Rule::composite(order, panels, edge, 3.0 * edge);
        for (x, w) in side.nodes.iter().zip(&side.weights) {
            for s in [-1.0, 1.0] {
                let xi = s * x;
                u.tail.push(TailSample {
                    xi,
                    weight: *w,
                    mass: f(xi).norm_sqr(),
                });
            }
        }
        Ok(u)
    }

    /// Random smooth element with `û` supported in `[-W, W]`, `W ∈ [0.5, 4]`.
    pub fn random_band_limited(delta: f64, rng: &mut impl Rng) -> Result<StripHardyElement> {
        let width = rng.gen_range(0.5..4.0);
        let coeffs: Vec<Complex64> = (0..6)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let breaks: Vec<f64> = (0..=8).map(|i| -width + width * i as f64 / 4.0).collect();
        Self::from_fn(delta, &breaks, 16, |x| {
            let y = x / width;
            let (p, _) = crate::numerics::legendre::orthonormal(5, y);
            let env = (1.0 - y * y).powi(2);
            coeffs.iter().zip(&p).map(|(c, p)| c * p).sum::<Complex64>() * env
        })
    }

    pub fn with_tail_tol(mut self, tol: f64) -> StripHardyElement {
        self.tail_tol = tol;
        self
    }

    /// `∫ w(ξ)|û|² dξ` over the grid.
    pub fn weighted(&self, w: impl Fn(f64) -> f64) -> f64 {
        self.xi
            .iter()
            .zip(&self.weights)
            .zip(&self.values)
            .map(|((x, q), v)| q * w(*x) * v.norm_sqr())
            .sum()
    }

    /// `∫_{beyond grid} e^{2δ|ξ|}|û|²`, relative to the same integral on the grid.
    pub fn decay_certificate(&self) -> f64 {
        let d = self.delta;
        let out: f64 = self
            .tail
            .iter()
            .map(|s| s.weight * (2.0 * d * s.xi.abs()).exp() * s.mass)
            .sum();
        if out == 0.0 {
            return 0.0;
        }
        out / self
            .weighted(|x| (2.0 * d * x.abs()).exp())
            .max(f64::MIN_POSITIVE)
    }

    fn require_decay(&self) -> Result<()> {
        let c = self.decay_certificate();
        if c > self.tail_tol {
            return invalid(format!(
                "insufficient decay: relative tail mass {c:e} above {:e}",
                self.tail_tol
            ));
        }
        Ok(())
    }

    /// `‖û‖²`, which equals `‖u‖²` on the real axis.
    pub fn axis_norm_sq(&self) -> f64 {
        self.weighted(|_| 1.0)
    }

    /// `‖Tu‖_{L²(∂S_δ)}`: both boundary lines, `∫ 2cosh(2δξ)|û|²`.
    pub fn trace_norm(&self) -> Result<f64> {
        self.require_decay()?;
        let d = self.delta;
        Ok(self.weighted(|x| 2.0 * (2.0 * d * x).cosh()).sqrt())
    }

    /// `‖u‖_{L²(S_δ)}`: `∫ sinh(2δξ)/ξ |û|²`.
    pub fn interior_norm(&self) -> Result<f64> {
        self.require_decay()?;
        let d = self.delta;
        Ok(self.weighted(|x| interior_kernel(d, x)).sqrt())
    }

    /// `M(u) = sup_{|y|<δ} ‖u(·+iy)‖`. The map `y ↦ ∫e^{-2yξ}|û|²` is convex,
    /// so the supremum is the larger of the two boundary values.
    pub fn line_sup_norm(&self) -> Result<f64> {
        self.require_decay()?;
        let d = self.delta;
        let up = self.weighted(|x| (-2.0 * d * x).exp());
        let down = self.weighted(|x| (2.0 * d * x).exp());
        Ok(up.max(down).sqrt())
    }

    /// `∫ e^{2δ|ξ|}|û|²`.
    pub fn abs_exp_moment(&self) -> Result<f64> {
        self.require_decay()?;
        let d = self.delta;
        Ok(self.weighted(|x| (2.0 * d * x.abs()).exp()))
    }

    /// `u^{(k)}(z₀) = i^k (2π)^{-1/2} ∫ ξ^k e^{iξz₀} û(ξ) dξ` for `|Im z₀| < δ`.
    pub fn evaluate(&self, z0: Complex64, k: u32) -> Result<Complex64> {
        if !(z0.im.abs() < self.delta) || !z0.re.is_finite() {
            return invalid(format!(
                "point {z0} outside the open strip |Im z| < {}",
                self.delta
            ));
        }
        let i = Complex64::i();
        let mut acc = Complex64::new(0.0, 0.0);
        for ((x, w), v) in self.xi.iter().zip(&self.weights).zip(&self.values) {
            acc += (i * x * z0).exp() * v * (w * x.powi(k as i32));
        }
        Ok(acc * i.powu(k) / (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Right-hand side of the Cauchy estimate for `|u^{(k)}(z₀)|`.
    pub fn cauchy_bound(&self, z0: Complex64, k: u32) -> Result<f64> {
        let dist = self.delta - z0.im.abs();
        if !(dist > 0.0) {
            return invalid("point outside the open strip");
        }
        Ok(cauchy_constant(k) * dist.powf(-(2.0 * k as f64 + 1.0) / 2.0) * self.trace_norm()?)
    }

    /// `û(ξ)` by barycentric interpolation on the panel containing `ξ`.
    pub fn sample(&self, x: f64) -> Complex64 {
        let (first, last) = (self.breaks[0], *self.breaks.last().unwrap());
        if x < first || x > last {
            return Complex64::new(0.0, 0.0);
        }
        let p = match self.breaks.partition_point(|b| *b <= x) {
            0 => 0,
            k => (k - 1).min(self.breaks.len() - 2),
        };
        let n = self.order;
        let nodes = &self.xi[p * n..(p + 1) * n];
        let vals = &self.values[p * n..(p + 1) * n];
        let (a, b) = (self.breaks[p], self.breaks[p + 1]);
        let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
        for j in 0..n {
            // barycentric weights of Gauss-Legendre nodes: (-1)^j sqrt((1-y²) w_j)
            let y = (2.0 * nodes[j] - a - b) / (b - a);
            let wj = self.weights[p * n + j] * 2.0 / (b - a);
            let bw = if j % 2 == 0 { 1.0 } else { -1.0 } * ((1.0 - y * y) * wj).sqrt();
            let d = x - nodes[j];
            if d == 0.0 {
                return vals[j];
            }
            num += vals[j] * (bw / d);
            den += bw / d;
        }
        num / den
    }

    /// `u_ε(x) = u((1-ε)x)`, i.e. `û_ε(ξ) = (1-ε)^{-1} û(ξ/(1-ε))`.
    pub fn dilate(&self, eps: f64) -> Result<StripHardyElement> {
        if !(0.0..1.0).contains(&eps) {
            return invalid(format!("dilation parameter {eps} outside [0, 1)"));
        }
        let c = 1.0 - eps;
        let mut out = self.clone();
        out.breaks.iter_mut().for_each(|b| *b *= c);
        out.xi.iter_mut().for_each(|x| *x *= c);
        out.weights.iter_mut().for_each(|w| *w *= c);
        out.values.iter_mut().for_each(|v| *v /= c);
        for s in &mut out.tail {
            s.xi *= c;
            s.weight *= c;
            s.mass /= c * c;
        }
        Ok(out)
    }

    /// `a·u + b·v` resampled on the union of both panel sets.
    pub fn combine(
        a: Complex64,
        u: &StripHardyElement,
        b: Complex64,
        v: &StripHardyElement,
    ) -> Result<StripHardyElement> {
        if u.delta != v.delta {
            return invalid("elements live on strips of different width");
        }
        let mut breaks: Vec<f64> = u.breaks.iter().chain(&v.breaks).copied().collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * x.abs().max(1.0));
        let order = u.order.max(v.order);
        let mut out = Self::from_fn(u.delta, &breaks, order, |x| {
            a * u.sample(x) + b * v.sample(x)
        })?;
        // |a û + b v̂|² ≤ 2|a|²|û|² + 2|b|²|v̂|², so the tail stays an upper bound
        for (c, e) in [(a, u), (b, v)] {
            out.tail.extend(e.tail.iter().map(|s| TailSample {
                mass: 2.0 * c.norm_sqr() * s.mass,
                ..*s
            }));
        }
        out.tail_tol = u.tail_tol.max(v.tail_tol);
        Ok(out)
    }
}
