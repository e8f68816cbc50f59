//! Local Lagrange interpolation on uniform grids with derivative access.

/// Order of the local stencil (points per direction).
pub const STENCIL: usize = 6;

/// Weights of the Lagrange basis and its first two derivatives at local
/// coordinate `u` (in units of the spacing, stencil nodes at 0..p).
pub fn lagrange_weights(u: f64, p: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut w = vec![0.0; p];
    let mut dw = vec![0.0; p];
    let mut d2w = vec![0.0; p];
    for k in 0..p {
        // coefficients of L_k in powers of (x - u)
        let mut c = vec![0.0; p];
        c[0] = 1.0;
        let mut deg = 0;
        for m in 0..p {
            if m == k {
                continue;
            }
            let scale = 1.0 / (k as f64 - m as f64);
            let shift = u - m as f64;
            // multiply by ((x - u) + shift) * scale
            for d in (0..=deg + 1).rev() {
                let lower = if d > 0 { c[d - 1] } else { 0.0 };
                c[d] = (lower + c[d] * shift) * scale;
            }
            deg += 1;
        }
        w[k] = c[0];
        dw[k] = c[1];
        d2w[k] = 2.0 * c[2];
    }
    (w, dw, d2w)
}

/// Stencil start index and local coordinate for position `x` on a grid
/// `x0 + i*dx`, `i < n`.
pub fn locate(x: f64, x0: f64, dx: f64, n: usize, p: usize) -> (usize, f64) {
    let r = (x - x0) / dx;
    let half = (p as f64 - 1.0) / 2.0;
    let start = (r - half).round().clamp(0.0, (n - p) as f64) as usize;
    (start, r - start as f64)
}

/// Value and partial derivatives up to order two.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub f: f64,
    pub fs: f64,
    pub ft: f64,
    pub fss: f64,
    pub fst: f64,
    pub ftt: f64,
}

/// Scalar field sampled on a uniform tensor grid, row-major in `s`.
#[derive(Debug, Clone)]
pub struct Grid2 {
    pub s0: f64,
    pub ds: f64,
    pub ns: usize,
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub values: Vec<f64>,
}

impl Grid2 {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nt + j]
    }

    pub fn s(&self, i: usize) -> f64 {
        self.s0 + i as f64 * self.ds
    }

    pub fn t(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    /// Interpolated value and derivatives at `(s, t)`.
    pub fn jet(&self, s: f64, t: f64) -> Jet2 {
        let p = STENCIL.min(self.ns).min(self.nt);
        let (is, us) = locate(s, self.s0, self.ds, self.ns, p);
        let (jt, ut) = locate(t, self.t0, self.dt, self.nt, p);
        let (ws, dws, d2ws) = lagrange_weights(us, p);
        let (wt, dwt, d2wt) = lagrange_weights(ut, p);
        let mut out = Jet2::default();
        for a in 0..p {
            let row = (is + a) * self.nt + jt;
            let (mut v, mut vt, mut vtt) = (0.0, 0.0, 0.0);
            for b in 0..p {
                let x = self.values[row + b];
                v += wt[b] * x;
                vt += dwt[b] * x;
                vtt += d2wt[b] * x;
            }
            out.f += ws[a] * v;
            out.fs += dws[a] * v;
            out.fss += d2ws[a] * v;
            out.ft += ws[a] * vt;
            out.fst += dws[a] * vt;
            out.ftt += ws[a] * vtt;
        }
        let (ids, idt) = (1.0 / self.ds, 1.0 / self.dt);
        out.fs *= ids;
        out.ft *= idt;
        out.fss *= ids * ids;
        out.fst *= ids * idt;
        out.ftt *= idt * idt;
        out
    }

    pub fn value(&self, s: f64, t: f64) -> f64 {
        self.jet(s, t).f
    }
}

/// One-dimensional uniform table with the same local interpolation.
#[derive(Debug, Clone)]
pub struct Table1 {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl Table1 {
    /// Value, first and second derivative at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.values.len();
        let p = STENCIL.min(n);
        let (i0, u) = locate(x, self.x0, self.dx, n, p);
        let (w, dw, d2w) = lagrange_weights(u, p);
        let mut out = (0.0, 0.0, 0.0);
        for k in 0..p {
            let v = self.values[i0 + k];
            out.0 += w[k] * v;
            out.1 += dw[k] * v;
            out.2 += d2w[k] * v;
        }
        (out.0, out.1 / self.dx, out.2 / (self.dx * self.dx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_quintics_with_derivatives() {
        let f = |s: f64, t: f64| s.powi(5) - 2.0 * s * s * t * t + t.powi(3);
        let (ns, nt) = (21, 11);
        let (ds, dt) = (0.1, 0.2);
        let mut values = Vec::new();
        for i in 0..ns {
            for j in 0..nt {
                values.push(f(-1.0 + i as f64 * ds, -1.0 + j as f64 * dt));
            }
        }
        let g = Grid2 {
            s0: -1.0,
            ds,
            ns,
            t0: -1.0,
            dt,
            nt,
            values,
        };
        let (s, t) = (0.123, -0.456);
        let j = g.jet(s, t);
        assert!((j.f - f(s, t)).abs() < 1e-12);
        assert!((j.fs - (5.0 * s.powi(4) - 4.0 * s * t * t)).abs() < 1e-10);
        assert!((j.ft - (-4.0 * s * s * t + 3.0 * t * t)).abs() < 1e-10);
        assert!((j.fss - (20.0 * s.powi(3) - 4.0 * t * t)).abs() < 1e-8);
        assert!((j.fst - (-8.0 * s * t)).abs() < 1e-8);
        assert!((j.ftt - (-4.0 * s * s + 6.0 * t)).abs() < 1e-8);
    }

    #[test]
    fn table_edges() {
        let t = Table1 {
            x0: 0.0,
            dx: 0.5,
            values: (0..9).map(|i| (i as f64 * 0.5).powi(3)).collect(),
        };
        let (v, d, dd) = t.eval(3.9);
        assert!((v - 3.9f64.powi(3)).abs() < 1e-11);
        assert!((d - 3.0 * 3.9 * 3.9).abs() < 1e-10);
        assert!((dd - 6.0 * 3.9).abs() < 1e-9);
    }
}
