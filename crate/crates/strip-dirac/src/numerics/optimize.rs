//! Scalar root bracketing and minimization.

use crate::error::{solver, Result};

/// Bisection on a predicate that is `true` below the root and `false` above.
/// Bisects geometrically when the bracket spans orders of magnitude.
pub fn bisect_sign(
    mut below: impl FnMut(f64) -> Result<bool>,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    for _ in 0..max_iter {
        if hi - lo <= rel_tol * hi.abs() {
            return Ok((lo, hi));
        }
        let mid = if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= 10.0 * rel_tol * hi.abs() {
        Ok((lo, hi))
    } else {
        solver(format!("bisection stalled in [{lo:e}, {hi:e}]"))
    }
}

/// Brent's method for a local minimum of `f` on `[a, b]`.
pub fn brent_min(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    const CGOLD: f64 = 0.381_966_011_250_105;
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e): (f64, f64) = (0.0, 0.0);
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-14;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx));
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    solver("Brent minimization did not converge")
}

/// Minimum over `[a, b]`: coarse scan to isolate the basin, then Brent.
pub fn scan_then_brent(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    samples: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    let n = samples.max(3);
    let xs: Vec<f64> = (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect();
    let mut fs = Vec::with_capacity(n);
    for &x in &xs {
        fs.push(f(x)?);
    }
    let k = fs
        .iter()
        .enumerate()
        .min_by(|p, q| p.1.total_cmp(q.1))
        .map(|p| p.0)
        .unwrap_or(0);
    let lo = xs[k.saturating_sub(1)];
    let hi = xs[(k + 1).min(n - 1)];
    let (x, fx) = brent_min(&mut f, lo, hi, tol, 200)?;
    if fx <= fs[k] {
        Ok((x, fx))
    } else {
        Ok((xs[k], fs[k]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt2() {
        let (lo, hi) = bisect_sign(|x| Ok(x * x < 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((lo - 2f64.sqrt()).abs() < 1e-13 && hi >= lo);
    }

    #[test]
    fn bisection_geometric_for_tiny_roots() {
        let r = 3.7e-12;
        let (lo, _) = bisect_sign(|x| Ok(x < r), 1e-20, 1.0, 1e-12, 400).unwrap();
        assert!(((lo - r) / r).abs() < 1e-11);
    }

    #[test]
    fn brent_quadratic() {
        let (x, fx) =
            brent_min(|x| Ok((x - 0.3) * (x - 0.3) + 1.0), -2.0, 2.0, 1e-10, 100).unwrap();
        assert!((x - 0.3).abs() < 1e-7 && (fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scan_picks_global_basin() {
        let f = |x: f64| Ok((3.0 * x).cos() + 0.1 * x);
        let (x, _) = scan_then_brent(f, -4.0, 4.0, 41, 1e-10).unwrap();
        assert!((x - (-std::f64::consts::PI - 0.011_11)).abs() < 1e-3);
    }
}
