//! Chebyshev-Gauss-Lobatto collocation.

use nalgebra::DMatrix;

/// Lobatto nodes `cos(jπ/n)` on `[-1, 1]`, in decreasing order.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect()
}

/// First-derivative collocation matrix on the Lobatto nodes (diagonal by row sums).
pub fn diff_matrix(n: usize) -> DMatrix<f64> {
    let x = nodes(n);
    let c = |j: usize| -> f64 {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            2.0 * s
        } else {
            s
        }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d
}

/// Barycentric interpolation of nodal values at `x`.
pub fn interpolate(values: &[f64], x: f64) -> f64 {
    let n = values.len() - 1;
    let xs = nodes(n);
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (&xj, &fj)) in xs.iter().zip(values).enumerate() {
        let diff = x - xj;
        if diff == 0.0 {
            return fj;
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            w *= 0.5;
        }
        num += w / diff * fj;
        den += w / diff;
    }
    num / den
}

/// Matrix mapping nodal values to values at the points `xs` (barycentric rows).
pub fn interp_matrix(n: usize, xs: &[f64]) -> DMatrix<f64> {
    let nodes = nodes(n);
    let mut m = DMatrix::zeros(xs.len(), n + 1);
    for (r, &x) in xs.iter().enumerate() {
        if let Some(k) = nodes.iter().position(|&xj| xj == x) {
            m[(r, k)] = 1.0;
            continue;
        }
        let mut den = 0.0;
        for (j, &xj) in nodes.iter().enumerate() {
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            let v = w / (x - xj);
            m[(r, j)] = v;
            den += v;
        }
        for j in 0..=n {
            m[(r, j)] /= den;
        }
    }
    m
}
