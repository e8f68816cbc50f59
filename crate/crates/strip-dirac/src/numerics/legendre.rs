//! Orthonormal Legendre polynomials.

/// Values and derivatives of the `L²(-1,1)`-orthonormal Legendre polynomials
/// `p_0..=p_n` at `x`.
pub fn orthonormal(n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for k in 1..n {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        dp[k + 1] = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
    }
    for k in 0..=n {
        let s = ((2 * k + 1) as f64 / 2.0).sqrt();
        p[k] *= s;
        dp[k] *= s;
    }
    (p, dp)
}
