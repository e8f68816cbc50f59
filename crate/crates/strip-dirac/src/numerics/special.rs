//! Special functions evaluated in the log domain.

use super::quad::Rule;

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

/// `ln erfc(x)`, finite for every real `x`.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 25.0 {
        return libm::erfc(x).ln();
    }
    // asymptotic series, far past its optimal truncation point here
    let z = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..12 {
        term *= -((2 * k - 1) as f64) * z;
        sum += term;
    }
    -x * x - x.ln() - LN_SQRT_PI + sum.ln()
}

/// `ln(erf(b) - erf(a))` for `a < b`, without underflow or cancellation.
pub fn ln_erf_diff(a: f64, b: f64) -> f64 {
    assert!(a < b, "ln_erf_diff needs a < b");
    if b <= 0.0 {
        return ln_erf_diff(-b, -a);
    }
    if b - a <= 0.5 {
        // direct quadrature of 2/sqrt(pi) e^{-x^2}, scaled by its peak
        let peak = if a <= 0.0 { 0.0 } else { a * a };
        let r = Rule::gauss_legendre(24, a, b);
        let s = r.integrate(|x| (peak - x * x).exp());
        return std::f64::consts::LN_2 - LN_SQRT_PI - peak + s.ln();
    }
    if a >= 0.0 {
        let la = ln_erfc(a);
        let lb = ln_erfc(b);
        return la + (-(lb - la).exp()).ln_1p();
    }
    (libm::erf(b) - libm::erf(a)).ln()
}

/// `ln(e^x + e^y)`.
pub fn ln_add_exp(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((x - m).exp() + (y - m).exp()).ln()
}

/// `ln(∫_{lo}^{hi} e^{-(c+t)^2/h} dt)`.
pub fn ln_gauss_mass(c: f64, h: f64, lo: f64, hi: f64) -> f64 {
    let sh = h.sqrt();
    0.5 * (std::f64::consts::PI * h).ln() - std::f64::consts::LN_2
        + ln_erf_diff((c + lo) / sh, (c + hi) / sh)
}
