use proptest::prelude::*;
use strip_dirac::curve::{BaseCurve, CurvatureProfile, TubularMap};
use strip_dirac::numerics::quad::Rule;

fn bump(amplitude: f64, width: f64, support: f64) -> CurvatureProfile {
    CurvatureProfile::GaussianBump {
        amplitude,
        width,
        support,
    }
}

#[test]
fn zero_curvature_is_the_axis() {
    let c = BaseCurve::build(CurvatureProfile::Zero, 1e-12).unwrap();
    for s in [-7.0, -1.0, 0.0, 0.3, 12.0] {
        let p = c.point(s);
        assert!((p.gamma[0] - s).abs() < 1e-15 && p.gamma[1].abs() < 1e-15);
        assert!(p.normal[0].abs() < 1e-15 && (p.normal[1] - 1.0).abs() < 1e-15);
    }
    let map = TubularMap::new(c, 1.0).unwrap();
    let x = map.theta_map(2.5, -0.4);
    assert!((x[0] - 2.5).abs() < 1e-15 && (x[1] + 0.4).abs() < 1e-15);
    assert_eq!(map.metric(2.5, -0.4), 1.0);
}

#[test]
fn total_turning_matches_independent_quadrature() {
    for p in [
        bump(0.8, 0.8, 3.0),
        bump(-0.5, 1.2, 4.0),
        CurvatureProfile::PiecewisePolynomial {
            amplitude: 0.7,
            support: 2.0,
        },
    ] {
        let c = BaseCurve::build(p, 1e-12).unwrap();
        let l0 = p.support();
        // 400 panels of 20-point Gauss, unrelated to the tabulation
        let oracle = Rule::composite(20, 400, -l0, l0).integrate(|s| p.kappa(s));
        assert!((c.total_turning() - oracle).abs() < 1e-10, "{p:?}");
    }
}

#[test]
fn second_derivative_recovers_curvature_times_normal() {
    let c = BaseCurve::build(bump(0.8, 0.8, 3.0), 1e-12).unwrap();
    for s in [-2.0, -0.7, 0.0, 0.4, 1.9] {
        let mut errs = Vec::new();
        for e in [1e-2, 5e-3] {
            let (a, b, m) = (c.point(s - e).gamma, c.point(s + e).gamma, c.point(s).gamma);
            let dd = [
                (a[0] - 2.0 * m[0] + b[0]) / (e * e),
                (a[1] - 2.0 * m[1] + b[1]) / (e * e),
            ];
            let p = c.point(s);
            errs.push(
                ((dd[0] - p.kappa * p.normal[0]).powi(2) + (dd[1] - p.kappa * p.normal[1]).powi(2))
                    .sqrt(),
            );
        }
        // centered differences: error falls by about four on halving
        assert!(
            errs[1] < 1e-4 && errs[1] < 0.4 * errs[0],
            "s = {s}: {errs:?}"
        );
    }
}

#[test]
fn tails_are_straight_lines() {
    let c = BaseCurve::build(bump(0.8, 0.8, 3.0), 1e-12).unwrap();
    let (a, b) = (c.point(3.0), c.point(9.0));
    for s in [3.5, 5.0, 20.0] {
        let p = c.point(s);
        let u = [p.gamma[0] - a.gamma[0], p.gamma[1] - a.gamma[1]];
        let cross = u[0] * (b.gamma[1] - a.gamma[1]) - u[1] * (b.gamma[0] - a.gamma[0]);
        assert!(cross.abs() < 1e-12);
        assert_eq!(p.theta, a.theta);
    }
}

#[test]
fn rejects_vanishing_metric() {
    // κ(0) = 2 with δ = 0.6
    let c = BaseCurve::build(bump(2.0, 0.5, 2.0), 1e-12).unwrap();
    assert!(TubularMap::new(c, 0.6).is_err());
}

#[test]
fn minimal_metric_matches_grid_minimum() {
    let delta = 0.3;
    let p = bump(0.8, 0.8, 3.0);
    let map = TubularMap::new(BaseCurve::build(p, 1e-12).unwrap(), delta).unwrap();
    let mut grid_min = f64::INFINITY;
    for i in 0..=2000 {
        let s = -3.0 + 6.0 * i as f64 / 2000.0;
        for t in [-delta, delta] {
            grid_min = grid_min.min(map.metric(s, t));
        }
    }
    assert!((map.min_metric - grid_min).abs() < 1e-9);
}

#[test]
fn self_intersection_is_reported() {
    // a sharp hairpin: the curve turns by more than π within a short arc
    let p = bump(3.0, 1.0, 4.0);
    let c = BaseCurve::build(p, 1e-10).unwrap();
    assert!(c.total_turning() > std::f64::consts::PI);
    assert!(TubularMap::new(c, 0.3).is_err());
}

#[test]
fn inverse_round_trip() {
    let map = TubularMap::new(BaseCurve::build(bump(0.8, 0.8, 3.0), 1e-12).unwrap(), 0.5).unwrap();
    for (s, t) in [(0.0, 0.1), (-1.3, 0.45), (2.2, -0.3), (7.0, 0.0)] {
        let (s2, t2) = map.inverse(map.theta_map(s, t)).unwrap();
        assert!((s - s2).abs() < 1e-10 && (t - t2).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn frame_is_orthonormal_and_direct(amp in -0.9f64..0.9, width in 0.4f64..1.5, s in -6.0f64..6.0) {
        let c = BaseCurve::build(bump(amp, width, 3.0 * width), 1e-11).unwrap();
        let p = c.point(s);
        let (t, n) = (p.tangent, p.normal);
        prop_assert!((t[0].hypot(t[1]) - 1.0).abs() < 1e-12);
        prop_assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-12);
        prop_assert!((t[0] * n[0] + t[1] * n[1]).abs() < 1e-12);
        prop_assert!((t[0] * n[1] - t[1] * n[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_speed(amp in -0.9f64..0.9, s in -3.0f64..3.0) {
        let c = BaseCurve::build(bump(amp, 0.8, 3.0), 1e-12).unwrap();
        let e = 1e-5;
        let (a, b) = (c.point(s - e).gamma, c.point(s + e).gamma);
        let speed = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt() / (2.0 * e);
        prop_assert!((speed - 1.0).abs() < 1e-8);
    }

    #[test]
    fn curvature_vanishes_off_support(amp in -2.0f64..2.0, l0 in 0.5f64..5.0, x in 1.0f64..10.0) {
        let p = bump(amp, 0.3 * l0, l0);
        prop_assert_eq!(p.kappa(l0 * x), 0.0);
        prop_assert_eq!(p.kappa(-l0 * x), 0.0);
    }
}
