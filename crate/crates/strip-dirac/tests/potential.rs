use proptest::prelude::*;
use std::sync::OnceLock;
use strip_dirac::curve::{BaseCurve, CurvatureProfile, TubularMap};
use strip_dirac::potential::{default_truncation, phi0, PotentialField};

fn map(profile: CurvatureProfile, delta: f64) -> TubularMap {
    TubularMap::new(BaseCurve::build(profile, 1e-12).unwrap(), delta).unwrap()
}

fn bump() -> CurvatureProfile {
    CurvatureProfile::GaussianBump {
        amplitude: 0.8,
        width: 0.8,
        support: 3.0,
    }
}

fn solve(profile: CurvatureProfile, delta: f64, h: f64) -> PotentialField {
    let m = map(profile, delta);
    PotentialField::solve_with_spacing(&m, default_truncation(&m), h, 1e-8).unwrap()
}

fn bump_field() -> &'static PotentialField {
    static F: OnceLock<PotentialField> = OnceLock::new();
    F.get_or_init(|| solve(bump(), 0.3, 0.01))
}

#[test]
fn phi0_values() {
    assert_eq!(phi0(1.0, 1.0), 0.0);
    assert_eq!(phi0(0.0, 1.0), -0.5);
    assert_eq!(phi0(0.5, 1.0), -0.375);
}

#[test]
fn straight_strip_recovers_phi0() {
    let f = solve(CurvatureProfile::Zero, 1.0, 0.05);
    for s in [-4.0, 0.0, 1.3] {
        for t in [-0.9, -0.2, 0.0, 0.55] {
            assert!((f.value(s, t) - phi0(t, 1.0)).abs() < 1e-10);
        }
    }
    let m = f.locate_minimum().unwrap();
    assert!(!m.flags.nondegenerate || !m.flags.unique_min);
    assert!(!m.flags.strictly_below_straight);
    assert!(m.require().is_err());
    let b = f.boundary_normal_derivative();
    assert!((b.min - 1.0).abs() < 1e-10);
    let a = f.vector_potential([0.7, 0.3]).unwrap();
    assert!((a[0] + 0.3).abs() < 1e-9 && a[1].abs() < 1e-9);
}

#[test]
fn bump_minimum_is_below_straight_and_centred() {
    let f = bump_field();
    let m = f.locate_minimum().unwrap();
    assert!(m.phi_min < -0.5 * 0.3 * 0.3);
    assert!(m.flags.all(), "{:?}", m.flags);
    assert!(m.s_min.abs() < f.grid.ds);
    assert!(m.a > 0.0 && m.b > 0.0 && m.det_hessian() > 0.0);
    let a = f.vector_potential(m.x_min).unwrap();
    assert!(a[0].hypot(a[1]) < 1e-8);
}

#[test]
fn hessian_agrees_with_refined_grid() {
    let coarse = bump_field().locate_minimum().unwrap();
    let fine = solve(bump(), 0.3, 0.005).locate_minimum().unwrap();
    assert!((coarse.a / fine.a - 1.0).abs() < 1e-2);
    assert!((coarse.b / fine.b - 1.0).abs() < 1e-2);
}

#[test]
fn minimum_converges_at_second_order() {
    let hs = [0.06, 0.03, 0.015, 0.0075];
    let v: Vec<f64> = hs
        .iter()
        .map(|h| solve(bump(), 0.3, *h).locate_minimum().unwrap().phi_min)
        .collect();
    let (e1, e2) = ((v[0] - v[1]).abs(), (v[1] - v[2]).abs());
    let order = (e1 / e2).log2();
    assert!(order > 1.8, "order {order}, values {v:?}");
}

#[test]
fn boundary_derivative_positive_and_straight_far_away() {
    let f = bump_field();
    let b = f.boundary_normal_derivative();
    assert!(b.min > 0.0);
    let g = &f.grid;
    let i = g.ns - 3;
    let nt = g.nt;
    let up = (3.0 * g.at(i, nt - 1) - 4.0 * g.at(i, nt - 2) + g.at(i, nt - 3)) / (2.0 * g.dt);
    assert!((up - 0.3).abs() < 10.0 * g.dt * g.dt);
}

#[test]
fn tail_approaches_phi0_monotonically() {
    let f = bump_field();
    let l0 = 3.0;
    let dev = |s: f64| {
        (0..=40)
            .map(|j| -0.3 + 0.6 * j as f64 / 40.0)
            .map(|t| (f.value(s, t) - phi0(t, 0.3)).abs())
            .fold(0.0, f64::max)
    };
    let mut prev = f64::INFINITY;
    let mut s = l0;
    while s < f.l - 0.5 {
        let d = dev(s);
        assert!(d <= prev * (1.0 + 1e-9) + 1e-13, "s = {s}");
        prev = d;
        s += 0.25;
    }
}

#[test]
fn even_curvature_gives_even_potential_and_max_principle() {
    let f = bump_field();
    for s in [0.2, 0.9, 2.1] {
        for t in [-0.25, 0.0, 0.2] {
            assert!((f.value(s, t) - f.value(-s, t)).abs() < 1e-10);
            assert!(f.value(s, t) <= 0.0);
        }
    }
    assert!(f.grid.values.iter().all(|v| *v <= 1e-14));
}

#[test]
fn truncation_does_not_move_the_minimum() {
    let f = solve(bump(), 0.3, 0.02);
    assert!(f.truncation_sensitivity().unwrap() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn curl_of_vector_potential_is_one(s in -2.5f64..2.5, t in -0.18f64..0.18) {
        let f = bump_field();
        let x = f.map.theta_map(s, t);
        let e = 1e-3;
        let a = |dx: f64, dy: f64| f.vector_potential([x[0] + dx, x[1] + dy]).unwrap();
        let curl = (a(e, 0.0)[1] - a(-e, 0.0)[1]) / (2.0 * e) - (a(0.0, e)[0] - a(0.0, -e)[0]) / (2.0 * e);
        prop_assert!((curl - 1.0).abs() < 1e-3, "curl {}", curl);
    }
}
