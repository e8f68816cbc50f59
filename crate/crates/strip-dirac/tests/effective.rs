use nalgebra::{DVector, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};
use strip_dirac::conformal::{default_truncation, Biholomorphism};
use strip_dirac::curve::{BaseCurve, CurvatureProfile, TubularMap};
use strip_dirac::effective::{
    d_b_closed, d_h_closed, gap_report, intertwining_residual, lambda_eff, unit_coeffs,
    BargmannBasis, EffectiveOptions, EffectiveSetup, HardyBasis,
};
use strip_dirac::numerics::quad::Rule;
use strip_dirac::potential::{self, PotentialField};
use strip_dirac::Error;

fn tubular(p: CurvatureProfile, delta: f64) -> TubularMap {
    TubularMap::new(BaseCurve::build(p, 1e-12).unwrap(), delta).unwrap()
}

fn bih(map: &TubularMap, spacing: f64) -> Arc<Biholomorphism> {
    Arc::new(Biholomorphism::solve_with_spacing(map, default_truncation(map), spacing).unwrap())
}

fn straight_basis() -> &'static HardyBasis {
    static B: OnceLock<HardyBasis> = OnceLock::new();
    B.get_or_init(|| {
        let b = bih(&tubular(CurvatureProfile::Zero, 1.0), 0.05);
        let disk = b.disk_map(0.0, 0.3).unwrap();
        HardyBasis::build(b, disk, 16, 4).unwrap()
    })
}

fn bump_map() -> TubularMap {
    tubular(
        CurvatureProfile::GaussianBump {
            amplitude: 0.8,
            width: 0.8,
            support: 3.0,
        },
        1.0,
    )
}

fn bump_setup() -> &'static (PotentialField, EffectiveSetup) {
    static S: OnceLock<(PotentialField, EffectiveSetup)> = OnceLock::new();
    S.get_or_init(|| {
        let map = bump_map();
        let field = PotentialField::solve_with_spacing(
            &map,
            potential::default_truncation(&map),
            0.05,
            1e-8,
        )
        .unwrap();
        let min = field.locate_minimum().unwrap();
        let b = bih(&map, 0.05);
        let disk = b.disk_map(min.s_min, min.t_min).unwrap();
        let basis = HardyBasis::build(b, disk, 16, 3).unwrap();
        let setup = EffectiveSetup::new(&field, basis, 0.3, 0.5).unwrap();
        (field, setup)
    })
}

fn hess(a: f64, b: f64, angle: f64) -> Matrix2<f64> {
    let (c, s) = (angle.cos(), angle.sin());
    let r = Matrix2::new(c, -s, s, c);
    r * Matrix2::new(0.5 * a, 0.0, 0.0, 0.5 * b) * r.transpose()
}

#[test]
fn isotropic_bargmann_polynomials_are_monomials() {
    let bb = BargmannBasis::orthogonalize(&hess(1.0, 1.0, 0.0), 6).unwrap();
    for m in 0..=6 {
        for n in 0..m {
            assert!(bb.coeffs[m][n].norm() < 1e-10);
        }
        assert_eq!(bb.b(m, m), Complex64::new(bb.b(m, m).re, 0.0));
    }
}

#[test]
fn bargmann_closed_forms() {
    for (a, b, angle) in [(1.0, 1.0, 0.0), (1.0, 3.0, 0.0), (1.0, 3.0, 0.7)] {
        let bb = BargmannBasis::orthogonalize(&hess(a, b, angle), 6).unwrap();
        for m in 0..=6 {
            let cf = bb.closed_form_coeffs(m);
            for n in 0..=m {
                assert!(
                    (bb.coeffs[m][n] - cf[n]).norm() < 1e-8 * cf[n].norm().max(1.0),
                    "({a},{b}) m={m} n={n}"
                );
            }
            assert!((bb.coeffs[m][m] - 1.0).norm() < 1e-14);
            let rel = bb.norms_sq[m] / bb.closed_form_norm_sq(m) - 1.0;
            assert!(rel.abs() < 1e-8, "({a},{b}) m={m}: {rel}");
        }
    }
}

#[test]
fn d_b_routes_agree() {
    // (d_B^1)² = ∫ e^{-|y|²/2} dy for a = b = 1, by plain tensor quadrature
    let r = Rule::composite(20, 40, -12.0, 12.0);
    let g1: f64 = r.integrate(|x| (-0.5 * x * x).exp());
    assert!((d_b_closed(1, &hess(1.0, 1.0, 0.0)).unwrap().powi(2) / (g1 * g1) - 1.0).abs() < 1e-12);
    assert!((d_b_closed(1, &hess(1.0, 1.0, 0.0)).unwrap().powi(2) - 2.0 * PI).abs() < 1e-12);
    for (a, b) in [(1.0, 3.0), (0.0644, 1.9354), (2.0, 2.5)] {
        let h = hess(a, b, 0.3);
        let det = 0.25 * a * b;
        assert!((d_b_closed(1, &h).unwrap().powi(2) / (PI / det.sqrt()) - 1.0).abs() < 1e-12);
        let bb = BargmannBasis::orthogonalize(&h, 6).unwrap();
        for k in 1..=5 {
            let (x, y) = (d_b_closed(k, &h).unwrap(), bb.d_b(k).unwrap());
            assert!((x / y - 1.0).abs() < 1e-8, "({a},{b}) k={k}");
        }
    }
}

#[test]
fn d_h_closed_values_and_scaling() {
    let mut f = 1.0;
    for k in 1..6 {
        assert!((d_h_closed(k, 1.0).unwrap() - (2.0 * PI).sqrt() / f).abs() < 1e-14);
        f *= k as f64;
    }
    assert!((d_h_closed(1, 4.0 / PI).unwrap() - 8f64.sqrt()).abs() < 1e-14);
    // a strip twice as wide has a disk map twice as large
    let g1 = bih(&tubular(CurvatureProfile::Zero, 1.0), 0.1)
        .disk_map(0.0, 0.2)
        .unwrap()
        .g_prime_abs;
    let g2 = bih(&tubular(CurvatureProfile::Zero, 2.0), 0.2)
        .disk_map(0.0, 0.4)
        .unwrap()
        .g_prime_abs;
    for k in 1..4 {
        let r = d_h_closed(k, g2).unwrap() / d_h_closed(k, g1).unwrap();
        assert!((r / 2f64.powf(k as f64 - 0.5) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn d_h_minimized_matches_closed_form_on_the_straight_strip() {
    let b = straight_basis();
    for k in 1..=3 {
        let m = b.minimize(k).unwrap();
        let c = d_h_closed(k, b.disk.g_prime_abs).unwrap();
        assert!((m.d_h / c - 1.0).abs() < 1e-4, "k = {k}: {} vs {c}", m.d_h);
        assert!(m.constraint_residual < 1e-8);
    }
}

#[test]
fn minimized_norm_never_grows_with_the_basis() {
    let b = straight_basis();
    for k in 1..=3 {
        let mut prev = f64::INFINITY;
        for m in k + 8..=b.order {
            let d = b.truncate(m).unwrap().minimize(k).unwrap().d_h;
            assert!(d <= prev * (1.0 + 1e-12));
            prev = d;
        }
    }
    assert!(b.truncate(10).unwrap().minimize(3).is_err());
}

fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

#[test]
fn taylor_projection_is_an_orthogonal_projection() {
    let b = straight_basis();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 1..=3 {
        for _ in 0..5 {
            let (u, v) = (
                random_coeffs(&mut rng, b.order),
                random_coeffs(&mut rng, b.order),
            );
            let pu = b.taylor_project(&u, k).unwrap();
            let ppu = b.taylor_project(&pu, k).unwrap();
            assert!((&ppu - &pu).norm() <= 1e-10 * pu.norm());
            let pv = b.taylor_project(&v, k).unwrap();
            let (l, r) = (b.inner(&pu, &v), b.inner(&u, &pv));
            assert!((l - r).norm() <= 1e-10 * l.norm().max(1.0));
            let d = b.derivatives(&(&u - &pu));
            for j in 0..k {
                assert!(
                    d[j].norm() <= 1e-8 * b.derivatives(&u)[j].norm().max(1.0),
                    "k={k} j={j}"
                );
            }
        }
    }
}

#[test]
fn straight_strip_is_refused() {
    let map = tubular(CurvatureProfile::Zero, 1.0);
    let field =
        PotentialField::solve_with_spacing(&map, potential::default_truncation(&map), 0.1, 1e-8)
            .unwrap();
    let r = lambda_eff(&field, bih(&map, 0.1), &[0.5], EffectiveOptions::default());
    assert!(matches!(r, Err(Error::Assumption(_))), "{r:?}");
}

#[test]
fn options_are_validated() {
    let map = bump_map();
    let field = &bump_setup().0;
    let b = bih(&map, 0.1);
    for (opts, hs) in [
        (EffectiveOptions { k_max: 2, order: 9 }, vec![0.5]),
        (
            EffectiveOptions {
                k_max: 0,
                order: 12,
            },
            vec![0.5],
        ),
        (EffectiveOptions::default(), vec![]),
        (EffectiveOptions::default(), vec![0.5, -0.1]),
    ] {
        assert!(matches!(
            lambda_eff(field, b.clone(), &hs, opts),
            Err(Error::InvalidInput(_))
        ));
    }
}

#[test]
fn pencil_levels_are_ordered_and_monotone_in_the_basis() {
    let (_, setup) = bump_setup();
    for h in [0.5, 0.3] {
        let mut prev: Option<Vec<f64>> = None;
        for m in [11, 12, 14, 16] {
            let lv = setup.levels(h, m, 3).unwrap();
            assert!(lv.log_lambda.iter().all(|x| x.is_finite()));
            assert!(
                lv.log_lambda.windows(2).all(|w| w[0] <= w[1] + 1e-12),
                "{:?}",
                lv.log_lambda
            );
            assert!(lv.min_nu > 0.0);
            if let Some(p) = &prev {
                for (a, b) in lv.log_lambda.iter().zip(p) {
                    assert!(*a <= b + 1e-9, "m = {m}: {a} > {b}");
                }
            }
            prev = Some(lv.log_lambda);
        }
    }
}

#[test]
fn laplace_normalization_improves_as_h_decreases() {
    let (_, setup) = bump_setup();
    let dev: Vec<f64> = [0.5, 0.4, 0.3]
        .iter()
        .map(|h| (setup.levels(*h, 12, 1).unwrap().laplace_ratio - 1.0).abs())
        .collect();
    assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
}

#[test]
fn gap_report_needs_matching_thresholds() {
    let map = bump_map();
    let field = &bump_setup().0;
    let rep = lambda_eff(field, bih(&map, 0.05), &[0.5], EffectiveOptions::default()).unwrap();
    assert!(gap_report(&rep, &[(0.4, -3.0)]).is_err());
    let g = gap_report(&rep, &[(0.5, rep.entries[0].log_lambda[1] + 1.0)]).unwrap();
    assert_eq!(g[0].count, 2);
    assert!(g[0].log_margins[0] > g[0].log_margins[1]);
}

#[test]
fn intertwining_on_the_straight_strip() {
    // κ = 0: φ = (t² - δ²)/2, A = (-t, 0), and e^{-φ/h} v is handled by exact
    // formulas, so the only error is the difference quotient
    let b = straight_basis();
    let map = tubular(CurvatureProfile::Zero, 1.0);
    let field =
        PotentialField::solve_with_spacing(&map, potential::default_truncation(&map), 0.05, 1e-8)
            .unwrap();
    let samples = [(0.0, 0.0), (0.5, 0.3), (-0.5, -0.3)];
    for n in [0, 2] {
        let v = unit_coeffs(b.order, n);
        let r: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|e| intertwining_residual(&field, b, &v, 0.5, *e, &samples).unwrap())
            .collect();
        for w in r.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8, "{r:?}");
        }
        let scaled = intertwining_residual(
            &field,
            b,
            &(&v * Complex64::new(0.0, 3.0)),
            0.5,
            0.05,
            &samples,
        )
        .unwrap();
        assert!((scaled / r[1] - 1.0).abs() < 1e-10);
    }
    assert!(intertwining_residual(
        &field,
        b,
        &unit_coeffs(b.order, 0),
        0.5,
        0.05,
        &[(0.0, 0.95)]
    )
    .is_err());
}
