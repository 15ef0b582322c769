use dualcurv::quadrature::QuadratureSpec;
use dualcurv::unimodal::{
    brunn_minkowski_check, lemma_check, lemma_integral, lemma_integral_rejection, mc_volume, UnimodalFn,
};
use dualcurv::{Ellipsoid, Error, GeneralPolytopeV, SymmetricBody};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn square() -> GeneralPolytopeV {
    GeneralPolytopeV::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap()
}

fn spec(seed: u64) -> QuadratureSpec {
    QuadratureSpec::new(400_000, seed)
}

#[test]
fn reciprocal_norm_over_the_square() {
    // ∫_K |x|^{-1} dx = ∫_{S¹} ρ_K = 8 ∫_0^{π/4} sec θ dθ
    let exact = 8.0 * (1.0 + 2f64.sqrt()).ln();
    let est = lemma_integral(&square(), &UnimodalFn::power(-1.0), &spec(1)).unwrap();
    assert!(est.within(exact, 4.0), "{est:?} vs {exact}");
}

#[test]
fn reciprocal_norm_over_a_regular_polygon() {
    let m = 64.0;
    let a = (PI / m).cos();
    let exact = 2.0 * m * a * (1.0 / a + (PI / m).tan()).ln();
    assert!((exact - 2.0 * PI).abs() < 0.01);
    let poly = GeneralPolytopeV::regular_polygon(64, 1.0).unwrap();
    let est = lemma_integral(&poly, &UnimodalFn::power(-1.0), &spec(2)).unwrap();
    assert!(est.within(exact, 4.0), "{est:?} vs {exact}");
}

#[test]
fn shifted_square_loses_mass() {
    // [0, 2] × [-1, 1] in polar form: ∫ sec over [0, atan ½] and csc above it
    let exact = 2.0 * (2.0 * 0.5f64.asinh() + 2f64.asinh());
    let shifted = GeneralPolytopeV::from_box(&[0.0, -1.0], &[2.0, 1.0]).unwrap();
    let f = UnimodalFn::power(-1.0);
    let est = lemma_integral(&shifted, &f, &spec(3)).unwrap();
    assert!(est.within(exact, 4.0), "{est:?} vs {exact}");
    let report = lemma_check(&shifted, 0.5, &f, &spec(4)).unwrap();
    assert!(report.pass);
    assert!(report.diff > 5.0 * report.diff_std_err);
    assert!(report.rhs.within(exact, 4.0));
}

#[test]
fn triangle_passes_at_half() {
    let tri = GeneralPolytopeV::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let sym = tri.minkowski_lambda(0.5).unwrap();
    assert!((sym.volume() - 0.75).abs() < 1e-12);
    let report = lemma_check(&tri, 0.5, &UnimodalFn::power(-0.5), &spec(5)).unwrap();
    assert!(report.pass, "{report:?}");
    assert!(report.diff > 0.0);
}

#[test]
fn symmetric_bodies_are_fixed_by_the_construction() {
    let hex = GeneralPolytopeV::regular_polygon(6, 1.3).unwrap();
    let sym = hex.minkowski_lambda(0.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100_000 {
        let x = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        assert_eq!(hex.contains(&x), sym.contains(&x), "{x:?}");
    }
}

#[test]
fn polar_and_rejection_estimators_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let body = GeneralPolytopeV::random(3, 10, -1.0, 1.5, &mut rng);
    let f = UnimodalFn::power(-0.5);
    let a = lemma_integral(&body, &f, &spec(8)).unwrap();
    let b = lemma_integral_rejection(&body, &f, &spec(9)).unwrap();
    assert!(a.sigmas_from(&b) < 4.0, "{a:?} vs {b:?}");
}

#[test]
fn unit_ball_gauge_matches_the_euclidean_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let body = GeneralPolytopeV::random(3, 12, -1.0, 1.5, &mut rng);
    let plain = UnimodalFn::power(-1.2);
    let gauged = UnimodalFn::GaugePower {
        gauge: SymmetricBody::unit_ball(3),
        p: -1.2,
    };
    let a = lemma_integral(&body, &plain, &spec(11)).unwrap();
    let b = lemma_integral(&body, &gauged, &spec(11)).unwrap();
    assert!((a.value - b.value).abs() <= 1e-12 * a.value);
}

#[test]
fn gauge_power_passes_with_an_ellipsoid() {
    let tri = GeneralPolytopeV::new(vec![vec![-0.2, -0.1], vec![1.0, 0.0], vec![0.3, 1.2]]).unwrap();
    let f = UnimodalFn::GaugePower {
        gauge: Ellipsoid::axis_aligned(&[1.0, 0.4]).unwrap().into(),
        p: -1.0,
    };
    let report = lemma_check(&tri, 0.4, &f, &spec(12)).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn largest_superlevel_covers_both_bodies() {
    let tri = GeneralPolytopeV::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let sym = tri.minkowski_lambda(0.5).unwrap();
    let report = lemma_check(&tri, 0.5, &UnimodalFn::power(-1.0), &spec(13)).unwrap();
    let last = report.superlevel.last().unwrap();
    assert!((last.rhs_volume - tri.volume()).abs() < 0.01);
    assert!((last.lhs_volume - sym.volume()).abs() < 0.01);
    assert!(report.superlevel.windows(2).all(|w| w[0].rhs_volume <= w[1].rhs_volume));
}

#[test]
fn non_integrable_exponents_are_rejected() {
    for p in [-3.0, 0.0, 0.7] {
        assert!(matches!(
            lemma_check(&square(), 0.5, &UnimodalFn::power(p), &spec(0)),
            Err(Error::NonIntegrable { .. }) | Err(Error::InvalidParameter(_))
        ));
    }
    assert!(lemma_check(&square(), 1.0, &UnimodalFn::power(-1.0), &spec(0)).is_err());
}

#[test]
fn mc_volume_of_a_box() {
    let b = GeneralPolytopeV::from_box(&[-1.0, 0.0, 2.0], &[1.0, 0.5, 3.0]).unwrap();
    let est = mc_volume(&b, &spec(14)).unwrap();
    assert!((est.value - 1.0).abs() < 1e-12);
}

#[test]
fn brunn_minkowski_equality_for_homothets() {
    let k1 = GeneralPolytopeV::from_box(&[1.0, 2.0], &[4.0, 5.0]).unwrap();
    let report = brunn_minkowski_check(&square(), &k1, 0.3, &spec(15)).unwrap();
    assert!(report.homothetic);
    assert!(report.equality);
    assert!(report.pass);
    assert!((report.exact_lhs - report.exact_rhs).abs() < 1e-12);

    let same = brunn_minkowski_check(&square(), &square(), 0.5, &spec(16)).unwrap();
    assert!(same.homothetic && same.equality);
}

#[test]
fn brunn_minkowski_strict_for_rotated_square() {
    let s = 2f64.sqrt();
    let diamond = GeneralPolytopeV::new(vec![vec![s, 0.0], vec![0.0, s], vec![-s, 0.0], vec![0.0, -s]]).unwrap();
    let report = brunn_minkowski_check(&square(), &diamond, 0.5, &spec(17)).unwrap();
    assert!(!report.homothetic);
    assert!(report.lhs - report.rhs > 5.0 * report.std_err, "{report:?}");
    assert!(report.exact_lhs > report.exact_rhs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn symmetrization_never_decreases_the_integral(seed in any::<u64>(), lambda in 0.05f64..0.95, p in -1.9f64..-0.1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = GeneralPolytopeV::random(2, rng.random_range(3..10), -1.0, 1.5, &mut rng);
        let report = lemma_check(&body, lambda, &UnimodalFn::power(p), &QuadratureSpec::new(50_000, seed)).unwrap();
        prop_assert!(report.pass, "{report:?}");
    }
}
