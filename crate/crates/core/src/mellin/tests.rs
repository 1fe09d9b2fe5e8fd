use super::*;
use crate::contour::{BromwichLine, ComplexFunction};
use crate::quad::{tanh_sinh, QuadOptions};
use crate::specfun::{gamma, gamma_real, mittag_leffler, MLOrder};
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn r(re: f64) -> Complex64 {
    c(re, 0.0)
}

fn narrow_at_one(sigma: f64) -> DensityOnR {
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    DensityOnR::zero()
        .with_plus(
            move |x| norm * (-0.5 * ((x - 1.0) / sigma).powi(2)).exp(),
            Strip::ALL,
            f64::INFINITY,
        )
        .with_support(Side::Plus, 1.0 - 12.0 * sigma, 1.0 + 12.0 * sigma)
        .unwrap()
}

#[test]
fn forward_examples() {
    let e = DensityOnR::one_sided_exponential();
    let v = mellin_forward(&e, r(3.0)).unwrap();
    assert!((v.plus - 2.0).norm() < 1e-12 && v.minus == r(0.0));
    let v = mellin_forward(&e, r(0.5)).unwrap();
    assert!((v.plus - PI.sqrt()).norm() < 1e-12);
    let v = mellin_forward(&DensityOnR::two_sided_exponential(), r(1.0)).unwrap();
    assert!((v.plus - 0.5).norm() < 1e-12 && (v.minus - 0.5).norm() < 1e-12);
}

#[test]
fn forward_rejects_points_outside_the_strip() {
    let e = DensityOnR::one_sided_exponential();
    assert!(matches!(
        mellin_forward(&e, r(-0.5)),
        Err(MellinError::StripViolation { .. })
    ));
    assert!(mellin_forward(&DensityOnR::cauchy(), r(2.5)).is_err());
}

#[test]
fn forward_matches_closed_forms_off_the_axis() {
    let s = c(0.8, 2.5);
    for d in [
        DensityOnR::gaussian(1.7).unwrap(),
        DensityOnR::cauchy(),
        DensityOnR::gamma_density(2.5).unwrap(),
        DensityOnR::uniform_unit(),
    ] {
        let num = mellin_forward(&d, s).unwrap();
        let exact = d.known_mellin().unwrap().eval(s);
        assert!(num.max_abs_diff(&exact) < 1e-10, "{d:?}: {num:?} {exact:?}");
    }
}

#[test]
fn normalization_at_one() {
    for d in [
        DensityOnR::two_sided_exponential(),
        DensityOnR::gaussian(0.3).unwrap(),
        DensityOnR::shifted_gaussian(0.7, 1.3).unwrap(),
        DensityOnR::cauchy(),
        DensityOnR::uniform_unit(),
    ] {
        let v = mellin_forward(&d, r(1.0)).unwrap();
        assert!((v.plus.re + v.minus.re - 1.0).abs() < 1e-8, "{d:?}");
    }
}

#[test]
fn convolution_of_uniforms() {
    let u = DensityOnR::uniform_unit();
    let v = mellin_convolve(&u, &u, 0.5).unwrap();
    let oracle = tanh_sinh(|y: f64, _| 1.0 / y, 0.5, 1.0, &QuadOptions::default()).value;
    assert!((v - oracle).abs() < 1e-12);
    assert!((v - 2f64.ln()).abs() < 1e-12);
    assert_eq!(mellin_convolve(&u, &u, 1.5).unwrap(), 0.0);
    assert_eq!(mellin_convolve(&u, &u, -0.5).unwrap(), 0.0);
}

#[test]
fn convolution_with_point_mass_at_one() {
    let f = DensityOnR::two_sided_exponential();
    let g = narrow_at_one(1e-3);
    for &z in &[-2.0, -0.4, 0.7, 1.5] {
        let v = mellin_convolve(&f, &g, z).unwrap();
        assert!((v - f.eval(z)).abs() < 1e-5, "z={z} {v} {}", f.eval(z));
    }
}

#[test]
fn convolution_of_symmetric_laws_is_symmetric() {
    let f = DensityOnR::two_sided_exponential();
    for &z in &[0.1, 0.8, 3.0] {
        let a = mellin_convolve(&f, &f, z).unwrap();
        let b = mellin_convolve(&f, &f, -z).unwrap();
        assert!((a - b).abs() < 1e-8);
    }
    assert!(matches!(
        mellin_convolve(&f, &f, 0.0),
        Err(MellinError::NonIntegrable(_))
    ));
}

#[test]
fn hyperbolic_examples() {
    let p = SidedPair::new(c(0.3, 1.0), c(-2.0, 0.5));
    assert_eq!(SidedPair::real(1.0, 0.0) * p, p);
    assert_eq!(
        SidedPair::real(0.0, 1.0) * SidedPair::real(0.0, 1.0),
        SidedPair::real(1.0, 0.0)
    );

    let f = DensityOnR::two_sided_exponential();
    let m = f.known_mellin().unwrap();
    let v = hyperbolic_product(m, m, r(1.0)).unwrap();
    let prod = mellin_forward(&convolved_density(&f, &f), r(1.0)).unwrap();
    assert!(v.max_abs_diff(&SidedPair::real(0.5, 0.5)) < 1e-15);
    assert!(prod.max_abs_diff(&v) < 1e-7, "{prod:?}");
    assert!(hyperbolic_product(m, m, r(-1.0)).is_err());
}

#[test]
fn convolution_theorem_on_two_sided_densities() {
    let f = DensityOnR::shifted_gaussian(0.5, 1.0).unwrap();
    let g = DensityOnR::two_sided_exponential();
    let h = convolved_density(&f, &g);
    for s in [c(0.7, 0.3), c(1.5, -1.0)] {
        let lhs = mellin_forward(&h, s).unwrap();
        let rhs = mellin_forward(&f, s).unwrap() * mellin_forward(&g, s).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-6, "s={s}: {lhs:?} {rhs:?}");
    }
}

#[test]
fn scaling_and_power_laws() {
    let f = DensityOnR::shifted_gaussian(0.4, 0.9).unwrap();
    let s = c(0.9, 0.6);
    let base = mellin_forward(&f, s).unwrap();
    for &lambda in &[0.5, 2.0, 10.0] {
        let g = f.transform_argument(lambda, 1.0).unwrap();
        let v = mellin_forward(&g, s).unwrap();
        let k = (-s * f64::ln(lambda)).exp();
        let want = SidedPair::new(base.plus * k, base.minus * k);
        assert!(v.max_abs_diff(&want) < 1e-7, "lambda={lambda}");
    }
    for &mu in &[0.5, 2.0] {
        let g = f.transform_argument(1.0, mu).unwrap();
        let v = mellin_forward(&g, s).unwrap();
        let b = mellin_forward(&f, s / mu).unwrap();
        let want = SidedPair::new(b.plus / mu, b.minus / mu);
        assert!(v.max_abs_diff(&want) < 1e-7, "mu={mu}");
    }
}

#[test]
fn inversion_examples() {
    let m = MellinPair::plus_only(|s| gamma(s).unwrap(), Strip::new(0.0, f64::INFINITY).unwrap());
    let line = BromwichLine::new(1.0);
    let v = mellin_invert(&m, Side::Plus, 1.0, 1.0, &line).unwrap();
    assert!((v.value - (-1.0f64).exp()).abs() < 1e-12);
    let v = mellin_invert(&m, Side::Plus, 3.0, 1.0, &line).unwrap();
    assert!((v.value - (-3.0f64).exp()).abs() < 1e-12);
    assert_eq!(mellin_invert(&m, Side::Minus, 3.0, 1.0, &line).unwrap().value, 0.0);
    assert!(mellin_invert(&m, Side::Plus, 3.0, -1.0, &line).is_err());

    let u = DensityOnR::uniform_unit();
    let line = BromwichLine::new(0.5).with_regularizer(0.02);
    let v = mellin_invert(u.known_mellin().unwrap(), Side::Plus, 0.5, 0.5, &line).unwrap();
    assert!((v.value - 1.0).abs() < 1e-6, "{v:?}");
}

#[test]
fn inversion_of_numerical_transform() {
    let f = DensityOnR::gamma_density(2.5).unwrap();
    let g = f.clone();
    let m = MellinPair::plus_only(move |s| mellin_forward(&g, s).unwrap().plus, f.strip());
    let line = BromwichLine::new(1.0).with_truncation(40.0, 2000);
    for &x in &[0.2, 0.9, 2.5, 6.0] {
        let v = mellin_invert(&m, Side::Plus, x, 1.0, &line).unwrap();
        assert!((v.value - f.eval(x)).abs() < 1e-6, "x={x}");
    }
}

#[test]
fn plancherel_examples() {
    let e = DensityOnR::one_sided_exponential();
    let (a, b) = plancherel_check(&e, &e, 0.5, &BromwichLine::new(0.5)).unwrap();
    assert!((a - 0.5).abs() < 1e-10 && (b - 0.5).abs() < 1e-12);

    let u = DensityOnR::uniform_unit();
    let (a, b) = plancherel_check(&u, &u, 0.5, &BromwichLine::double_exponential(0.5)).unwrap();
    assert!((a - 1.0).abs() < 1e-6 && (b - 1.0).abs() < 1e-12, "{a} {b}");

    let z = DensityOnR::zero();
    assert_eq!(
        plancherel_check(&z, &e, 0.5, &BromwichLine::new(0.5)).unwrap(),
        (0.0, 0.0)
    );
}

#[test]
fn plancherel_between_different_densities() {
    let f = DensityOnR::gamma_density(1.5).unwrap();
    let g = DensityOnR::gaussian(0.8).unwrap();
    let (a, b) = plancherel_check(&f, &g, 0.75, &BromwichLine::new(0.75)).unwrap();
    assert!((a - b).abs() < 1e-6, "{a} {b}");
}

fn one_sided_laplace() -> BilateralLaplace {
    BilateralLaplace::new(|u| 1.0 / (1.0 + u), Strip::new(-1.0, f64::INFINITY).unwrap())
}

fn two_sided_laplace() -> BilateralLaplace {
    BilateralLaplace::new(|u| 1.0 / (1.0 - u * u), Strip::new(-1.0, 1.0).unwrap())
}

#[test]
fn mellin_from_laplace_examples() {
    let line = BromwichLine::double_exponential(-0.5);
    let v = mellin_from_laplace(&one_sided_laplace(), r(0.5), -0.5, &line).unwrap();
    let oracle = mellin_forward(&DensityOnR::one_sided_exponential(), r(0.5)).unwrap();
    assert!(v.max_abs_diff(&oracle) < 1e-9, "{v:?}");

    let s = c(0.8, 0.4);
    let v = mellin_from_laplace(&two_sided_laplace(), s, -0.5, &line).unwrap();
    assert!((v.plus - v.minus).norm() < 1e-10);
    assert!((v.plus - 0.5 * gamma(s).unwrap()).norm() < 1e-9);

    let nu = MLOrder::new(0.5).unwrap();
    let phi = BilateralLaplace::new(move |u| mittag_leffler(nu, u).unwrap(), Strip::ALL);
    let v = mellin_from_laplace(&phi, r(2.0), -0.5, &line).unwrap();
    let want = 1.0 / gamma_real(1.5).unwrap();
    assert!((v.plus.re - want).abs() < 1e-8, "{}", v.plus);
    assert!((want - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-15);
}

#[test]
fn mellin_from_laplace_rejects_bad_abscissa() {
    let line = BromwichLine::double_exponential(0.5);
    assert!(matches!(
        mellin_from_laplace(&two_sided_laplace(), r(0.5), 0.5, &line),
        Err(MellinError::BranchViolation(_))
    ));
    assert!(mellin_from_laplace(&two_sided_laplace(), r(0.5), -1.5, &line).is_err());
    assert!(mellin_from_laplace(&two_sided_laplace(), r(-0.5), -0.5, &line).is_err());
}

#[test]
fn laplace_from_mellin_examples() {
    let line = BromwichLine::new(0.5);
    let m = DensityOnR::one_sided_exponential().known_mellin().unwrap().clone();
    let v = laplace_from_mellin(&m, r(1.0), 0.5, &line).unwrap();
    assert!((v.value - 0.5).norm() < 1e-12);

    let u = DensityOnR::uniform_unit().known_mellin().unwrap().clone();
    let v = laplace_from_mellin(&u, r(1e-6), 0.5, &line).unwrap();
    assert!((v.value - 1.0).norm() < 1e-6, "{v:?}");
    let v = laplace_from_mellin(&u, r(-2.0), 0.5, &line).unwrap();
    assert!((v.value.re - (2f64.exp() - 1.0) / 2.0).abs() < 1e-12);

    let t = DensityOnR::two_sided_exponential().known_mellin().unwrap().clone();
    for uu in [r(0.3), r(-0.6), c(0.2, 1.5)] {
        let v = laplace_from_mellin(&t, uu, 0.5, &line).unwrap();
        let want = 1.0 / (1.0 - uu * uu);
        assert!((v.value - want).norm() < 1e-10, "u={uu}: {v:?}");
    }
    assert!(laplace_from_mellin(&t, r(0.0), 0.5, &line).is_err());
    assert!(laplace_from_mellin(&t, r(0.3), 1.5, &line).is_err());
}

#[test]
fn laplace_mellin_round_trip() {
    let phi = two_sided_laplace();
    let inner = BromwichLine::double_exponential(-0.5);
    let p1 = phi.clone();
    let p2 = phi.clone();
    let m = MellinPair::new(
        move |s| {
            mellin_from_laplace(&p1, s, -0.5, &inner)
                .map(|v| v.plus)
                .unwrap_or(r(f64::NAN))
        },
        move |s| {
            mellin_from_laplace(&p2, s, -0.5, &inner)
                .map(|v| v.minus)
                .unwrap_or(r(f64::NAN))
        },
        Strip::new(0.0, f64::INFINITY).unwrap(),
    );
    let line = BromwichLine::new(0.5).with_truncation(30.0, 600);
    let v = laplace_from_mellin(&m, r(0.3), 0.5, &line).unwrap();
    assert!((v.value - phi.eval(r(0.3))).norm() < 1e-6, "{v:?}");
}

#[test]
fn fourier_examples() {
    let sym = ComplexFunction::new(|y| 1.0 / (1.0 + y * y), "two-sided exponential");
    let v = mellin_from_fourier(&sym, 0.5, f64::INFINITY).unwrap();
    assert!((v.plus - v.minus).norm() < 1e-12);
    assert!((v.plus.re - 0.5 * PI.sqrt()).abs() < 1e-10);

    let gauss = ComplexFunction::new(|y| (-y * y).exp(), "normal, variance 2");
    let v = mellin_from_fourier(&gauss, 0.5, f64::INFINITY).unwrap();
    let want = 0.5 * PI.sqrt() / gamma_real(0.75).unwrap();
    // duplication formula: Gamma(1/4) Gamma(3/4) = pi sqrt(2)
    let dup = 0.5 * PI.sqrt() * gamma_real(0.25).unwrap() / (PI * 2f64.sqrt());
    assert!((want - dup).abs() < 1e-14);
    assert!(
        (v.plus.re - want).abs() < 1e-10 && (want - 0.7229).abs() < 1e-3,
        "{v:?}"
    );

    let v = mellin_from_fourier(&ComplexFunction::zero(), 0.3, f64::INFINITY).unwrap();
    assert_eq!(v, SidedPair::default());
    assert!(matches!(
        mellin_from_fourier(&sym, 1.2, 10.0),
        Err(MellinError::Range { .. })
    ));
}

#[test]
fn fourier_of_point_mass_needs_damping() {
    // f* = e^{iy} for a unit mass at 1: M f+ = 1, M f- = 0
    let f = ComplexFunction::new(|y| Complex64::from_polar(1.0, y.re), "unit mass");
    let v = mellin_from_fourier_damped(&f, 0.4, &crate::contour::DEFAULT_DAMPINGS).unwrap();
    assert!(v.max_abs_diff(&SidedPair::real(1.0, 0.0)) < 1e-6, "{v:?}");
}

#[test]
fn fourier_from_mellin_examples() {
    let t = DensityOnR::two_sided_exponential().known_mellin().unwrap().clone();
    let line = BromwichLine::new(0.5);
    let v = fourier_from_mellin(&t, 1.0, 0.5, &line).unwrap();
    assert!((v.value - 0.5).norm() < 1e-10, "{v:?}");

    let e = DensityOnR::one_sided_exponential().known_mellin().unwrap().clone();
    for &y in &[0.4, -2.0] {
        let v = fourier_from_mellin(&e, y, 0.5, &line).unwrap();
        let want = 1.0 / c(1.0, -y);
        assert!((v.value - want).norm() < 1e-10, "y={y}");
    }
    let v = fourier_from_mellin(&MellinPair::zero(), 1.0, 0.5, &line).unwrap();
    assert_eq!(v.value, r(0.0));
}

#[test]
fn fourier_round_trip() {
    let g = DensityOnR::gaussian(1.0).unwrap().known_mellin().unwrap().clone();
    let line = BromwichLine::new(0.5).with_truncation(40.0, 1000);
    let m = MellinPair::new(
        {
            let g = g.clone();
            move |s: Complex64| {
                let fs = ComplexFunction::new(
                    {
                        let g = g.clone();
                        move |y: Complex64| fourier_from_mellin(&g, y.re, 0.5, &line).unwrap().value
                    },
                    "",
                );
                mellin_from_fourier(&fs, s.re, 12.0).unwrap().plus
            }
        },
        |_| r(0.0),
        Strip::new(0.0, 1.0).unwrap(),
    );
    let v = m.eval(r(0.4)).plus;
    let want = g.eval(r(0.4)).plus;
    assert!((v - want).norm() < 1e-6, "{v} {want}");
}

#[test]
fn closed_forms_are_analytic_on_their_strips() {
    for d in [
        DensityOnR::gaussian(1.0).unwrap(),
        DensityOnR::cauchy(),
        DensityOnR::two_sided_exponential(),
    ] {
        let m = d.known_mellin().unwrap().clone();
        for s in [c(0.5, 0.0), c(0.9, 3.0), c(1.5, -2.0)] {
            let p = m.plus.clone().unwrap();
            assert!(cauchy_riemann_residual(move |z| p(z), s, 1e-4) < 1e-6);
        }
    }
    let phi = two_sided_laplace();
    assert!(cauchy_riemann_residual(|u| phi.eval(u), c(-0.5, 2.0), 1e-4) < 1e-6);
}

fn pair() -> impl Strategy<Value = SidedPair> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b, c2, d)| SidedPair::new(c(a, b), c(c2, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hyperbolic_product_is_commutative(a in pair(), b in pair()) {
        prop_assert_eq!(a * b, b * a);
    }

    #[test]
    fn hyperbolic_product_is_associative(a in pair(), b in pair(), d in pair()) {
        let l = (a * b) * d;
        let r2 = a * (b * d);
        prop_assert!(l.max_abs_diff(&r2) < 1e-12 * (1.0 + l.plus.norm() + l.minus.norm()));
    }

    #[test]
    fn scaling_law_holds(lambda in 0.3..8.0f64, re in 0.3..2.5f64, im in -2.0..2.0f64) {
        let f = DensityOnR::two_sided_exponential();
        let s = c(re, im);
        let v = mellin_forward(&f.transform_argument(lambda, 1.0).unwrap(), s).unwrap();
        let b = mellin_forward(&f, s).unwrap();
        let k = (-s * lambda.ln()).exp();
        prop_assert!(v.max_abs_diff(&SidedPair::new(b.plus * k, b.minus * k)) < 1e-7);
    }

    #[test]
    fn plancherel_sides_agree(k in 1.2..4.0f64, gam in 0.55..1.5f64) {
        let f = DensityOnR::gamma_density(k).unwrap();
        let e = DensityOnR::one_sided_exponential();
        let (a, b) = plancherel_check(&f, &e, gam, &BromwichLine::new(gam)).unwrap();
        prop_assert!((a - b).abs() < 1e-6);
    }
}
