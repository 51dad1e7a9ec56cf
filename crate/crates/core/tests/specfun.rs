use std::f64::consts::PI;

use epscrm::specfun::{
    bessel_i, exp1, gamma, hyp2f1_unit_c, ln_bessel_i_scaled, quad, quad_semi_infinite, upper_incomplete_gamma_neg,
    QuadControl, SeriesControl,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn tight() -> QuadControl {
    QuadControl {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        max_subdivisions: 5000,
    }
}

/// Label, integrand, lower limit, exact value.
type Case = (String, Box<dyn Fn(f64) -> f64>, f64, f64);

#[test]
fn semi_infinite_quadrature_reproduces_known_integrals() {
    let mut cases: Vec<Case> = Vec::new();
    for k in 0..6 {
        let fact: f64 = (1..=k).map(f64::from).product();
        cases.push((
            format!("x^{k} e^-x"),
            Box::new(move |x: f64| x.powi(k) * (-x).exp()),
            0.0,
            fact,
        ));
    }
    for a in [1.5, 2.5, 3.7, 4.2] {
        cases.push((
            format!("x^({a}-1) e^-x"),
            Box::new(move |x: f64| x.powf(a - 1.0) * (-x).exp()),
            0.0,
            gamma(a),
        ));
    }
    for (x0, e1) in [
        (0.1, 1.822_923_958_419_390_7),
        (0.5, 0.559_773_594_776_160_8),
        (1.0, 0.219_383_934_395_520_28),
        (2.0, 0.048_900_510_708_061_12),
        (5.0, 0.001_148_295_591_275_326),
    ] {
        cases.push((format!("E1({x0})"), Box::new(|t: f64| (-t).exp() / t), x0, e1));
    }
    for a in [0.3, 7.0] {
        cases.push((format!("e^-{a}x"), Box::new(move |x: f64| (-a * x).exp()), 0.0, 1.0 / a));
    }
    cases.push((
        "1/(1+x^2)".into(),
        Box::new(|x: f64| 1.0 / (1.0 + x * x)),
        0.0,
        PI / 2.0,
    ));
    cases.push(("e^-x^2".into(), Box::new(|x: f64| (-x * x).exp()), 0.0, PI.sqrt() / 2.0));
    cases.push(("x^-2".into(), Box::new(|x: f64| x.powi(-2)), 1.0, 1.0));
    assert_eq!(cases.len(), 20);
    for (name, f, a, exact) in &cases {
        let got = quad_semi_infinite(f, *a, tight()).unwrap().value;
        assert!(rel(got, *exact) < 1e-9, "{name}: {got} vs {exact}");
    }
}

#[test]
fn exp1_agrees_with_its_integral() {
    for x in [0.01, 0.3, 1.0, 3.0, 10.0, 40.0] {
        let q = quad_semi_infinite(|t: f64| (-t).exp() / t, x, tight()).unwrap().value;
        assert!(rel(exp1(x), q) < 1e-10, "x = {x}");
    }
}

#[test]
fn negative_order_upper_gamma_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a: f64 = rng.random_range(-1.0..0.0);
        let x: f64 = (rng.random_range(-3.0f64..3.5)).exp();
        let oracle = quad_semi_infinite(|t: f64| t.powf(a - 1.0) * (-t).exp(), x, tight())
            .unwrap()
            .value;
        let got = upper_incomplete_gamma_neg(a, x).unwrap();
        let r = rel(got, oracle);
        assert!(r <= 1e-8, "Γ({a}, {x}) = {got}, quadrature {oracle}");
        worst = worst.max(r);
    }
    assert!(worst.is_finite());
}

#[test]
fn integer_order_bessel_matches_integral_representation() {
    // I_n(s) = (1/π) ∫₀^π e^{s cos θ} cos(nθ) dθ
    for n in 0..4 {
        for s in [0.1, 1.0, 5.0, 20.0, 60.0] {
            let ctrl = QuadControl {
                abs_tol: 1e-12,
                rel_tol: 1e-12,
                ..tight()
            };
            let q = quad(
                |t: f64| (s * (t.cos() - 1.0)).exp() * (n as f64 * t).cos(),
                0.0,
                PI,
                ctrl,
            )
            .unwrap()
            .value
                / PI;
            let got = ln_bessel_i_scaled(n as f64, s).unwrap().exp();
            assert!(rel(got, q) < 1e-9, "I_{n}({s}): {got} vs {q}");
        }
    }
}

proptest! {
    #[test]
    fn bessel_zero_is_at_least_one_and_increasing(s1 in 0.0f64..650.0, ds in 1e-6f64..50.0) {
        let s2 = (s1 + ds).min(699.0);
        let a = bessel_i(0.0, s1).unwrap();
        let b = bessel_i(0.0, s2).unwrap();
        prop_assert!(a >= 1.0);
        if s2 > s1 {
            prop_assert!(b > a, "I0({s1}) = {a}, I0({s2}) = {b}");
        }
    }

    #[test]
    fn hypergeometric_is_increasing_in_z(a in 0.05f64..6.0, b in 0.05f64..6.0, z1 in 0.0f64..0.99, dz in 0.0f64..0.009) {
        let z2 = z1 + dz;
        let ctrl = SeriesControl::default();
        let f1 = hyp2f1_unit_c(a, b, z1, ctrl).unwrap();
        let f2 = hyp2f1_unit_c(a, b, z2, ctrl).unwrap();
        prop_assert!(f1 >= 1.0);
        prop_assert!(f1 <= f2 * (1.0 + 1e-14), "F({z1}) = {f1} > F({z2}) = {f2}");
    }
}
