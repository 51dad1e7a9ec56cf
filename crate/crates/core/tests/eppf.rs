use epscrm::crm::{Intensity, TruncationSpec};
use epscrm::eppf::{
    bessel_dirichlet_bounds, eppf_bessel, eppf_dirichlet, eppf_eps, eppf_limit, integer_partitions,
    moments_from_tie_prob, set_partition_count, Composition,
};
use proptest::prelude::*;

fn comp(c: &[u32]) -> Composition {
    Composition::new(c.to_vec()).unwrap()
}

fn families() -> Vec<(Intensity, f64)> {
    vec![
        (Intensity::gamma(1.0).unwrap(), 1.0),
        (Intensity::gen_gamma(0.25, 1.0).unwrap(), 1.0),
        (Intensity::bessel(1.05).unwrap(), 0.11),
        (Intensity::bessel(3.0).unwrap(), 2.0),
    ]
}

#[test]
fn partitions_of_up_to_six_are_normalized() {
    for (rho, kappa) in families() {
        let trunc = TruncationSpec::new(1e-6, kappa).unwrap();
        for n in 1..=6 {
            let total: f64 = integer_partitions(n)
                .into_iter()
                .map(|p| set_partition_count(&p) * eppf_eps(&rho, &trunc, &comp(&p)).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-4, "{rho:?} n={n}: {total}");
        }
    }
}

#[test]
fn addition_rule_holds() {
    for (rho, kappa) in families() {
        let trunc = TruncationSpec::new(1e-6, kappa).unwrap();
        for n in 1..=4 {
            for p in integer_partitions(n) {
                let here = eppf_eps(&rho, &trunc, &comp(&p)).unwrap();
                let mut next = 0.0;
                for i in 0..p.len() {
                    let mut q = p.clone();
                    q[i] += 1;
                    next += eppf_eps(&rho, &trunc, &comp(&q)).unwrap();
                }
                let mut q = p.clone();
                q.push(1);
                next += eppf_eps(&rho, &trunc, &comp(&q)).unwrap();
                assert!((here - next).abs() < 1e-4, "{rho:?} {p:?}: {here} vs {next}");
            }
        }
    }
}

fn worst_gamma_gap(kappa: f64, eps: f64) -> f64 {
    let rho = Intensity::gamma(1.0).unwrap();
    let trunc = TruncationSpec::new(eps, kappa).unwrap();
    let mut worst: f64 = 0.0;
    for n in 2..=5 {
        for p in integer_partitions(n) {
            let c = comp(&p);
            worst = worst.max((eppf_eps(&rho, &trunc, &c).unwrap() - eppf_dirichlet(&c, kappa)).abs());
        }
    }
    worst
}

// Past the crossing near ε = 10⁻³ the gap to the Dirichlet eppf shrinks
// steadily; see `gamma_eppf_overshoots_then_recovers` for the start.
#[test]
fn gamma_truncation_error_shrinks_with_epsilon() {
    for kappa in [0.5, 1.0, 2.0] {
        let mut previous = f64::INFINITY;
        for eps in [1e-4, 1e-6, 1e-8] {
            let worst = worst_gamma_gap(kappa, eps);
            assert!(worst < previous, "κ={kappa} ε={eps}: {worst} after {previous}");
            previous = worst;
        }
    }
}

#[test]
fn gamma_eppf_overshoots_then_recovers() {
    // p_ε(2) under Gamma(1), κ = 0.5 dips below its limit 2/3 and climbs
    // back; Monte Carlo values of E Σ w_j² (4·10⁵ realizations) agree.
    let rho = Intensity::gamma(1.0).unwrap();
    let p2 = |eps: f64| eppf_eps(&rho, &TruncationSpec::new(eps, 0.5).unwrap(), &comp(&[2])).unwrap();
    let (a, b, c) = (p2(1e-1), p2(1e-3), p2(1e-8));
    assert!((a - 0.72496).abs() < 3e-3 && (b - 0.61347).abs() < 3e-3 && (c - 0.64206).abs() < 3e-3);
    assert!(a > 2.0 / 3.0 && b < c && c < 2.0 / 3.0);
    assert!(worst_gamma_gap(0.5, 1e-4) > worst_gamma_gap(0.5, 1e-2));
}

#[test]
fn quadrature_limit_of_gamma_is_dirichlet() {
    let rho = Intensity::gamma(1.0).unwrap();
    for kappa in [0.3, 1.0, 4.0] {
        for p in integer_partitions(5) {
            let c = comp(&p);
            let a = eppf_limit(&rho, kappa, &c).unwrap();
            let b = eppf_dirichlet(&c, kappa);
            assert!(((a - b) / b).abs() < 1e-8, "κ={kappa} {p:?}: {a} vs {b}");
        }
    }
}

#[test]
fn bessel_at_large_omega_approaches_dirichlet() {
    for kappa in [0.98, 2.0] {
        for n in 2..=4 {
            for p in integer_partitions(n) {
                let c = comp(&p);
                let pb = eppf_bessel(&c, 1000.0, kappa).unwrap();
                let pd = eppf_dirichlet(&c, kappa);
                assert!(((pb - pd) / pd).abs() < 1e-2, "κ={kappa} {p:?}");
            }
        }
    }
}

fn composition() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..4, 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eppf_is_symmetric(counts in composition(), rot in 0usize..4, family in 0usize..3) {
        let (rho, kappa) = families()[family];
        let trunc = TruncationSpec::new(1e-6, kappa).unwrap();
        let mut perm = counts.clone();
        let len = perm.len();
        perm.rotate_left(rot % len);
        perm.reverse();
        let a = eppf_eps(&rho, &trunc, &comp(&counts)).unwrap();
        let b = eppf_eps(&rho, &trunc, &comp(&perm)).unwrap();
        prop_assert!(((a - b) / a).abs() < 1e-12, "{:?} {} vs {:?} {}", counts, a, perm, b);
    }

    #[test]
    fn bessel_bounds_hold(counts in composition(), omega in 1.0f64..30.0, kappa in 0.05f64..5.0) {
        let c = comp(&counts);
        let (lo, hi) = bessel_dirichlet_bounds(&c, omega, kappa).unwrap();
        let p = eppf_bessel(&c, omega, kappa).unwrap();
        prop_assert!(lo <= p * (1.0 + 1e-9), "{:?} ω={} κ={}: {} < {}", counts, omega, kappa, p, lo);
        prop_assert!(p <= hi * (1.0 + 1e-9), "{:?} ω={} κ={}: {} > {}", counts, omega, kappa, p, hi);
    }

    #[test]
    fn hypergeometric_and_quadrature_bessel_forms_agree(counts in composition(), omega in 1.02f64..10.0, kappa in 0.1f64..3.0) {
        let c = comp(&counts);
        let a = eppf_bessel(&c, omega, kappa).unwrap();
        let b = eppf_limit(&Intensity::bessel(omega).unwrap(), kappa, &c).unwrap();
        prop_assert!(((a - b) / b).abs() < 1e-7, "{} vs {}", a, b);
    }

    #[test]
    fn moment_formulas_are_consistent(p2 in 0.0f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0, f in 0.0f64..1.0) {
        // B₁ ∩ B₂ gets a fraction f of the smaller set.
        let ab = f * a.min(b);
        prop_assume!(a + b - ab <= 1.0);
        let m = moments_from_tie_prob(p2, (a, b, ab)).unwrap();
        prop_assert_eq!(m.mean, a);
        prop_assert!(m.var >= 0.0 && m.var <= a * (1.0 - a) + 1e-15);
        // Cauchy–Schwarz against the variance of P(B₂).
        let vb = moments_from_tie_prob(p2, (b, a, ab)).unwrap().var;
        prop_assert!(m.cov * m.cov <= m.var * vb * (1.0 + 1e-12) + 1e-300);
    }
}
