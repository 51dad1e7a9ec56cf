//! Conditional-law checks for every Gibbs step, shared by the gibbs
//! integration tests and the acceptance target.
#![allow(dead_code)]

use epscrm::crm::{Intensity, TruncationSpec};
use epscrm::data::Dataset;
use epscrm::eppf::ln_eppf_integrand;
use epscrm::gibbs::{
    sample_n_nonallocated, step_allocations, step_epsilon, step_global, step_jumps, step_locations,
    step_n_nonallocated, step_u, EpsilonPrior, GibbsState,
};
use epscrm::gof::{chi_square_pvalue, discrete_bins, ks_test, mean_se};
use epscrm::models::{normal_ln_pdf, GaussNig, LinDep, LinLocation, NigLocation, VarianceMode};
use epscrm::par::{substream, Execution};
use epscrm::specfun::{exp1, gamma_q, ln_gamma};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub const LEVEL: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn pvalue(name: &str, p: f64) -> Check {
        Check {
            name: name.into(),
            pass: p > LEVEL,
            detail: format!("p = {p:.4}"),
        }
    }

    fn within(name: &str, got: f64, se: f64, exact: f64, k: f64) -> Check {
        Check {
            name: name.into(),
            pass: (got - exact).abs() < k * se,
            detail: format!("{got:.6} ± {se:.2e} vs {exact:.6}"),
        }
    }
}

fn normal_cdf(z: f64) -> f64 {
    let half_tail = 0.5 * gamma_q(0.5, 0.5 * z * z).unwrap();
    if z >= 0.0 {
        1.0 - half_tail
    } else {
        half_tail
    }
}

fn inv_gamma_cdf(shape: f64, scale: f64) -> impl Fn(f64) -> f64 {
    move |v: f64| gamma_q(shape, scale / v).unwrap()
}

fn nig_state(
    u: f64,
    eps: f64,
    allocations: Vec<usize>,
    jumps: Vec<f64>,
    locations: Vec<NigLocation>,
) -> GibbsState<NigLocation, ()> {
    let k = allocations.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0u32; k];
    for &c in &allocations {
        sizes[c] += 1;
    }
    let n_na = jumps.len() - k;
    GibbsState {
        u,
        epsilon: eps,
        allocations,
        sizes,
        jumps,
        locations,
        global: (),
        n_na,
        iteration: 0,
    }
}

fn loc(mu: f64, sigma2: f64) -> NigLocation {
    NigLocation { mu, sigma2 }
}

/// u | rest ~ gamma(n, T).
pub fn check_u(reps: usize, seed: u64) -> Check {
    let mut state = nig_state(1.0, 1e-6, vec![0; 10], vec![2.0, 0.5, 1.5], vec![loc(0.0, 1.0); 3]);
    let mut rng = substream(seed, 0);
    let draws: Vec<f64> = (0..reps)
        .map(|_| {
            step_u(&mut state, &mut rng);
            state.u
        })
        .collect();
    Check::pvalue(
        "u ~ gamma(10, T = 4), KS",
        ks_test(&draws, |u| 1.0 - gamma_q(10.0, 4.0 * u).unwrap()),
    )
}

/// P(c = j) ∝ J_j f(y; τ_j).
pub fn check_allocations(reps: usize, seed: u64) -> Check {
    let model = GaussNig::new(0.1, 2.0, 1.0, 0.0).unwrap();
    let data = Dataset::from_response(vec![0.5]);
    let jumps = vec![1.0, 2.0, 0.5];
    let locs = vec![loc(0.0, 1.0), loc(1.0, 0.5), loc(3.0, 2.0)];
    let frozen = nig_state(1.0, 1e-6, vec![0], jumps.clone(), locs.clone());
    let w: Vec<f64> = jumps
        .iter()
        .zip(&locs)
        .map(|(j, l)| j * normal_ln_pdf(0.5, l.mu, l.sigma2).exp())
        .collect();
    let total: f64 = w.iter().sum();
    let mut counts = [0.0; 3];
    let mut rng = substream(seed, 1);
    for _ in 0..reps {
        let mut s = frozen.clone();
        step_allocations(&mut s, &data, &model, Execution::Sequential, &mut rng).unwrap();
        let mu = s.locations[s.allocations[0]].mu;
        let j = locs.iter().position(|l| l.mu == mu).unwrap();
        counts[j] += 1.0;
    }
    let expected: Vec<f64> = w.iter().map(|x| reps as f64 * x / total).collect();
    Check::pvalue(
        "allocation ∝ J f(y; τ), chi-square",
        chi_square_pvalue(&counts, &expected, 0).unwrap(),
    )
}

fn n_na_pmf(lambda: f64, k: usize) -> impl Fn(u64) -> f64 {
    move |m: u64| {
        let pois = |j: i64| {
            if j < 0 {
                0.0
            } else {
                let jf = j as f64;
                (jf * lambda.ln() - lambda - ln_gamma(jf + 1.0)).exp()
            }
        };
        let kf = k as f64;
        lambda / (lambda + kf) * pois(m as i64 - 1) + kf / (lambda + kf) * pois(m as i64)
    }
}

/// Hand case Λ = 2, k = 3: P(N_na = 0) = (3/5)e⁻², plus the whole law.
pub fn check_n_na_hand(reps: usize, seed: u64) -> Vec<Check> {
    let mut rng = substream(seed, 2);
    let draws: Vec<u64> = (0..reps)
        .map(|_| sample_n_nonallocated(2.0, 3, &mut rng) as u64)
        .collect();
    let zeros: Vec<f64> = draws.iter().map(|&d| (d == 0) as u8 as f64).collect();
    let (p0, se) = mean_se(&zeros);
    let (obs, exp) = discrete_bins(&draws, n_na_pmf(2.0, 3));
    vec![
        Check::within(
            "P(N_na = 0) = (3/5)e^-2 at Λ=2, k=3",
            p0,
            se,
            0.6 * (-2.0f64).exp(),
            3.0,
        ),
        Check::pvalue(
            "N_na mixture law at Λ=2, k=3, chi-square",
            chi_square_pvalue(&obs, &exp, 0).unwrap(),
        ),
    ]
}

/// N_na through the state, with Λ_{ε,u} from the quadrature oracle.
pub fn check_n_na_state(reps: usize, seed: u64) -> Check {
    let rho = Intensity::gamma(1.0).unwrap();
    let (eps, u, kappa) = (1e-3, 1.3, 0.7);
    let lambda = rho.ln_tilted_moment_quadrature(kappa, eps, u, 0).unwrap().exp();
    let mut state = nig_state(u, eps, vec![0, 1, 1, 2], vec![1.0, 1.0, 1.0], vec![loc(0.0, 1.0); 3]);
    let mut rng = substream(seed, 3);
    let draws: Vec<u64> = (0..reps)
        .map(|_| {
            step_n_nonallocated(&mut state, &rho, kappa, &mut rng).unwrap();
            state.n_na as u64
        })
        .collect();
    let (obs, exp) = discrete_bins(&draws, n_na_pmf(lambda, 3));
    Check::pvalue(
        "N_na | u via the state (Gamma, k=3), chi-square",
        chi_square_pvalue(&obs, &exp, 0).unwrap(),
    )
}

/// Allocated jump with n_i = 2 under Gamma(1), u = 1: gamma(2, 2);
/// non-allocated: ∝ e^{−2s}/s on (ε, ∞).
pub fn check_jumps(reps: usize, seed: u64) -> Vec<Check> {
    let rho = Intensity::gamma(1.0).unwrap();
    let eps = 1e-6;
    let mut state = nig_state(1.0, eps, vec![0, 0], vec![1.0, 1.0], vec![loc(0.0, 1.0); 2]);
    let mut rng = substream(seed, 4);
    let mut alloc = Vec::with_capacity(reps);
    let mut free = Vec::with_capacity(reps);
    for _ in 0..reps {
        state.n_na = 1;
        step_jumps(&mut state, &rho, &mut rng).unwrap();
        alloc.push(state.jumps[0]);
        free.push(state.jumps[1]);
    }
    let (m, se) = mean_se(&alloc);
    let trunc = TruncationSpec::new(eps, 1.0).unwrap();
    let free_mean = rho.tilted_moment(&trunc, 1.0, 1).unwrap() / rho.tilted_moment(&trunc, 1.0, 0).unwrap();
    let (fm, fse) = mean_se(&free);
    let e0 = exp1(2.0 * eps);
    vec![
        Check::pvalue(
            "allocated jump (n_i=2, u=1) ~ gamma(2, 2), KS",
            ks_test(&alloc, |x| 1.0 - gamma_q(2.0, 2.0 * x).unwrap()),
        ),
        Check::within("allocated jump mean = 1", m, se, 1.0, 3.0),
        Check::pvalue(
            "non-allocated jump ∝ e^{-2s}/s, KS",
            ks_test(&free, |x| 1.0 - exp1(2.0 * x) / e0),
        ),
        Check::within("non-allocated jump mean = M1/Λ_{ε,u}", fm, fse, free_mean, 3.0),
    ]
}

/// Allocated NIG location from its conjugate posterior; non-allocated from P₀.
pub fn check_locations(reps: usize, seed: u64) -> Vec<Check> {
    let model = GaussNig::new(0.3, 3.0, 2.0, 1.0).unwrap();
    let ys = vec![0.2, 1.7, 2.4];
    let data = Dataset::from_response(ys.clone());
    let (kn, mn, an, bn) = model.posterior(ys.iter());
    let mut state = nig_state(1.0, 1e-6, vec![0, 0, 0], vec![1.0, 1.0], vec![loc(0.0, 1.0); 2]);
    let mut rng = substream(seed, 5);
    let mut v = Vec::with_capacity(reps);
    let mut z = Vec::with_capacity(reps);
    let mut v0 = Vec::with_capacity(reps);
    let mut z0 = Vec::with_capacity(reps);
    for _ in 0..reps {
        state.n_na = 1;
        step_locations(&mut state, &data, &model, &mut rng);
        let (a, b) = (state.locations[0], state.locations[1]);
        v.push(a.sigma2);
        z.push((a.mu - mn) / (a.sigma2 / kn).sqrt());
        v0.push(b.sigma2);
        z0.push((b.mu - model.m0) / (b.sigma2 / model.kappa0).sqrt());
    }
    vec![
        Check::pvalue(
            "allocated σ² ~ inv-gamma(a_n, b_n), KS",
            ks_test(&v, inv_gamma_cdf(an, bn)),
        ),
        Check::pvalue("allocated μ | σ² ~ N(m_n, σ²/κ_n), KS", ks_test(&z, normal_cdf)),
        Check::pvalue(
            "non-allocated σ² ~ inv-gamma(a, b), KS",
            ks_test(&v0, inv_gamma_cdf(model.a, model.b)),
        ),
        Check::pvalue("non-allocated μ | σ² ~ N(m0, σ²/κ0), KS", ks_test(&z0, normal_cdf)),
    ]
}

/// Parametric η² | θ's ~ inv-gamma((ν₀+n)/2, (ν₀η₀² + SS)/2).
pub fn check_global(reps: usize, seed: u64) -> Check {
    let (nu0, eta0sq) = (4.0, 1.5);
    let model = LinDep::new(
        vec![0.0, 0.0],
        DMatrix::identity(2, 2) * 10.0,
        nu0,
        eta0sq,
        VarianceMode::Parametric,
    )
    .unwrap();
    let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
    let y = vec![0.1, 1.4, 1.8, 3.5, 3.9];
    let data = Dataset::with_covariates(y.clone(), vec!["x".into()], x.clone()).unwrap();
    let thetas = [DVector::from_vec(vec![0.0, 1.0]), DVector::from_vec(vec![0.5, 0.8])];
    let allocations = vec![0, 0, 1, 1, 1];
    let ss: f64 = (0..5)
        .map(|i| {
            let t = &thetas[allocations[i]];
            (y[i] - t[0] - t[1] * x[i][0]).powi(2)
        })
        .sum();
    let mut state = GibbsState {
        u: 1.0,
        epsilon: 1e-6,
        allocations,
        sizes: vec![2, 3],
        jumps: vec![1.0, 1.0],
        locations: thetas
            .iter()
            .map(|t| LinLocation {
                theta: t.clone(),
                eta2: None,
            })
            .collect(),
        global: 1.0,
        n_na: 0,
        iteration: 0,
    };
    let mut rng = substream(seed, 6);
    let draws: Vec<f64> = (0..reps)
        .map(|_| {
            step_global(&mut state, &data, &model, &mut rng);
            state.global
        })
        .collect();
    Check::pvalue(
        "global η² ~ inv-gamma((ν0+n)/2, (ν0η0²+SS)/2), KS",
        ks_test(&draws, inv_gamma_cdf(0.5 * (nu0 + 5.0), 0.5 * (nu0 * eta0sq + ss))),
    )
}

/// ε MH step: started from its target, five steps leave the law unchanged.
pub fn check_epsilon(reps: usize, seed: u64) -> Vec<Check> {
    let rho = Intensity::gamma(1.0).unwrap();
    let (kappa, u) = (1.0, 2.0);
    let sizes = vec![3u32, 1];
    let prior = EpsilonPrior::LogUniform { lo: 1e-4, hi: 0.5 };
    // Target CDF on a fine grid in ln ε.
    let m = 20_000;
    let (a, b) = (1e-4f64.ln(), 0.5f64.ln());
    let grid: Vec<f64> = (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect();
    let ln_t: Vec<f64> = grid
        .iter()
        .map(|&t| ln_eppf_integrand(&rho, kappa, t.exp(), u, &sizes).unwrap() + prior.ln_density(t.exp()) + t)
        .collect();
    let top = ln_t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cdf = vec![0.0; m + 1];
    for i in 1..=m {
        cdf[i] = cdf[i - 1] + 0.5 * ((ln_t[i - 1] - top).exp() + (ln_t[i] - top).exp());
    }
    let total = cdf[m];
    cdf.iter_mut().for_each(|c| *c /= total);
    let cdf_at = |eps: f64| {
        let t = eps.ln();
        if t <= a {
            return 0.0;
        }
        if t >= b {
            return 1.0;
        }
        let pos = (t - a) / (b - a) * m as f64;
        let i = (pos.floor() as usize).min(m - 1);
        let f = pos - i as f64;
        cdf[i] * (1.0 - f) + cdf[i + 1] * f
    };
    let inverse = |v: f64| {
        let i = cdf.partition_point(|&c| c < v).clamp(1, m);
        let f = (v - cdf[i - 1]) / (cdf[i] - cdf[i - 1]);
        (grid[i - 1] + f * (grid[i] - grid[i - 1])).exp()
    };
    let mut rng = substream(seed, 7);
    let mut accepted = 0usize;
    let mut draws = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = inverse(rng.random::<f64>());
        let mut state = nig_state(u, start, vec![0, 0, 0, 1], vec![1.0, 1.0], vec![loc(0.0, 1.0); 2]);
        for _ in 0..5 {
            accepted += step_epsilon(&mut state, &rho, kappa, &prior, 3.0, &mut rng).unwrap() as usize;
        }
        draws.push(state.epsilon);
    }
    let rate = accepted as f64 / (5 * reps) as f64;
    vec![
        Check::pvalue("ε MH leaves f_ε(u; n) π(ε) invariant, KS", ks_test(&draws, cdf_at)),
        Check {
            name: "ε MH acceptance rate in (0.05, 0.95)".into(),
            pass: rate > 0.05 && rate < 0.95,
            detail: format!("rate = {rate:.3}"),
        },
    ]
}

pub fn all_conditional_checks(reps: usize, seed: u64) -> Vec<Check> {
    let mut v = vec![check_u(reps, seed), check_allocations(reps, seed)];
    v.extend(check_n_na_hand(reps, seed));
    v.push(check_n_na_state(reps, seed));
    v.extend(check_jumps(reps, seed));
    v.extend(check_locations(reps, seed));
    v.push(check_global(reps, seed));
    v.extend(check_epsilon(reps, seed));
    v
}
