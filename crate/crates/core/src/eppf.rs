//! Exchangeable partition probabilities, prior moments, the prior law of the
//! number of clusters K_n, and calibration of κ.

use rand_distr::{Binomial, Distribution};

use crate::crm::{Intensity, PriorSampler, TruncationSpec};
use crate::par::{fold_range, substream, Execution};
use crate::specfun::{ln_gamma, ln_hyp2f1_unit_c, ln_integral_exp, QuadControl, SeriesControl};
use crate::{Error, Result};

/// Cluster sizes (n₁, …, n_k) of a partition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Composition {
    counts: Vec<u32>,
}

impl Composition {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() || counts.contains(&0) {
            return Err(Error::domain(format!(
                "composition needs positive counts, got {counts:?}"
            )));
        }
        Ok(Composition { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }
}

impl std::fmt::Display for Composition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn eppf_ctrl() -> QuadControl {
    QuadControl {
        rel_tol: 1e-10,
        max_subdivisions: 4000,
        ..QuadControl::default()
    }
}

// Σ_i ln M_{n_i}(u), computing each distinct n_i once.
fn sum_ln_moments(counts: &[u32], mut moment: impl FnMut(u32) -> Result<f64>) -> Result<f64> {
    let mut seen: Vec<(u32, f64)> = Vec::with_capacity(counts.len());
    let mut total = 0.0;
    for &c in counts {
        let v = match seen.iter().find(|(m, _)| *m == c) {
            Some(&(_, v)) => v,
            None => {
                let v = moment(c)?;
                seen.push((c, v));
                v
            }
        };
        total += v;
    }
    Ok(total)
}

/// ln f_ε(u; n₁..n_k): the integrand of the truncated eppf over u, which is
/// also (up to a constant) the full conditional of ε given u and the sizes.
pub fn ln_eppf_integrand(intensity: &Intensity, kappa: f64, epsilon: f64, u: f64, counts: &[u32]) -> Result<f64> {
    let ln_lambda0 = intensity.ln_tilted_moment(kappa, epsilon, 0.0, 0)?;
    ln_integrand_with(intensity, kappa, epsilon, ln_lambda0, u, counts)
}

fn ln_integrand_with(
    intensity: &Intensity,
    kappa: f64,
    epsilon: f64,
    ln_lambda0: f64,
    u: f64,
    counts: &[u32],
) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Ok(f64::NEG_INFINITY);
    }
    let n: u32 = counts.iter().sum();
    let k = counts.len() as f64;
    let lambda0 = ln_lambda0.exp();
    let lambda_u = intensity.ln_tilted_moment(kappa, epsilon, u, 0)?.exp();
    let moments = sum_ln_moments(counts, |m| intensity.ln_tilted_moment(kappa, epsilon, u, m))?;
    Ok(
        (n as f64 - 1.0) * u.ln() - ln_gamma(n as f64) + (k + lambda_u).ln() - ln_lambda0
            + (lambda_u - lambda0)
            + moments,
    )
}

/// Split point for the u-integral: u* = n / E(T_ε).
fn split_point(intensity: &Intensity, trunc: &TruncationSpec, n: u32) -> f64 {
    let m1 = intensity.ln_tilted_moment(trunc.kappa, trunc.epsilon, 0.0, 1);
    let l0 = intensity.ln_tilted_moment(trunc.kappa, trunc.epsilon, 0.0, 0);
    match (m1, l0) {
        (Ok(m1), Ok(l0)) => {
            // E(T_ε) = (Λ_ε + 1) M₁/Λ_ε
            let ln_et = m1 + (1.0 + (-l0).exp()).ln();
            (n as f64).ln() - ln_et
        }
        _ => (n as f64).ln(),
    }
}

/// Eppf of the truncated measure, by quadrature over log u.
pub fn eppf_eps(intensity: &Intensity, trunc: &TruncationSpec, comp: &Composition) -> Result<f64> {
    if comp.n() == 1 {
        return Ok(1.0);
    }
    let ln_lambda0 = intensity.ln_tilted_moment(trunc.kappa, trunc.epsilon, 0.0, 0)?;
    let err = std::cell::RefCell::new(None);
    let g = |t: f64| {
        let u = t.exp();
        match ln_integrand_with(intensity, trunc.kappa, trunc.epsilon, ln_lambda0, u, comp.counts()) {
            Ok(v) => v + t,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NEG_INFINITY
            }
        }
    };
    let split = split_point(intensity, trunc, comp.n());
    let v = ln_integral_exp(g, f64::NEG_INFINITY, split, eppf_ctrl())?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(v.exp())
}

/// ε → 0 limit of [`eppf_eps`]: the eppf of the untruncated normalized CRM.
pub fn eppf_limit(intensity: &Intensity, kappa: f64, comp: &Composition) -> Result<f64> {
    if comp.n() == 1 {
        return Ok(1.0);
    }
    let n = comp.n() as f64;
    let err = std::cell::RefCell::new(None);
    let g = |t: f64| {
        let u = t.exp();
        if !(u > 0.0 && u.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let r = (|| -> Result<f64> {
            let m = sum_ln_moments(comp.counts(), |c| intensity.ln_tilted_moment(kappa, 0.0, u, c))?;
            Ok(n * t - ln_gamma(n) - intensity.laplace_exponent(kappa, u)? + m)
        })();
        r.unwrap_or_else(|e| {
            err.borrow_mut().get_or_insert(e);
            f64::NEG_INFINITY
        })
    };
    let et = intensity.mean_total_mass(kappa);
    let split = if et.is_finite() { (n / et).ln() } else { n.ln() };
    let v = ln_integral_exp(g, f64::NEG_INFINITY, split, eppf_ctrl())?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(v.exp())
}

/// Eppf of the Dirichlet process: Γ(κ)/Γ(κ+n) κ^k Π Γ(n_j).
pub fn eppf_dirichlet(comp: &Composition, kappa: f64) -> f64 {
    ln_eppf_dirichlet(comp, kappa).exp()
}

pub fn ln_eppf_dirichlet(comp: &Composition, kappa: f64) -> f64 {
    ln_gamma(kappa) - ln_gamma(kappa + comp.n() as f64)
        + comp.k() as f64 * kappa.ln()
        + comp.counts().iter().map(|&c| ln_gamma(c as f64)).sum::<f64>()
}

/// Eppf of the normalized Bessel random measure in its hypergeometric form:
///
/// κ^k ∫ u^{n−1}/Γ(n) · ((ω+√(ω²−1))/(ω+u+√((ω+u)²−1)))^κ · (u+ω)^{−n}
///     · Π Γ(n_j) ₂F₁(n_j/2, (n_j+1)/2; 1; (u+ω)^{−2}) du.
///
/// Where the series argument is too close to 1 (ω = 1, u ≈ 0) the factor
/// is taken from quadrature of the defining moment integral instead.
pub fn eppf_bessel(comp: &Composition, omega: f64, kappa: f64) -> Result<f64> {
    let intensity = Intensity::Bessel { omega };
    if !(omega >= 1.0) {
        return Err(Error::domain(format!("Bessel eppf needs ω ≥ 1, got {omega}")));
    }
    if comp.n() == 1 {
        return Ok(1.0);
    }
    let n = comp.n() as f64;
    let k = comp.k() as f64;
    let ctrl = SeriesControl::default();
    let err = std::cell::RefCell::new(None);
    let g = |t: f64| {
        let u = t.exp();
        if !(u > 0.0 && u.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let lam = omega + u;
        let z = 1.0 / (lam * lam);
        let r = (|| -> Result<f64> {
            let f = sum_ln_moments(comp.counts(), |c| {
                let cf = c as f64;
                match ln_hyp2f1_unit_c(cf / 2.0, (cf + 1.0) / 2.0, z, ctrl) {
                    Ok(v) => Ok(ln_gamma(cf) + v),
                    Err(Error::Accuracy { .. }) => {
                        Ok(intensity.ln_tilted_moment_quadrature(1.0, 0.0, u, c)? + cf * lam.ln())
                    }
                    Err(e) => Err(e),
                }
            })?;
            Ok(n * t - ln_gamma(n) - intensity.laplace_exponent(kappa, u)? - n * lam.ln() + k * kappa.ln() + f)
        })();
        r.unwrap_or_else(|e| {
            err.borrow_mut().get_or_insert(e);
            f64::NEG_INFINITY
        })
    };
    let et = intensity.mean_total_mass(kappa);
    let split = if et.is_finite() { (n / et).ln() } else { n.ln() };
    let v = ln_integral_exp(g, f64::NEG_INFINITY, split, eppf_ctrl())?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(v.exp())
}

/// Two-sided bounds on the Bessel eppf around the Dirichlet eppf p_D:
/// ((1+√(1−ω⁻²))/2)^κ p_D ≤ p_B ≤ Π ₂F₁(n_j/2,(n_j+1)/2;1;ω⁻²) p_D.
pub fn bessel_dirichlet_bounds(comp: &Composition, omega: f64, kappa: f64) -> Result<(f64, f64)> {
    if !(omega >= 1.0) {
        return Err(Error::domain(format!("Bessel bounds need ω ≥ 1, got {omega}")));
    }
    let z = 1.0 / (omega * omega);
    let ln_pd = ln_eppf_dirichlet(comp, kappa);
    let lower = (kappa * (0.5 * (1.0 + (1.0 - z).sqrt())).ln() + ln_pd).exp();
    let upper = if omega == 1.0 {
        f64::INFINITY
    } else {
        let mut s = ln_pd;
        for &c in comp.counts() {
            let cf = c as f64;
            s += ln_hyp2f1_unit_c(cf / 2.0, (cf + 1.0) / 2.0, z, SeriesControl::default())?;
        }
        s.exp()
    };
    Ok((lower, upper))
}

/// p_ε(2): probability that two draws from the truncated measure coincide.
pub fn pair_tie_prob(intensity: &Intensity, trunc: &TruncationSpec) -> Result<f64> {
    eppf_eps(intensity, trunc, &Composition { counts: vec![2] })
}

/// Prior mean and variance of P_ε(B₁) and covariance of P_ε(B₁), P_ε(B₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorMoments {
    pub mean: f64,
    pub var: f64,
    pub cov: f64,
}

/// P₀-masses `(P₀(B₁), P₀(B₂), P₀(B₁∩B₂))`.
pub fn moments_from_tie_prob(p2: f64, masses: (f64, f64, f64)) -> Result<PriorMoments> {
    let (a, b, ab) = masses;
    let ok = [a, b, ab].iter().all(|p| (0.0..=1.0).contains(p)) && ab <= a.min(b) && a + b - ab <= 1.0 + 1e-15;
    if !ok {
        return Err(Error::domain(format!("inconsistent base-measure masses {masses:?}")));
    }
    Ok(PriorMoments {
        mean: a,
        var: p2 * a * (1.0 - a),
        cov: p2 * (ab - a * b),
    })
}

pub fn prior_mean_var_cov(
    intensity: &Intensity,
    trunc: &TruncationSpec,
    masses: (f64, f64, f64),
) -> Result<PriorMoments> {
    moments_from_tie_prob(pair_tie_prob(intensity, trunc)?, masses)
}

/// Law of K_n on {1, …, n}.
#[derive(Debug, Clone, PartialEq)]
pub struct KnDistribution {
    pub n: usize,
    /// `probs[k-1]` = P(K_n = k).
    pub probs: Vec<f64>,
    /// Monte Carlo standard errors; zeros for exact laws.
    pub se: Vec<f64>,
}

impl KnDistribution {
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }

    pub fn sd(&self) -> f64 {
        let m = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| ((i + 1) as f64 - m).powi(2) * p)
            .sum::<f64>()
            .sqrt()
    }

    pub fn mode(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc },
            )
            .0
            + 1
    }
}

/// Integer partitions of n, each in non-increasing order.
pub fn integer_partitions(n: u32) -> Vec<Vec<u32>> {
    fn rec(rest: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=rest.min(max)).rev() {
            cur.push(p);
            rec(rest - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Number of set partitions of {1..n} whose block sizes are `parts`.
pub fn set_partition_count(parts: &[u32]) -> f64 {
    let n: u32 = parts.iter().sum();
    let mut ln = ln_gamma(n as f64 + 1.0);
    for &p in parts {
        ln -= ln_gamma(p as f64 + 1.0);
    }
    let mut sorted = parts.to_vec();
    sorted.sort_unstable();
    for run in sorted.chunk_by(|a, b| a == b) {
        ln -= ln_gamma(run.len() as f64 + 1.0);
    }
    ln.exp().round()
}

/// Exact law of K_n by summing the eppf over all set partitions (n ≤ 12).
pub fn prior_kn_exact(intensity: &Intensity, trunc: &TruncationSpec, n: u32) -> Result<KnDistribution> {
    if n == 0 || n > 12 {
        return Err(Error::domain(format!(
            "exact K_n enumeration supports 1 ≤ n ≤ 12, got {n}"
        )));
    }
    let mut probs = vec![0.0; n as usize];
    for parts in integer_partitions(n) {
        let k = parts.len();
        let p = eppf_eps(intensity, trunc, &Composition::new(parts.clone())?)?;
        probs[k - 1] += set_partition_count(&parts) * p;
    }
    Ok(KnDistribution {
        n: n as usize,
        se: vec![0.0; n as usize],
        probs,
    })
}

/// Monte Carlo law of K_n: draw a realization, allocate n points to its
/// atoms by multinomial sampling, count occupied atoms.
///
/// Replicate r uses substream r of `seed`, so the result does not depend on
/// the execution mode.
pub fn prior_kn_monte_carlo(
    intensity: &Intensity,
    trunc: &TruncationSpec,
    n: usize,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<KnDistribution> {
    if n == 0 || reps == 0 {
        return Err(Error::domain("prior K_n needs n ≥ 1 and reps ≥ 1"));
    }
    let sampler = PriorSampler::new(intensity, trunc)?;
    let counts = fold_range(
        exec,
        reps,
        256,
        || vec![0u64; n],
        |acc, r| {
            let mut rng = substream(seed, r as u64);
            let k = occupied_atoms(&sampler.sample_jumps(&mut rng), n, &mut rng);
            acc[k - 1] += 1;
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    let r = reps as f64;
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / r).collect();
    let se = probs.iter().map(|p| (p * (1.0 - p) / r).sqrt()).collect();
    Ok(KnDistribution { n, probs, se })
}

/// Number of distinct atoms hit by n draws from the normalized jumps.
pub fn occupied_atoms<R: rand::Rng + ?Sized>(jumps: &[f64], n: usize, rng: &mut R) -> usize {
    let mut rest_mass: f64 = jumps.iter().sum();
    let mut rest = n as u64;
    let mut k = 0;
    for (j, &w) in jumps.iter().enumerate() {
        if rest == 0 {
            break;
        }
        let c = if j + 1 == jumps.len() {
            rest
        } else {
            let p = (w / rest_mass).clamp(0.0, 1.0);
            Binomial::new(rest, p).expect("valid binomial").sample(rng)
        };
        if c > 0 {
            k += 1;
        }
        rest -= c;
        rest_mass -= w;
    }
    k
}

/// What κ should achieve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationTarget {
    /// p_ε(2) = q.
    PairTie(f64),
    /// E(K_n) = m, estimated by Monte Carlo with a fixed seed.
    ExpectedClusters { m: f64, n: usize, reps: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub kappa: f64,
    pub achieved: f64,
    pub target: f64,
    pub evaluations: usize,
}

/// Finds κ by bisection on log κ; p_ε(2) decreases and E(K_n) increases in κ.
pub fn calibrate_kappa(
    intensity: &Intensity,
    epsilon: f64,
    target: CalibrationTarget,
    exec: Execution,
) -> Result<Calibration> {
    let (goal, increasing) = match target {
        CalibrationTarget::PairTie(q) if q > 0.0 && q < 1.0 => (q, false),
        CalibrationTarget::ExpectedClusters { m, n, reps, .. } if m > 1.0 && m < n as f64 && reps > 0 => (m, true),
        other => return Err(Error::domain(format!("unattainable calibration target {other:?}"))),
    };
    let mut evaluations = 0;
    let mut eval = |kappa: f64| -> Result<f64> {
        evaluations += 1;
        let trunc = TruncationSpec::new(epsilon, kappa)?;
        match target {
            CalibrationTarget::PairTie(_) => pair_tie_prob(intensity, &trunc),
            CalibrationTarget::ExpectedClusters { n, reps, seed, .. } => {
                Ok(prior_kn_monte_carlo(intensity, &trunc, n, reps, seed, exec)?.mean())
            }
        }
    };
    // Signed distance that increases in log κ.
    let sign = if increasing { 1.0 } else { -1.0 };
    let (mut lo, mut hi) = (0.1f64.ln(), 10f64.ln());
    let (mut f_lo, mut f_hi) = (eval(lo.exp())?, eval(hi.exp())?);
    let limit = 1e6f64.ln();
    while sign * (f_lo - goal) > 0.0 {
        if lo < -limit {
            return Err(Error::domain(format!(
                "target {goal} not bracketed: κ = {:.3e} already gives {f_lo}",
                lo.exp()
            )));
        }
        hi = lo;
        f_hi = f_lo;
        lo -= 2.0;
        f_lo = eval(lo.exp())?;
    }
    while sign * (f_hi - goal) < 0.0 {
        if hi > limit {
            return Err(Error::domain(format!(
                "target {goal} not bracketed: κ = {:.3e} only reaches {f_hi}",
                hi.exp()
            )));
        }
        lo = hi;
        f_lo = f_hi;
        hi += 2.0;
        f_hi = eval(hi.exp())?;
    }
    let _ = (f_lo, f_hi);
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        let f = eval(mid.exp())?;
        if sign * (f - goal) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = (0.5 * (lo + hi)).exp();
    let achieved = eval(kappa)?;
    Ok(Calibration {
        kappa,
        achieved,
        target: goal,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(c: &[u32]) -> Composition {
        Composition::new(c.to_vec()).unwrap()
    }

    #[test]
    fn dirichlet_values() {
        assert!((eppf_dirichlet(&comp(&[2]), 1.0) - 0.5).abs() < 1e-14);
        assert!((eppf_dirichlet(&comp(&[1, 1]), 1.0) - 0.5).abs() < 1e-14);
        assert!((eppf_dirichlet(&comp(&[3, 1]), 2.0) - 8.0 / 120.0).abs() < 1e-14);
    }

    #[test]
    fn single_element_is_certain() {
        let t = TruncationSpec::new(1e-6, 0.3).unwrap();
        for f in [Intensity::gamma(1.0).unwrap(), Intensity::bessel(2.0).unwrap()] {
            assert_eq!(eppf_eps(&f, &t, &comp(&[1])).unwrap(), 1.0);
        }
        assert_eq!(eppf_bessel(&comp(&[1]), 3.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn tie_probability_values() {
        // Reference values from an independent quadrature of the same integral
        // and a Monte Carlo check of E Σ P_j².
        let b = Intensity::bessel(100.0).unwrap();
        let p = pair_tie_prob(&b, &TruncationSpec::new(1e-6, 0.06).unwrap()).unwrap();
        assert!((p - 0.915_52).abs() < 1e-4, "{p}");
        let p = pair_tie_prob(&b, &TruncationSpec::new(1e-6, 1.56).unwrap()).unwrap();
        assert!((p - 0.373_13).abs() < 1e-4, "{p}");
        let g = Intensity::gamma(1.0).unwrap();
        let p = pair_tie_prob(&g, &TruncationSpec::new(1e-6, 1.0).unwrap()).unwrap();
        assert!((p - 0.481_122_64).abs() < 1e-6, "{p}");
    }

    #[test]
    fn small_kappa_concentrates_on_one_atom() {
        let b = Intensity::bessel(2.0).unwrap();
        let p = pair_tie_prob(&b, &TruncationSpec::new(1e-6, 1e-4).unwrap()).unwrap();
        assert!(p > 0.998, "{p}");
    }

    #[test]
    fn bessel_forms_agree() {
        // Hypergeometric form against the generic untruncated integral.
        for (c, omega, kappa) in [
            (vec![2, 2, 1], 2.0, 1.0),
            (vec![3, 1], 1.05, 0.5),
            (vec![2, 1], 1000.0, 0.98),
        ] {
            let c = comp(&c);
            let a = eppf_bessel(&c, omega, kappa).unwrap();
            let b = eppf_limit(&Intensity::bessel(omega).unwrap(), kappa, &c).unwrap();
            assert!(((a - b) / b).abs() < 1e-8, "{c} ω={omega}: {a} vs {b}");
        }
        let p = eppf_bessel(&comp(&[2, 2, 1]), 2.0, 1.0).unwrap();
        assert!((p - 0.008_161_690_877).abs() < 1e-10, "{p}");
    }

    #[test]
    fn limit_of_gamma_is_dirichlet() {
        let g = Intensity::gamma(1.7).unwrap();
        for c in [vec![2], vec![2, 1], vec![3, 1, 1]] {
            let c = comp(&c);
            let a = eppf_limit(&g, 0.8, &c).unwrap();
            assert!((a - eppf_dirichlet(&c, 0.8)).abs() < 1e-10);
        }
    }

    #[test]
    fn bounds_bracket_the_bessel_eppf() {
        let c = comp(&[2, 2, 1]);
        let p = eppf_bessel(&c, 2.0, 1.0).unwrap();
        let (lo, hi) = bessel_dirichlet_bounds(&c, 2.0, 1.0).unwrap();
        assert!(lo <= p && p <= hi, "{lo} <= {p} <= {hi}");
    }

    #[test]
    fn moments_arithmetic() {
        let m = moments_from_tie_prob(0.5, (0.5, 0.5, 0.5)).unwrap();
        assert!((m.var - 0.125).abs() < 1e-15);
        let m = moments_from_tie_prob(0.2, (0.3, 0.4, 0.0)).unwrap();
        assert!((m.cov + 0.024).abs() < 1e-15);
        assert!(moments_from_tie_prob(0.2, (0.3, 0.4, 0.35)).is_err());
    }

    #[test]
    fn partition_counting() {
        // Bell numbers.
        for (n, bell) in [(1, 1.0), (4, 15.0), (6, 203.0), (10, 115_975.0)] {
            let total: f64 = integer_partitions(n).iter().map(|p| set_partition_count(p)).sum();
            assert_eq!(total, bell);
        }
    }

    #[test]
    fn exact_kn_is_a_distribution() {
        let g = Intensity::gamma(1.0).unwrap();
        let d = prior_kn_exact(&g, &TruncationSpec::new(1e-6, 1.0).unwrap(), 5).unwrap();
        assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        let one = prior_kn_exact(&g, &TruncationSpec::new(1e-6, 1.0).unwrap(), 1).unwrap();
        assert_eq!(one.probs, vec![1.0]);
    }

    #[test]
    fn monte_carlo_kn_matches_exact() {
        let b = Intensity::bessel(1.5).unwrap();
        let t = TruncationSpec::new(1e-6, 0.7).unwrap();
        let exact = prior_kn_exact(&b, &t, 4).unwrap();
        let mc = prior_kn_monte_carlo(&b, &t, 4, 40_000, 5, Execution::Parallel).unwrap();
        for k in 0..4 {
            assert!(
                (exact.probs[k] - mc.probs[k]).abs() < 4.0 * mc.se[k] + 1e-12,
                "k={}: {} vs {}",
                k + 1,
                exact.probs[k],
                mc.probs[k]
            );
        }
    }

    #[test]
    fn monte_carlo_is_execution_independent() {
        let b = Intensity::bessel(3.0).unwrap();
        let t = TruncationSpec::new(1e-6, 1.0).unwrap();
        let a = prior_kn_monte_carlo(&b, &t, 30, 3000, 9, Execution::Sequential).unwrap();
        let c = prior_kn_monte_carlo(&b, &t, 30, 3000, 9, Execution::Parallel).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn calibration_round_trip() {
        let b = Intensity::bessel(1.05).unwrap();
        let c = calibrate_kappa(&b, 1e-6, CalibrationTarget::PairTie(0.5), Execution::Parallel).unwrap();
        let p = pair_tie_prob(&b, &TruncationSpec::new(1e-6, c.kappa).unwrap()).unwrap();
        assert!((p - 0.5).abs() < 0.02 * 0.5);
        assert!((c.kappa - 1.213_66).abs() < 1e-3, "{}", c.kappa);
    }
}
