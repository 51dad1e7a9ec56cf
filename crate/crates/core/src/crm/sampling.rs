use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use super::intensity::{bessel_series, Intensity};
use crate::specfun::ln_upper_gamma;
use crate::{Error, Result};

static DEGRADED_DRAWS: AtomicU64 = AtomicU64::new(0);

/// Number of jump draws, process-wide, that fell back to grid inversion.
pub fn degraded_draws() -> u64 {
    DEGRADED_DRAWS.load(Ordering::Relaxed)
}

const MAX_ATTEMPTS: usize = 10_000;

/// Sampler for the density ∝ s^power e^{−us} ρ(s) on (ε, ∞).
///
/// Construction does the per-target work (mixture weights for the Bessel
/// family, grid for the fallback) so repeated draws are cheap.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    lambda: f64,
    x0: f64,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    /// x^{a−1}e^{−x} on (x0, ∞) in x = λs.
    Single(TruncGamma),
    /// Mixture of truncated gammas with cumulative weights.
    Mixture { comps: Vec<TruncGamma>, cum: Vec<f64> },
    /// Inverse CDF over a grid in log s.
    Grid { ln_s: Vec<f64>, cdf: Vec<f64> },
}

impl JumpSampler {
    pub fn new(intensity: &Intensity, epsilon: f64, u: f64, power: u32) -> Result<Self> {
        if !(epsilon > 0.0) || !(u >= 0.0) {
            return Err(Error::domain(format!(
                "jump sampler needs ε > 0, u ≥ 0, got ε={epsilon}, u={u}"
            )));
        }
        let lambda = intensity.omega() + u;
        let x0 = lambda * epsilon;
        let kind = match *intensity {
            Intensity::Gamma { .. } => Kind::Single(TruncGamma::new(power as f64, x0)?),
            Intensity::GenGamma { sigma, .. } => Kind::Single(TruncGamma::new(power as f64 - sigma, x0)?),
            Intensity::Bessel { .. } => {
                let mut terms = Vec::new();
                match bessel_series(lambda, x0, power, |a, ln_w| terms.push((a, ln_w))) {
                    Some(ln_total) => {
                        let mut comps = Vec::with_capacity(terms.len());
                        let mut cum = Vec::with_capacity(terms.len());
                        let mut acc = 0.0;
                        for (a, ln_w) in terms {
                            let w = (ln_w - ln_total).exp();
                            if w == 0.0 && !comps.is_empty() {
                                continue;
                            }
                            acc += w;
                            comps.push(TruncGamma::new(a, x0)?);
                            cum.push(acc);
                        }
                        Kind::Mixture { comps, cum }
                    }
                    None => grid(intensity, epsilon, u, power)?,
                }
            }
        };
        Ok(JumpSampler { lambda, x0, kind })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = match &self.kind {
            Kind::Single(g) => g.sample(rng),
            Kind::Mixture { comps, cum } => {
                let v = rng.random::<f64>() * cum[cum.len() - 1];
                let i = cum.partition_point(|&c| c < v).min(comps.len() - 1);
                comps[i].sample(rng)
            }
            Kind::Grid { ln_s, cdf } => return invert_grid(ln_s, cdf, rng),
        };
        let s = x / self.lambda;
        // Rounding in x/λ could land a hair below ε.
        s.max(self.x0 / self.lambda)
    }
}

/// One draw from ∝ s^power e^{−us}ρ(s) on (ε, ∞).
pub fn sample_jump<R: Rng + ?Sized>(
    intensity: &Intensity,
    epsilon: f64,
    u: f64,
    power: u32,
    rng: &mut R,
) -> Result<f64> {
    Ok(JumpSampler::new(intensity, epsilon, u, power)?.sample(rng))
}

/// Density ∝ x^{a−1}e^{−x} restricted to (x0, ∞).
#[derive(Debug, Clone)]
struct TruncGamma {
    a: f64,
    x0: f64,
    method: Method,
}

#[derive(Debug, Clone)]
enum Method {
    ShiftedExp,
    /// Gamma(a,1) draws rejected below x0.
    Reject(Gamma<f64>),
    /// Exponential envelope with rate b tangent at x0.
    ExpTail {
        b: f64,
    },
    /// x0 ≥ 1, a < 1: x0 + Exp(1) with acceptance (x/x0)^{a−1}.
    PowerTail,
    /// x0 < 1, a < 1: split at 1; `p_low` is the target mass of (x0, 1).
    TwoRegion {
        p_low: f64,
        ln_x0: f64,
        em1: f64,
    },
}

impl TruncGamma {
    fn new(a: f64, x0: f64) -> Result<Self> {
        if !(x0 >= 0.0) || (a <= 0.0 && x0 == 0.0) {
            return Err(Error::domain(format!(
                "truncated gamma with a={a}, x0={x0} is not normalizable"
            )));
        }
        let method = if a == 1.0 {
            Method::ShiftedExp
        } else if a > 1.0 {
            if x0 <= a - 1.0 + a.sqrt() {
                Method::Reject(Gamma::new(a, 1.0).map_err(|e| Error::domain(e.to_string()))?)
            } else {
                Method::ExpTail {
                    b: 1.0 - (a - 1.0) / x0,
                }
            }
        } else if x0 >= 1.0 {
            Method::PowerTail
        } else {
            let ln_lo = ln_upper_gamma(a, x0)?;
            let ln_hi = ln_upper_gamma(a, 1.0)?;
            let p_low = -(ln_hi - ln_lo).exp_m1();
            let ln_x0 = x0.ln();
            Method::TwoRegion {
                p_low,
                ln_x0,
                em1: (-a * ln_x0).exp_m1(),
            }
        };
        Ok(TruncGamma { a, x0, method })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, x0) = (self.a, self.x0);
        for _ in 0..MAX_ATTEMPTS {
            match &self.method {
                Method::ShiftedExp => return x0 + Distribution::<f64>::sample(&Exp1, rng),
                Method::Reject(g) => {
                    let x = g.sample(rng);
                    if x > x0 {
                        return x;
                    }
                }
                Method::ExpTail { b } => {
                    let e: f64 = Exp1.sample(rng);
                    let x = x0 + e / b;
                    let ln_acc = (a - 1.0) * (x / x0).ln() - (1.0 - b) * (x - x0);
                    if rng.random::<f64>().ln() < ln_acc {
                        return x;
                    }
                }
                Method::PowerTail => {
                    let e: f64 = Exp1.sample(rng);
                    let x = x0 + e;
                    if rng.random::<f64>().ln() < (a - 1.0) * (x / x0).ln() {
                        return x;
                    }
                }
                Method::TwoRegion { p_low, ln_x0, em1 } => {
                    // The region is chosen once; rejection then loops inside it.
                    return if rng.random::<f64>() < *p_low {
                        self.sample_low(*ln_x0, *em1, rng)
                    } else {
                        self.sample_high(rng)
                    };
                }
            }
        }
        DEGRADED_DRAWS.fetch_add(1, Ordering::Relaxed);
        let (ln_x, cdf) = trunc_gamma_grid(a, x0);
        invert_grid(&ln_x, &cdf, rng)
    }

    // Envelope x^{a−1} on (x0, 1), accepted with probability e^{−(x−x0)}.
    fn sample_low<R: Rng + ?Sized>(&self, ln_x0: f64, em1: f64, rng: &mut R) -> f64 {
        let a = self.a;
        for _ in 0..MAX_ATTEMPTS {
            let v: f64 = rng.random();
            // Inverse CDF of x^{a−1} on (x0, 1), written to survive a → 0.
            let ln_x = if a == 0.0 {
                ln_x0 * (1.0 - v)
            } else {
                ln_x0 + (v * em1).ln_1p() / a
            };
            let x = ln_x.exp().clamp(self.x0, 1.0);
            if rng.random::<f64>() < (-(x - self.x0)).exp() {
                return x;
            }
        }
        DEGRADED_DRAWS.fetch_add(1, Ordering::Relaxed);
        let (ln_x, cdf) = trunc_gamma_grid(a, self.x0);
        invert_grid(&ln_x, &cdf, rng).min(1.0)
    }

    // Envelope 1 + Exp(1), accepted with probability x^{a−1}.
    fn sample_high<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        for _ in 0..MAX_ATTEMPTS {
            let e: f64 = Exp1.sample(rng);
            let x = 1.0 + e;
            if rng.random::<f64>().ln() < (self.a - 1.0) * x.ln() {
                return x;
            }
        }
        DEGRADED_DRAWS.fetch_add(1, Ordering::Relaxed);
        let (ln_x, cdf) = trunc_gamma_grid(self.a, 1.0);
        invert_grid(&ln_x, &cdf, rng)
    }
}

fn trunc_gamma_grid(a: f64, x0: f64) -> (Vec<f64>, Vec<f64>) {
    build_grid(
        |ln_x| a * ln_x - ln_x.exp(),
        x0.ln(),
        (a.max(1.0) + 60.0 + 10.0 * a.sqrt()).max(2.0 * x0).ln(),
    )
}

fn grid(intensity: &Intensity, epsilon: f64, u: f64, power: u32) -> Result<Kind> {
    DEGRADED_DRAWS.fetch_add(1, Ordering::Relaxed);
    let p = power as f64;
    let f = |t: f64| {
        let s = t.exp();
        (p + 1.0) * t - u * s + intensity.ln_density(s)
    };
    // Decay is at least like e^{−(ω+u−1)s} s^{p−1/2}; search outward for a negligible value.
    let lo = epsilon.ln();
    let mut hi = lo.max(0.0) + 1.0;
    let peak = (0..400)
        .map(|i| f(lo + 0.5 * i as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    while f(hi) > peak - 45.0 && hi < 700.0 {
        hi += 1.0;
    }
    let (ln_s, cdf) = build_grid(f, lo, hi);
    Ok(Kind::Grid { ln_s, cdf })
}

// Adaptive grid in log x: bisect any cell whose endpoint log densities
// differ by more than 0.05, then accumulate trapezoids of density × x.
fn build_grid(ln_f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let n0 = 512;
    let mut pts: Vec<(f64, f64)> = (0..=n0)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / n0 as f64;
            (t, ln_f(t))
        })
        .collect();
    for _ in 0..6 {
        let mut refined = Vec::with_capacity(pts.len() * 2);
        let mut changed = false;
        for w in pts.windows(2) {
            refined.push(w[0]);
            if (w[1].1 - w[0].1).abs() > 0.05 && w[1].0 - w[0].0 > 1e-9 {
                let t = 0.5 * (w[0].0 + w[1].0);
                refined.push((t, ln_f(t)));
                changed = true;
            }
        }
        refined.push(*pts.last().unwrap());
        pts = refined;
        if !changed {
            break;
        }
    }
    let top = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut cdf = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for w in pts.windows(2) {
        let f0 = (w[0].1 - top).exp();
        let f1 = (w[1].1 - top).exp();
        acc += 0.5 * (f0 + f1) * (w[1].0 - w[0].0);
        cdf.push(acc);
    }
    for c in cdf.iter_mut() {
        *c /= acc;
    }
    (pts.into_iter().map(|p| p.0).collect(), cdf)
}

fn invert_grid<R: Rng + ?Sized>(ln_x: &[f64], cdf: &[f64], rng: &mut R) -> f64 {
    let v: f64 = rng.random();
    let i = cdf.partition_point(|&c| c < v).clamp(1, cdf.len() - 1);
    let (c0, c1) = (cdf[i - 1], cdf[i]);
    let w = if c1 > c0 { (v - c0) / (c1 - c0) } else { 0.5 };
    (ln_x[i - 1] + w * (ln_x[i] - ln_x[i - 1])).exp()
}
