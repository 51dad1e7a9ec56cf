use rand::Rng;
use rand_distr::{Distribution, Gamma, Geometric, Poisson};

use crate::specfun::{ln_bessel_i_scaled, ln_gamma, quad, QuadControl};
use crate::{Error, Result};

const TABLE_LEN: usize = 64;

/// Exact sampler for the total mass T of the untruncated Bessel CRM.
///
/// T is a gamma(κ, ω) variable plus the jumps of the intensity
/// κ Σ_{m≥1} c_m s^{2m−1} e^{−ωs}, c_m = 1/(4^m (m!)²). The number of those
/// jumps is Poisson with the closed-form rate κ ln(2/(1 + √(1 − ω⁻²))); each
/// picks its index m from the normalized rates and is then gamma(2m, ω).
#[derive(Debug, Clone)]
pub struct BesselTotalMass {
    omega: f64,
    base: Gamma<f64>,
    extra: Option<Poisson<f64>>,
    z: f64,
    // Cumulative unnormalized index pmf for m = 1..=TABLE_LEN, then the tail mass.
    cum: Vec<f64>,
    total: f64,
}

// ln of q_m = C(2m,m)/(2m 4^m) z^m without the z^m factor.
fn ln_q_base(m: u64) -> f64 {
    let mf = m as f64;
    ln_gamma(2.0 * mf + 1.0) - 2.0 * ln_gamma(mf + 1.0) - mf * 4.0f64.ln() - (2.0 * mf).ln()
}

impl BesselTotalMass {
    pub fn new(omega: f64, kappa: f64) -> Result<Self> {
        if !(omega >= 1.0 && omega.is_finite()) || !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::domain(format!(
                "Bessel total mass needs ω ≥ 1, κ > 0, got ω={omega}, κ={kappa}"
            )));
        }
        let z = 1.0 / (omega * omega);
        let total = (2.0 / (1.0 + (1.0 - z).sqrt())).ln();
        let ln_z = z.ln();
        let mut cum = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0;
        for m in 1..=TABLE_LEN as u64 {
            acc += (ln_q_base(m) + m as f64 * ln_z).exp();
            cum.push(acc);
        }
        let base = Gamma::new(kappa, 1.0 / omega).map_err(|e| Error::domain(e.to_string()))?;
        let rate = kappa * total;
        let extra = if rate > 0.0 {
            Some(Poisson::new(rate).map_err(|e| Error::domain(e.to_string()))?)
        } else {
            None
        };
        Ok(BesselTotalMass {
            omega,
            base,
            extra,
            z,
            cum,
            total: total.max(acc),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut t = self.base.sample(rng);
        let n = self.extra.as_ref().map_or(0, |p| p.sample(rng) as u64);
        for _ in 0..n {
            let m = self.sample_index(rng);
            let g = Gamma::new(2.0 * m as f64, 1.0 / self.omega).expect("valid shape");
            t += g.sample(rng);
        }
        t
    }

    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let v = rng.random::<f64>() * self.total;
        if v < self.cum[TABLE_LEN - 1] {
            return self.cum.partition_point(|&c| c < v) as u64 + 1;
        }
        self.sample_tail(rng)
    }

    // Exact draw of m > TABLE_LEN from q_m ∝ C(2m,m)/(2m 4^m) z^m.
    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let m0 = TABLE_LEN as u64 + 1;
        if self.z <= 0.99 {
            // Geometric proposal ∝ z^m; the remaining factor decreases in m.
            let geo = Geometric::new(1.0 - self.z).expect("0 < 1 - z <= 1");
            let top = ln_q_base(m0);
            loop {
                let m = m0 + geo.sample(rng);
                if rng.random::<f64>().ln() < ln_q_base(m) - top {
                    return m;
                }
            }
        }
        // Discretized Pareto(1/2) proposal; C(2m,m)/4^m ≤ 1/√(πm) bounds the ratio.
        let a = m0 as f64;
        let bound = ((a + 1.0) / a).powf(1.5) / (std::f64::consts::PI.sqrt() * a.sqrt());
        loop {
            let u: f64 = rng.random();
            let x = a / (u * u);
            if !x.is_finite() || x > 1e15 {
                continue;
            }
            let m = x.floor() as u64;
            let mf = m as f64;
            let ln_prop = a.sqrt().ln() + (mf.powf(-0.5) - (mf + 1.0).powf(-0.5)).ln();
            let ln_target = ln_q_base(m) + mf * self.z.ln();
            if rng.random::<f64>().ln() < ln_target - ln_prop - bound.ln() {
                return m;
            }
        }
    }
}

/// One draw of the total mass of the Bessel CRM.
pub fn bessel_total_mass_sampler<R: Rng + ?Sized>(omega: f64, kappa: f64, rng: &mut R) -> Result<f64> {
    Ok(BesselTotalMass::new(omega, kappa)?.sample(rng))
}

/// Law of the Bessel total mass,
/// f_T(t) = κ (ω + √(ω²−1))^κ e^{−ωt} I_κ(t)/t.
#[derive(Debug, Clone, Copy)]
pub struct BesselMassDensity {
    pub omega: f64,
    pub kappa: f64,
}

impl BesselMassDensity {
    fn ln_const(&self) -> f64 {
        self.kappa.ln() + self.kappa * (self.omega + (self.omega * self.omega - 1.0).sqrt()).ln()
    }

    pub fn ln_pdf(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.ln_const() - (self.omega - 1.0) * t + ln_bessel_i_scaled(self.kappa, t).unwrap_or(f64::NEG_INFINITY)
            - t.ln()
    }

    // F(t) for t → 0 from I_κ(t) ≈ (t/2)^κ/Γ(κ+1).
    fn small_cdf(&self, t: f64) -> f64 {
        (self.ln_const() - self.kappa.ln() + self.kappa * (0.5 * t).ln() - ln_gamma(self.kappa + 1.0)).exp()
    }

    /// CDF at each point of an ascending slice, by quadrature in log t.
    pub fn cdf_sorted(&self, xs: &[f64]) -> Result<Vec<f64>> {
        if xs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("cdf_sorted needs ascending input"));
        }
        let t_lo: f64 = 1e-9;
        let g = |tau: f64| {
            let t = tau.exp();
            (self.ln_pdf(t) + tau).exp()
        };
        let ctrl = QuadControl {
            rel_tol: 1e-12,
            abs_tol: 1e-15,
            max_subdivisions: 200,
        };
        let mut out = Vec::with_capacity(xs.len());
        let mut tau_prev = t_lo.ln();
        let mut acc = self.small_cdf(t_lo);
        for &x in xs {
            if x <= t_lo {
                out.push(self.small_cdf(x.max(0.0)));
                continue;
            }
            let tau = x.ln();
            // Integrate in steps of at most 0.25 in log t to keep every piece smooth.
            while tau - tau_prev > 0.25 {
                acc += quad(g, tau_prev, tau_prev + 0.25, ctrl)?.value;
                tau_prev += 0.25;
            }
            if tau > tau_prev {
                acc += quad(g, tau_prev, tau, ctrl)?.value;
                tau_prev = tau;
            }
            out.push(acc.min(1.0));
        }
        Ok(out)
    }
}
