use crate::specfun::{ln_bessel_i_scaled, ln_exp1, ln_gamma, ln_integral_exp, ln_upper_gamma, QuadControl};
use crate::{Error, Result};

/// Lévy intensity ρ(s) of a homogeneous CRM, without the κ multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intensity {
    /// ρ(s) = s⁻¹ e^{−ωs}.
    Gamma { omega: f64 },
    /// ρ(s) = s^{−1−σ} e^{−ωs} / Γ(1−σ); σ = 0 is the gamma process.
    GenGamma { sigma: f64, omega: f64 },
    /// ρ(s) = s⁻¹ e^{−ωs} I₀(s), ω ≥ 1.
    Bessel { omega: f64 },
}

/// Jump threshold ε and total-mass multiplier κ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    pub epsilon: f64,
    pub kappa: f64,
}

impl TruncationSpec {
    pub fn new(epsilon: f64, kappa: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::domain(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be positive and finite, got {kappa}")));
        }
        Ok(TruncationSpec { epsilon, kappa })
    }
}

// Above this argument the Bessel superposition series converges too slowly
// and the moment is computed by quadrature instead.
const BESSEL_SERIES_MAX_Z: f64 = 0.98;
const BESSEL_SERIES_MAX_TERMS: usize = 100_000;

impl Intensity {
    pub fn gamma(omega: f64) -> Result<Self> {
        Intensity::Gamma { omega }.checked()
    }

    pub fn gen_gamma(sigma: f64, omega: f64) -> Result<Self> {
        Intensity::GenGamma { sigma, omega }.checked()
    }

    pub fn bessel(omega: f64) -> Result<Self> {
        Intensity::Bessel { omega }.checked()
    }

    pub fn omega(&self) -> f64 {
        match *self {
            Intensity::Gamma { omega } | Intensity::GenGamma { omega, .. } | Intensity::Bessel { omega } => omega,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Intensity::Gamma { .. } => "gamma",
            Intensity::GenGamma { .. } => "gengamma",
            Intensity::Bessel { .. } => "bessel",
        }
    }

    fn checked(self) -> Result<Self> {
        self.validate_params()?;
        self.check_regularity()?;
        Ok(self)
    }

    fn validate_params(&self) -> Result<()> {
        match *self {
            Intensity::Gamma { omega } if omega > 0.0 && omega.is_finite() => Ok(()),
            Intensity::GenGamma { sigma, omega } if (0.0..1.0).contains(&sigma) && omega > 0.0 && omega.is_finite() => {
                Ok(())
            }
            Intensity::Bessel { omega } if omega >= 1.0 && omega.is_finite() => Ok(()),
            other => Err(Error::domain(format!(
                "invalid intensity parameters {other:?} (gamma: ω>0; gengamma: 0≤σ<1, ω>0; bessel: ω≥1)"
            ))),
        }
    }

    /// Numerical check that ∫min(1,s)ρ(s)ds < ∞ while ∫ρ(s)ds diverges at 0.
    pub fn check_regularity(&self) -> Result<()> {
        let ctrl = QuadControl::default();
        let ln_min = ln_integral_exp(
            |t| self.ln_density(t.exp()) + t + t.min(0.0),
            f64::NEG_INFINITY,
            0.0,
            ctrl,
        )?;
        if !ln_min.is_finite() {
            return Err(Error::domain(format!("{self:?}: ∫min(1,s)ρ(s)ds is not finite")));
        }
        let near = self.ln_tilted_moment(1.0, 1e-200, 0.0, 0)?;
        let far = self.ln_tilted_moment(1.0, 1e-100, 0.0, 0)?;
        if !(near > far && near.exp() > 100.0) {
            return Err(Error::domain(format!("{self:?}: tail mass does not diverge as ε → 0")));
        }
        Ok(())
    }

    /// ln ρ(s) for s > 0.
    pub fn ln_density(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Intensity::Gamma { omega } => -s.ln() - omega * s,
            Intensity::GenGamma { sigma, omega } => -(1.0 + sigma) * s.ln() - omega * s - ln_gamma(1.0 - sigma),
            Intensity::Bessel { omega } => {
                -s.ln() - (omega - 1.0) * s + ln_bessel_i_scaled(0.0, s).unwrap_or(f64::NEG_INFINITY)
            }
        }
    }

    pub fn density(&self, s: f64) -> f64 {
        self.ln_density(s).exp()
    }

    /// ln κ∫_ε^∞ s^m e^{−us} ρ(s) ds.
    ///
    /// `m = 0` gives ln Λ_{ε,u}; `epsilon = 0` is allowed for m ≥ 1 and gives
    /// the moments of the untruncated measure.
    pub fn ln_tilted_moment(&self, kappa: f64, epsilon: f64, u: f64, m: u32) -> Result<f64> {
        if !(epsilon >= 0.0) || !(u >= 0.0) || !(kappa > 0.0) {
            return Err(Error::domain(format!(
                "tilted moment needs κ > 0, ε ≥ 0, u ≥ 0, got κ={kappa}, ε={epsilon}, u={u}"
            )));
        }
        if epsilon == 0.0 && m == 0 {
            return Err(Error::domain("tail mass diverges at ε = 0"));
        }
        if epsilon.is_infinite() {
            return Ok(f64::NEG_INFINITY);
        }
        let lambda = self.omega() + u;
        let x0 = lambda * epsilon;
        let core = match *self {
            Intensity::Gamma { .. } => {
                if m == 0 {
                    ln_exp1(x0)
                } else {
                    ln_upper_gamma(m as f64, x0)? - m as f64 * lambda.ln()
                }
            }
            Intensity::GenGamma { sigma, .. } => {
                let a = m as f64 - sigma;
                if a == 0.0 {
                    ln_exp1(x0)
                } else {
                    ln_upper_gamma(a, x0)? - a * lambda.ln() - ln_gamma(1.0 - sigma)
                }
            }
            Intensity::Bessel { .. } => {
                if lambda == 1.0 && m >= 1 {
                    return Err(Error::domain(format!(
                        "Bessel moment of order {m} diverges at ω + u = 1"
                    )));
                }
                match bessel_series(lambda, x0, m, |_, _| {}) {
                    Some(v) => v,
                    None => return self.ln_tilted_moment_quadrature(kappa, epsilon, u, m),
                }
            }
        };
        Ok(kappa.ln() + core)
    }

    /// Same integral as [`Intensity::ln_tilted_moment`], by quadrature of the
    /// defining integral in log s. Used as an oracle and as a fallback.
    pub fn ln_tilted_moment_quadrature(&self, kappa: f64, epsilon: f64, u: f64, m: u32) -> Result<f64> {
        if epsilon == 0.0 && m == 0 {
            return Err(Error::domain("tail mass diverges at ε = 0"));
        }
        let lo = if epsilon > 0.0 { epsilon.ln() } else { f64::NEG_INFINITY };
        let mf = m as f64;
        let g = |t: f64| {
            let s = t.exp();
            (mf + 1.0) * t - u * s + self.ln_density(s)
        };
        // Split near the mode of s^m e^{−us}ρ(s), whose tail behaves like a gamma density.
        let lambda = self.omega() + u;
        let (shape, rate) = match *self {
            Intensity::Gamma { .. } => (mf, lambda),
            Intensity::GenGamma { sigma, .. } => (mf - sigma, lambda),
            Intensity::Bessel { .. } => (mf - 0.5, lambda - 1.0),
        };
        let peak = if rate > 0.0 { (shape.max(1.0) / rate).ln() } else { 0.0 };
        let ctrl = QuadControl {
            rel_tol: 1e-12,
            max_subdivisions: 4000,
            ..QuadControl::default()
        };
        Ok(kappa.ln() + ln_integral_exp(g, lo, peak, ctrl)?)
    }

    pub fn tail_mass(&self, trunc: &TruncationSpec) -> Result<f64> {
        self.tilted_tail_mass(trunc, 0.0)
    }

    /// Λ_{ε,u} = κ∫_ε^∞ e^{−us}ρ(s)ds.
    pub fn tilted_tail_mass(&self, trunc: &TruncationSpec, u: f64) -> Result<f64> {
        Ok(self.ln_tilted_moment(trunc.kappa, trunc.epsilon, u, 0)?.exp())
    }

    pub fn tilted_moment(&self, trunc: &TruncationSpec, u: f64, m: u32) -> Result<f64> {
        Ok(self.ln_tilted_moment(trunc.kappa, trunc.epsilon, u, m)?.exp())
    }

    /// ψ(λ) = κ∫₀^∞(1 − e^{−λs})ρ(s)ds of the untruncated measure.
    pub fn laplace_exponent(&self, kappa: f64, lam: f64) -> Result<f64> {
        if !(lam >= 0.0) {
            return Err(Error::domain(format!("laplace exponent needs λ >= 0, got {lam}")));
        }
        Ok(match *self {
            Intensity::Gamma { omega } => kappa * (lam / omega).ln_1p(),
            Intensity::GenGamma { sigma, omega } => {
                if sigma == 0.0 {
                    kappa * (lam / omega).ln_1p()
                } else {
                    // κ ω^σ ((1 + λ/ω)^σ − 1)/σ
                    kappa * omega.powf(sigma) * (sigma * (lam / omega).ln_1p()).exp_m1() / sigma
                }
            }
            Intensity::Bessel { omega } => {
                let a = omega + lam;
                kappa * ((a + (a * a - 1.0).sqrt()) / (omega + (omega * omega - 1.0).sqrt())).ln()
            }
        })
    }

    /// ψ(λ) by quadrature of its defining integral.
    pub fn laplace_exponent_quadrature(&self, kappa: f64, lam: f64) -> Result<f64> {
        if lam == 0.0 {
            return Ok(0.0);
        }
        let g = |t: f64| {
            let s = t.exp();
            t + (-(-lam * s).exp_m1()).ln() + self.ln_density(s)
        };
        let ctrl = QuadControl {
            rel_tol: 1e-12,
            max_subdivisions: 4000,
            ..QuadControl::default()
        };
        Ok(kappa * ln_integral_exp(g, f64::NEG_INFINITY, -(self.omega() + lam).ln(), ctrl)?.exp())
    }

    /// E(T) of the untruncated total mass per unit κ, when finite.
    pub fn mean_total_mass(&self, kappa: f64) -> f64 {
        match *self {
            Intensity::Gamma { omega } => kappa / omega,
            Intensity::GenGamma { sigma, omega } => kappa * omega.powf(sigma - 1.0),
            Intensity::Bessel { omega } => {
                if omega > 1.0 {
                    kappa / (omega * omega - 1.0).sqrt()
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Sums κ⁻¹ × moment for the Bessel intensity through its superposition
/// s⁻¹e^{−ωs}I₀(s) = Σ_k c_k s^{2k−1} e^{−ωs}, c_k = 1/(4^k (k!)²).
///
/// Term k equals c_k Γ(2k+m, x₀)/λ^{2k+m}; `visit(a, ln_term)` sees every
/// term with its gamma shape a = 2k+m. Returns `None` when the series is too
/// slow to converge (1/λ² near 1) so the caller can integrate instead.
pub(crate) fn bessel_series(lambda: f64, x0: f64, m: u32, mut visit: impl FnMut(f64, f64)) -> Option<f64> {
    let z = 1.0 / (lambda * lambda);
    if z > BESSEL_SERIES_MAX_Z {
        return None;
    }
    let ln_lambda = lambda.ln();
    let ln_x0 = if x0 > 0.0 { x0.ln() } else { f64::NEG_INFINITY };
    let mut ln_sum = f64::NEG_INFINITY;
    let add = |ln_sum: &mut f64, v: f64| {
        *ln_sum = if *ln_sum >= v {
            *ln_sum + (v - *ln_sum).exp().ln_1p()
        } else {
            v + (*ln_sum - v).exp().ln_1p()
        };
    };

    let (mut k, mut a, mut ln_tilde) = if m == 0 {
        if x0 <= 0.0 {
            return None;
        }
        let t0 = ln_exp1(x0);
        visit(0.0, t0);
        add(&mut ln_sum, t0);
        // k = 1: c₁ Γ(2)/λ² before truncation
        (1u64, 2.0f64, -(4.0f64.ln()) - 2.0 * ln_lambda)
    } else {
        let mf = m as f64;
        (0u64, mf, ln_gamma(mf) - mf * ln_lambda)
    };
    // ln Q(a, x₀), regularized upper incomplete gamma at the current shape.
    let mut ln_q = if x0 > 0.0 {
        ln_upper_gamma(a, x0).ok()? - ln_gamma(a)
    } else {
        0.0
    };
    // ln Γ(a + 1), kept by recurrence.
    let mut ln_gamma_a1 = ln_gamma(a + 1.0);

    for _ in 0..BESSEL_SERIES_MAX_TERMS {
        let term = ln_tilde + ln_q.min(0.0);
        visit(a, term);
        add(&mut ln_sum, term);

        // Bound on the ratio of successive true terms, using Γ(a+1,x)/Γ(a,x) ≤ a + x + 1.
        let kf = k as f64;
        let bound = (a + x0 + 1.0) * (a + x0 + 2.0) / (4.0 * (kf + 1.0) * (kf + 1.0)) * z;
        let r = bound.max(z);
        if r < 1.0 && term + (r / (1.0 - r)).ln() < ln_sum + (1e-16f64).ln() {
            return Some(ln_sum);
        }

        ln_tilde += (a * (a + 1.0)).ln() - (4.0 * (kf + 1.0) * (kf + 1.0)).ln() - 2.0 * ln_lambda;
        if x0 > 0.0 {
            // Q(a+1,x) = Q(a,x) + x^a e^{−x}/Γ(a+1), applied twice.
            let inc1 = a * ln_x0 - x0 - ln_gamma_a1;
            let inc2 = (a + 1.0) * ln_x0 - x0 - (ln_gamma_a1 + (a + 1.0).ln());
            let mut q = ln_q;
            for inc in [inc1, inc2] {
                q = if q >= inc {
                    q + (inc - q).exp().ln_1p()
                } else {
                    inc + (q - inc).exp().ln_1p()
                };
            }
            ln_q = q;
        }
        ln_gamma_a1 += (a + 1.0).ln() + (a + 2.0).ln();
        a += 2.0;
        k += 1;
    }
    None
}
