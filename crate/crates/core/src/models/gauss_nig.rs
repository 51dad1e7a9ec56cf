use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{inv_gamma, normal_ln_pdf, MixtureModel};
use crate::data::Dataset;
use crate::{Error, Result};

/// Gaussian kernel with normal-inverse-gamma base measure:
/// σ² ~ inv-gamma(a, b), μ | σ² ~ N(m₀, σ²/κ₀).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussNig {
    pub kappa0: f64,
    pub a: f64,
    pub b: f64,
    pub m0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigLocation {
    pub mu: f64,
    pub sigma2: f64,
}

impl GaussNig {
    pub fn new(kappa0: f64, a: f64, b: f64, m0: f64) -> Result<Self> {
        if !(kappa0 > 0.0 && a > 0.0 && b > 0.0 && m0.is_finite()) {
            return Err(Error::domain(format!(
                "NIG needs κ₀, a, b > 0 and finite m₀, got κ₀={kappa0}, a={a}, b={b}, m₀={m0}"
            )));
        }
        Ok(GaussNig { kappa0, a, b, m0 })
    }

    /// Centres the base measure at the sample mean.
    pub fn centred_on(data: &Dataset, kappa0: f64, a: f64, b: f64) -> Result<Self> {
        let mean = data.y.iter().sum::<f64>() / data.len().max(1) as f64;
        Self::new(kappa0, a, b, mean)
    }

    /// Posterior NIG parameters (κₙ, mₙ, aₙ, bₙ) for the given responses.
    pub fn posterior<'a>(&self, ys: impl Iterator<Item = &'a f64>) -> (f64, f64, f64, f64) {
        let (mut n, mut sum, mut sumsq) = (0.0, 0.0, 0.0);
        for &y in ys {
            n += 1.0;
            sum += y;
            sumsq += y * y;
        }
        if n == 0.0 {
            return (self.kappa0, self.m0, self.a, self.b);
        }
        let ybar = sum / n;
        let ss = (sumsq - n * ybar * ybar).max(0.0);
        let kn = self.kappa0 + n;
        let mn = (self.kappa0 * self.m0 + sum) / kn;
        let an = self.a + 0.5 * n;
        let bn = self.b + 0.5 * ss + self.kappa0 * n * (ybar - self.m0).powi(2) / (2.0 * kn);
        (kn, mn, an, bn)
    }

    fn draw<R: Rng + ?Sized>(k: f64, m: f64, a: f64, b: f64, rng: &mut R) -> NigLocation {
        let sigma2 = inv_gamma(a, b, rng);
        let z: f64 = StandardNormal.sample(rng);
        NigLocation {
            mu: m + (sigma2 / k).sqrt() * z,
            sigma2,
        }
    }
}

impl MixtureModel for GaussNig {
    type Location = NigLocation;
    type Global = ();

    fn name(&self) -> &'static str {
        "gauss-nig"
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.is_empty() || data.y.iter().any(|y| !y.is_finite()) {
            return Err(Error::domain("data must be non-empty and finite"));
        }
        Ok(())
    }

    fn init_global(&self, _data: &Dataset) {}

    fn log_kernel(&self, y: f64, _x: &[f64], loc: &NigLocation, _g: &()) -> f64 {
        normal_ln_pdf(y, loc.mu, loc.sigma2)
    }

    fn kernel_moments(&self, _x: &[f64], loc: &NigLocation, _g: &()) -> (f64, f64) {
        (loc.mu, loc.sigma2)
    }

    fn sample_base<R: Rng + ?Sized>(&self, _g: &(), rng: &mut R) -> NigLocation {
        Self::draw(self.kappa0, self.m0, self.a, self.b, rng)
    }

    fn sample_allocated<R: Rng + ?Sized>(
        &self,
        data: &Dataset,
        members: &[usize],
        _current: &NigLocation,
        _g: &(),
        rng: &mut R,
    ) -> NigLocation {
        let (k, m, a, b) = self.posterior(members.iter().map(|&i| &data.y[i]));
        Self::draw(k, m, a, b, rng)
    }

    fn location_columns(&self) -> Vec<String> {
        vec!["mu".into(), "sigma2".into()]
    }

    fn location_to_vec(&self, loc: &NigLocation) -> Vec<f64> {
        vec![loc.mu, loc.sigma2]
    }

    fn location_from_slice(&self, v: &[f64]) -> Result<NigLocation> {
        match v {
            [mu, sigma2] if *sigma2 > 0.0 => Ok(NigLocation {
                mu: *mu,
                sigma2: *sigma2,
            }),
            _ => Err(Error::domain(format!("bad NIG location {v:?}"))),
        }
    }

    fn global_to_vec(&self, _g: &()) -> Vec<f64> {
        Vec::new()
    }

    fn global_from_slice(&self, v: &[f64]) -> Result<()> {
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::domain("NIG model has no global parameters"))
        }
    }
}
