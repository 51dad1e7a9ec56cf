use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson};

use super::intensity::{Intensity, TruncationSpec};
use super::sampling::JumpSampler;
use crate::{Error, Result};

/// Base probability measure P₀ on the location space.
pub trait BaseMeasure: Sync {
    type Point: Clone + Send + Sync;

    fn sample_point(&self, rng: &mut dyn RngCore) -> Self::Point;
}

/// Uniform law on (0, 1); P₀(B) is the length of B.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitUniform;

impl BaseMeasure for UnitUniform {
    type Point = f64;

    fn sample_point(&self, rng: &mut dyn RngCore) -> f64 {
        rng.random()
    }
}

/// One draw of the truncated measure: N_ε + 1 atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsRealization<L> {
    pub jumps: Vec<f64>,
    pub locations: Vec<L>,
    pub total_mass: f64,
    pub weights: Vec<f64>,
}

impl<L> EpsRealization<L> {
    pub fn new(jumps: Vec<f64>, locations: Vec<L>) -> Result<Self> {
        if jumps.is_empty() || jumps.len() != locations.len() {
            return Err(Error::domain(format!(
                "realization needs equal, non-zero numbers of jumps and locations ({} vs {})",
                jumps.len(),
                locations.len()
            )));
        }
        let total_mass: f64 = jumps.iter().sum();
        let weights = jumps.iter().map(|j| j / total_mass).collect();
        Ok(EpsRealization {
            jumps,
            locations,
            total_mass,
            weights,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.jumps.len()
    }

    /// Checks the structural invariants against threshold `epsilon`.
    pub fn validate(&self, epsilon: f64) -> Result<()> {
        let n = self.jumps.len();
        if self.locations.len() != n || self.weights.len() != n {
            return Err(Error::domain("realization fields have different lengths"));
        }
        if let Some(j) = self.jumps.iter().find(|&&j| !(j > epsilon)) {
            return Err(Error::domain(format!("jump {j} not above ε = {epsilon}")));
        }
        let total: f64 = self.jumps.iter().sum();
        if ((total - self.total_mass) / total).abs() > 1e-12 {
            return Err(Error::domain("total mass differs from the sum of jumps"));
        }
        let wsum: f64 = self.weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("weights sum to {wsum}")));
        }
        Ok(())
    }
}

/// Prior simulation of the truncated measure for fixed intensity and truncation.
#[derive(Debug, Clone)]
pub struct PriorSampler {
    tail_mass: f64,
    poisson: Option<Poisson<f64>>,
    jumps: JumpSampler,
}

impl PriorSampler {
    pub fn new(intensity: &Intensity, trunc: &TruncationSpec) -> Result<Self> {
        let tail_mass = intensity.tail_mass(trunc)?;
        let poisson = if tail_mass > 0.0 {
            Some(Poisson::new(tail_mass).map_err(|e| Error::domain(format!("Poisson({tail_mass}): {e}")))?)
        } else {
            None
        };
        Ok(PriorSampler {
            tail_mass,
            poisson,
            jumps: JumpSampler::new(intensity, trunc.epsilon, 0.0, 0)?,
        })
    }

    /// Λ_ε.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// N_ε + 1 iid jumps, with N_ε ~ Poisson(Λ_ε).
    pub fn sample_jumps<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.poisson.as_ref().map_or(0, |p| p.sample(rng) as usize);
        (0..=n).map(|_| self.jumps.sample(rng)).collect()
    }

    pub fn sample<B: BaseMeasure, R: RngCore>(&self, base: &B, rng: &mut R) -> EpsRealization<B::Point> {
        let jumps = self.sample_jumps(rng);
        let locations = (0..jumps.len()).map(|_| base.sample_point(rng)).collect();
        EpsRealization::new(jumps, locations).expect("at least one atom by construction")
    }
}

pub fn sample_prior_realization<B: BaseMeasure, R: RngCore>(
    intensity: &Intensity,
    trunc: &TruncationSpec,
    base: &B,
    rng: &mut R,
) -> Result<EpsRealization<B::Point>> {
    Ok(PriorSampler::new(intensity, trunc)?.sample(base, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gof::{chi_square_pvalue, poisson_bins};
    use crate::par::substream;

    #[test]
    fn atom_count_is_shifted_poisson() {
        let g = Intensity::bessel(1.05).unwrap();
        let t = TruncationSpec::new(1e-6, 0.11).unwrap();
        let ps = PriorSampler::new(&g, &t).unwrap();
        let mut rng = substream(21, 0);
        let counts: Vec<u64> = (0..100_000)
            .map(|_| ps.sample_jumps(&mut rng).len() as u64 - 1)
            .collect();
        let (obs, exp) = poisson_bins(&counts, ps.tail_mass());
        let p = chi_square_pvalue(&obs, &exp, 0).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn huge_threshold_gives_single_atom() {
        let g = Intensity::gamma(1.0).unwrap();
        let t = TruncationSpec::new(30.0, 1.0).unwrap();
        let ps = PriorSampler::new(&g, &t).unwrap();
        assert!(ps.tail_mass() < 1e-6);
        let mut rng = substream(22, 0);
        let r = ps.sample(&UnitUniform, &mut rng);
        assert_eq!(r.n_atoms(), 1);
        assert_eq!(r.weights, vec![1.0]);
        r.validate(30.0).unwrap();
    }

    #[test]
    fn mean_mass_of_half_line() {
        let g = Intensity::gamma(1.0).unwrap();
        let t = TruncationSpec::new(1e-6, 1.0).unwrap();
        let ps = PriorSampler::new(&g, &t).unwrap();
        let mut rng = substream(23, 0);
        let reps = 100_000;
        let xs: Vec<f64> = (0..reps)
            .map(|_| {
                let r = ps.sample(&UnitUniform, &mut rng);
                r.weights
                    .iter()
                    .zip(&r.locations)
                    .filter(|(_, &l)| l < 0.5)
                    .map(|(w, _)| w)
                    .sum()
            })
            .collect();
        let m = xs.iter().sum::<f64>() / reps as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps as f64 - 1.0)).sqrt();
        assert!((m - 0.5).abs() < 3.0 * sd / (reps as f64).sqrt());
    }
}
