//! Intensity families, jump samplers and prior simulation of the truncated
//! measure.

mod intensity;
mod realization;
mod sampling;
mod total_mass;

pub use intensity::{Intensity, TruncationSpec};
pub use realization::{sample_prior_realization, BaseMeasure, EpsRealization, PriorSampler, UnitUniform};
pub use sampling::{degraded_draws, sample_jump, JumpSampler};
pub use total_mass::{bessel_total_mass_sampler, BesselMassDensity, BesselTotalMass};
