//! Mixture kernels with their base measures and conjugate location updates.

mod gauss_nig;
mod lindep;

pub use gauss_nig::{GaussNig, NigLocation};
pub use lindep::{LinDep, LinLocation, VarianceMode};

use std::fmt::Debug;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::data::Dataset;
use crate::Result;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// ln N(y; mean, var). Returns NaN for a non-positive variance.
pub fn normal_ln_pdf(y: f64, mean: f64, var: f64) -> f64 {
    if !(var > 0.0) {
        return f64::NAN;
    }
    -LN_SQRT_2PI - 0.5 * var.ln() - 0.5 * (y - mean).powi(2) / var
}

/// Draw from the inverse gamma law with the given shape and scale.
pub(crate) fn inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    1.0 / Gamma::new(shape, 1.0 / scale)
        .expect("positive inverse-gamma parameters")
        .sample(rng)
}

/// A Gaussian-kernel mixture model: kernel f(y; τ[, x]), base measure P₀,
/// and exact draws from the cluster-wise location posterior.
///
/// `Global` carries parameters shared by every atom (for instance a common
/// kernel variance); models without any use `()`.
pub trait MixtureModel: Send + Sync {
    type Location: Clone + Debug + PartialEq + Send + Sync;
    type Global: Clone + Debug + PartialEq + Send + Sync;

    fn name(&self) -> &'static str;

    /// Rejects data whose shape the model cannot handle.
    fn check_data(&self, data: &Dataset) -> Result<()>;

    fn init_global(&self, data: &Dataset) -> Self::Global;

    /// ln f(y; τ, x).
    fn log_kernel(&self, y: f64, x: &[f64], loc: &Self::Location, global: &Self::Global) -> f64;

    /// Mean and variance of the kernel at covariates `x`.
    fn kernel_moments(&self, x: &[f64], loc: &Self::Location, global: &Self::Global) -> (f64, f64);

    /// One draw from P₀.
    fn sample_base<R: Rng + ?Sized>(&self, global: &Self::Global, rng: &mut R) -> Self::Location;

    /// Draw from ∝ Π_{i ∈ members} f(y_i; τ) P₀(dτ). `current` is the
    /// location before the update, used by models that update in blocks.
    fn sample_allocated<R: Rng + ?Sized>(
        &self,
        data: &Dataset,
        members: &[usize],
        current: &Self::Location,
        global: &Self::Global,
        rng: &mut R,
    ) -> Self::Location;

    /// Update of the shared parameters given allocations and atom locations.
    fn update_global<R: Rng + ?Sized>(
        &self,
        _data: &Dataset,
        _allocations: &[usize],
        _locations: &[Self::Location],
        global: &Self::Global,
        _rng: &mut R,
    ) -> Self::Global {
        global.clone()
    }

    fn location_columns(&self) -> Vec<String>;
    fn location_to_vec(&self, loc: &Self::Location) -> Vec<f64>;
    fn location_from_slice(&self, v: &[f64]) -> Result<Self::Location>;
    fn global_to_vec(&self, global: &Self::Global) -> Vec<f64>;
    fn global_from_slice(&self, v: &[f64]) -> Result<Self::Global>;
}
