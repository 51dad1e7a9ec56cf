//! Truncated normalized completely random measures (ε-NormCRM) for Bayesian
//! mixture modelling.
//!
//! The crate keeps only the Poisson jumps of a homogeneous CRM that exceed a
//! threshold `ε`, plus one extra jump, and normalizes. On top of that finite
//! random probability it provides:
//!
//! * special functions and quadrature ([`specfun`]),
//! * intensity families, jump samplers and prior simulation ([`crm`]),
//! * eppf evaluation, prior moments, `K_n` laws and κ calibration ([`eppf`]),
//! * a blocked Gibbs sampler ([`gibbs`]) for the kernels in [`models`],
//! * predictive indexes and Binder clustering ([`diagnostics`]).
//!
//! Monte Carlo loops run on rayon when the `parallel` feature is enabled and
//! fall back to plain iterators otherwise; see [`par::Execution`].

// `!(x > 0.0)` rejects NaN as well; series coefficients are kept as published.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod archive;
pub mod crm;
pub mod data;
pub mod diagnostics;
pub mod eppf;
pub mod error;
pub mod gibbs;
pub mod gof;
pub mod models;
pub mod par;
pub mod specfun;

pub use error::{Error, Result};
