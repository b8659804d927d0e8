//! Long-horizon sensitivities of diffusion-based prices.
//!
//! The crate prices `p_T = E[exp(-∫ r(X_t) dt) f(X_T)]` for a catalog of
//! diffusions and estimates how `ln p_T` responds to parameter and
//! initial-state perturbations as the horizon grows. Martingale extraction
//! factors the price as `φ(ξ) e^{-λT} E^P[φ⁻¹ f(X_T)]`, so the per-year
//! sensitivity converges to `-λ'(0)`.
//!
//! Every numerical routine is generic over [`Scalar`] (`f32` or `f64`).
//! The `*64` and `*32` aliases below fix the precision.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod estimators;
pub mod extraction;
pub mod linalg;
pub mod models;
pub mod riccati;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Crate version, echoed in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type ModelSpec64 = models::ModelSpec<f64>;
pub type ModelSpec32 = models::ModelSpec<f32>;
pub type ValidatedModel64 = models::ValidatedModel<f64>;
pub type ValidatedModel32 = models::ValidatedModel<f32>;
pub type PayoffSpec64 = models::PayoffSpec<f64>;
pub type PayoffSpec32 = models::PayoffSpec<f32>;
pub type Extraction64 = extraction::Extraction<f64>;
pub type Extraction32 = extraction::Extraction<f32>;
pub type GridSpec64 = sim::GridSpec<f64>;
pub type GridSpec32 = sim::GridSpec<f32>;
pub type Estimate64 = estimators::Estimate<f64>;
pub type Estimate32 = estimators::Estimate<f32>;
pub type SlopeSeries64 = estimators::SlopeSeries<f64>;
pub type SlopeSeries32 = estimators::SlopeSeries<f32>;
