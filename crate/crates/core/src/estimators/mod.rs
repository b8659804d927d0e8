//! Monte Carlo estimators of prices and their sensitivities, and the
//! long-horizon slope assembler.
//!
//! Sensitivities of `ln p_T` are split along the extraction
//! `ln p_T = ln φ(ξ) - λT + ln E^P[h(X_T)]` with `h = φ⁻¹f`. The eigenvalue
//! and eigenfunction parts are closed forms; the expectation part is
//! estimated by likelihood ratios, Bismut–Elworthy–Li weights, a Lamperti
//! transform, the first variation process or finite differences.

mod catalog;
mod estimate;
mod pricing;
mod sensitivities;
mod slope;

pub use catalog::{aligned_payoff, bumped, log_payoff_tangent, phi_tangent, score_function};
pub use estimate::{z_score, Estimate};
pub use pricing::{default_fd_step, fd_sensitivity, price_p, price_q, FdOptions, Pricer};
pub use sensitivities::{delta_bel, rho_lr, vega_lamperti, vega_variation};
pub use slope::{longterm_slope, Addends, SlopeMethod, SlopeOptions, SlopeRow, SlopeSeries};

pub(crate) use estimate::mean_se;
