//! Closed forms used as oracles: special functions, CIR laws, long-run
//! sensitivity limits, the Heston reduction and the leveraged fund value.

mod cir;
mod heston;
mod letf;
mod limits;
pub mod quadrature;
pub mod special;

pub use cir::{
    cir_bond_price, cir_density, cir_expectation, cir_invariant_density, cir_payoff_expectation,
    CirDensity, CirInvariant, Measure,
};
pub use heston::{heston_reduction, HestonReduction};
pub use letf::letf_terminal;
pub use limits::{
    cir_limits, heston_limit, heston_limit_by_chain_rule, sensitivity_limit, LimitKind,
    SensitivityLimit,
};
pub use special::{bessel_i, bessel_i_scaled, ln_bessel_i, log_gamma};
