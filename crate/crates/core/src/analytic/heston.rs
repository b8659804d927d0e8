//! Reduction of the Heston power-utility problem to a CIR bond.
//!
//! With `q_T = E[e^{-∫ r_t dt}]` for the reduced square-root rate,
//! `E[X_T^α] = e^{αμT} X₀^α q_T`.

use crate::error::Result;
use crate::linalg::Matrix;
use crate::models::{validate, CirParams, HestonParams, ModelSpec};
use crate::scalar::Scalar;

/// Reduced CIR problem together with the Jacobian
/// `∂(θ, a, σ, r₀) / ∂(γ, β, δ, ρ, v₀)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HestonReduction<S> {
    pub cir: CirParams<S>,
    pub r0: S,
    /// Growth rate `αμ` of the multiplicative wrapper.
    pub wrapper_rate: S,
    pub alpha: S,
    /// Rows `(θ, a, σ, r₀)`, columns `(γ, β, δ, ρ, v₀)`.
    pub jacobian: Matrix<S>,
}

impl<S: Scalar> HestonReduction<S> {
    /// `e^{αμT} X₀^α q_T`.
    pub fn price(&self, cir_price: S, horizon: S, x0: S) -> S {
        (self.wrapper_rate * horizon + self.alpha * x0.ln()).exp() * cir_price
    }
}

pub fn heston_reduction<S: Scalar>(p: &HestonParams<S>, alpha: S, v0: S) -> Result<HestonReduction<S>> {
    let w = alpha * (S::one() - alpha);
    let root = (S::two() * w).sqrt();
    let cir = CirParams {
        theta: S::half() * w * p.gamma,
        a: p.beta - p.rho * alpha * p.delta,
        sigma: p.delta * root * S::half(),
    };
    let r0 = S::half() * w * v0;
    validate(ModelSpec::cir(cir.theta, cir.a, cir.sigma, r0))?;
    let mut j = Matrix::zeros(4, 5);
    j[(0, 0)] = S::half() * w;
    j[(1, 1)] = S::one();
    j[(1, 2)] = -p.rho * alpha;
    j[(1, 3)] = -alpha * p.delta;
    j[(2, 2)] = root * S::half();
    j[(3, 4)] = S::half() * w;
    Ok(HestonReduction { cir, r0, wrapper_rate: alpha * p.mu, alpha, jacobian: j })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rho: f64) -> HestonParams<f64> {
        HestonParams { mu: 0.08, gamma: 0.09, beta: 2.0, delta: 0.3, rho }
    }

    #[test]
    fn reduced_coefficients() {
        let r = heston_reduction(&params(-0.5), 0.5, 0.04).unwrap();
        assert!((r.cir.theta - 0.01125).abs() < 1e-16);
        assert!((r.cir.a - 2.075).abs() < 1e-15);
        let r0 = heston_reduction(&params(0.0), 0.5, 0.04).unwrap();
        assert_eq!(r0.jacobian[(1, 2)], 0.0);
    }

    #[test]
    fn reduced_feller_follows_heston_feller() {
        let mut p = params(-0.5);
        p.gamma = 0.04;
        let err = heston_reduction(&p, 0.5, 0.04).unwrap_err();
        assert_eq!(err.name(), "FellerViolation");
    }
}
