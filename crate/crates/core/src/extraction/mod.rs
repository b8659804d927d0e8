//! Martingale extraction: the catalog eigenpair `(λ, φ)` with
//! `ℒφ = -λφ`, the induced measure change and the price decomposition
//! `p_T = φ(ξ) e^{-λT} E^P[φ⁻¹ f(X_T)]`.

mod eigenfunction;
mod stabilization;

pub use eigenfunction::EigenFunction;
pub use stabilization::{
    stabilization_check, HorizonValue, StabilizationDiagnostic, StabilizationMethod, Verdict, CAUCHY_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::{
    Dynamics, ModelKind, ModelParams, Payoff, PayoffSpec, Rate, Sde, ValidatedModel,
};
use crate::riccati::{qtsm_extraction_inputs, QtsmInputs};
use crate::scalar::Scalar;

/// A catalog eigenpair together with the original and transformed dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction<S> {
    pub kind: ModelKind,
    pub lambda: S,
    pub phi: EigenFunction<S>,
    /// Dynamics and discounting under the pricing measure.
    pub q: Dynamics<S>,
    /// Dynamics under the transformed measure. Discounting is absorbed by
    /// `e^{-λT}`, so the rate is zero.
    pub p: Dynamics<S>,
    pub payoff: PayoffSpec<S>,
    /// Riccati data for the quadratic model.
    pub riccati: Option<QtsmInputs<S>>,
}

impl<S: Scalar> Extraction<S> {
    pub fn xi(&self) -> &[S] {
        &self.q.xi
    }

    pub fn phi(&self, x: &[S]) -> S {
        self.phi.value(x)
    }

    pub fn phi_xi(&self) -> S {
        self.phi.value(self.xi())
    }

    /// `∇φ/φ`.
    pub fn log_phi_gradient(&self, x: &[S]) -> Vec<S> {
        self.phi.log_gradient(x)
    }

    /// `ϕ = σᵀ ∇φ/φ`.
    pub fn martingale_exponent(&self, x: &[S]) -> Vec<S> {
        self.q.sde.diffusion(x).tr_matvec(&self.log_phi_gradient(x))
    }

    /// `b + σϕ`.
    pub fn p_drift(&self, x: &[S]) -> Vec<S> {
        let sigma = self.q.sde.diffusion(x);
        let shift = sigma.matvec(&self.martingale_exponent(x));
        self.q.sde.drift(x).iter().zip(&shift).map(|(&b, &s)| b + s).collect()
    }

    /// `φ⁻¹ f`, the integrand of the transformed-measure expectation.
    pub fn p_integrand(&self, x: &[S]) -> S {
        let g = self.phi.log_value(x);
        match self.payoff.ln_eval(x) {
            Some(lf) => (lf - g).exp(),
            None => {
                let f = self.payoff.eval(x);
                if f == S::zero() {
                    S::zero()
                } else {
                    f * (-g).exp()
                }
            }
        }
    }

    /// `(½ tr(a ∇²φ) + b·∇φ - rφ + λφ) / φ` with closed-form derivatives.
    pub fn generator_residual(&self, x: &[S]) -> S {
        generator_residual_with(&self.q, &self.phi, self.lambda, x)
    }

    /// `φ(ξ) e^{-λT} E`.
    pub fn decompose_price(&self, p_expectation: S, horizon: S) -> S {
        decompose_price(self.phi_xi(), self.lambda, p_expectation, horizon)
    }

    /// The transformed-measure dynamics.
    pub fn transformed_dynamics(&self) -> &Dynamics<S> {
        &self.p
    }
}

/// `φ(ξ) e^{-λT} E`.
pub fn decompose_price<S: Scalar>(phi_xi: S, lambda: S, p_expectation: S, horizon: S) -> S {
    phi_xi * (-lambda * horizon).exp() * p_expectation
}

/// Eigenpair defect of `(λ, φ)` for the generator of `dynamics` at `x`.
pub fn generator_residual_with<S: Scalar>(
    dynamics: &Dynamics<S>,
    phi: &EigenFunction<S>,
    lambda: S,
    x: &[S],
) -> S {
    let sigma = dynamics.sde.diffusion(x);
    let a = &sigma * &sigma.transpose();
    let grad = phi.log_gradient(x);
    let hess = phi.log_hessian(x);
    let drift = dynamics.sde.drift(x);
    let d = x.len();
    let mut second = S::zero();
    for i in 0..d {
        for j in 0..d {
            second += a[(i, j)] * (hess[(i, j)] + grad[i] * grad[j]);
        }
    }
    let first: S = drift.iter().zip(&grad).map(|(&b, &g)| b * g).sum();
    S::half() * second + first - dynamics.rate.eval(x) + lambda
}

/// Power exponent carried by a GBM payoff.
fn gbm_exponent<S: Scalar>(payoff: &PayoffSpec<S>) -> S {
    match payoff.payoff {
        Payoff::Power { alpha } | Payoff::PowerCall { alpha, .. } => alpha,
        _ => S::zero(),
    }
}

/// Heston quantities `(a, S, ψ)` with `a = β - ραδ`,
/// `S = √(a² + δ²α(1-α))`, `ψ = (S - a)/δ²`.
pub fn heston_constants<S: Scalar>(beta: S, delta: S, rho: S, alpha: S) -> (S, S, S) {
    let a = beta - rho * alpha * delta;
    let s = (a * a + delta * delta * alpha * (S::one() - alpha)).sqrt();
    // (S - a) written without cancellation.
    let psi = alpha * (S::one() - alpha) / (s + a);
    (a, s, psi)
}

/// 3/2 quantities `(c, S₃, ℓ)` with `c = ½ + a/σ²`, `S₃ = √(c² + αβ(β-1))`,
/// `ℓ = S₃ - c`.
pub fn three_halves_constants<S: Scalar>(a: S, sigma: S, alpha: S, leverage: S) -> (S, S, S) {
    let c = S::half() + a / (sigma * sigma);
    let k = alpha * leverage * (leverage - S::one());
    let s3 = (c * c + k).sqrt();
    let ell = k / (s3 + c);
    (c, s3, ell)
}

/// Returns the catalog extraction for `(model, payoff)`.
pub fn eigenpair<S: Scalar>(model: &ValidatedModel<S>, payoff: &PayoffSpec<S>) -> Result<Extraction<S>> {
    model.check_payoff(payoff)?;
    let q = model.q_dynamics();
    let d = model.dim();
    let zero_rate = Rate::Const(S::zero());
    let mut riccati = None;
    let (lambda, phi, p_sde) = match &model.params {
        ModelParams::Gbm(p) => {
            let alpha = gbm_exponent(payoff);
            let lambda = p.r
                - p.mu * alpha
                - S::half() * p.sigma * p.sigma * alpha * (alpha - S::one());
            let sde = Sde::Gbm { drift: p.mu + p.sigma * p.sigma * alpha, vol: p.sigma };
            (lambda, EigenFunction::power(vec![alpha]), sde)
        }
        ModelParams::Cir(p) => {
            let b = (p.a * p.a + S::two() * p.sigma * p.sigma).sqrt();
            let kappa = S::two() / (b + p.a);
            let sde = Sde::Cir { theta: p.theta, a: b, sigma: p.sigma };
            (p.theta * kappa, EigenFunction::exponential(vec![-kappa]), sde)
        }
        ModelParams::Qtsm(p) => {
            let inputs = qtsm_extraction_inputs(p)?;
            let a = p.a();
            let au = a.matvec(&inputs.u);
            let b: Vec<S> = p.b.iter().zip(&au).map(|(&bi, &ai)| bi - ai).collect();
            let sde = Sde::Ou {
                b,
                big_b: inputs.care.closed_loop.clone(),
                sigma: p.sigma.clone(),
            };
            let phi = EigenFunction::new(
                vec![S::zero(); d],
                inputs.u.iter().map(|&u| -u).collect(),
                inputs.v.scale(-S::one()),
            );
            let lambda = inputs.lambda;
            riccati = Some(inputs);
            (lambda, phi, sde)
        }
        ModelParams::Heston(p) => {
            let alpha = match payoff.payoff {
                Payoff::Power { alpha } => alpha,
                _ => unreachable!("checked by check_payoff"),
            };
            let (_, s, psi) = heston_constants(p.beta, p.delta, p.rho, alpha);
            let sde = Sde::Heston {
                mu: p.mu,
                loading: alpha - p.rho * p.delta * psi,
                gamma: p.gamma,
                beta: s,
                delta: p.delta,
                rho: p.rho,
            };
            let phi = EigenFunction::new(
                vec![alpha, S::zero()],
                vec![S::zero(), -psi],
                Matrix::zeros(2, 2),
            );
            (p.gamma * psi - alpha * p.mu, phi, sde)
        }
        ModelParams::ThreeHalves(p) => {
            let guard = p.a / (p.sigma * p.sigma) + S::one() - p.alpha * p.leverage;
            if !(guard > S::zero()) {
                return Err(Error::StabilizationUnavailable(format!(
                    "3/2 extraction needs a/sigma^2 + 1 - alpha*leverage > 0, got {guard}"
                )));
            }
            let (_, _, ell) = three_halves_constants(p.a, p.sigma, p.alpha, p.leverage);
            let lambda = p.theta * ell + p.r * p.alpha * (p.leverage - S::one());
            let sde = Sde::ThreeHalves {
                theta: p.theta,
                a: p.a + p.sigma * p.sigma * ell,
                sigma: p.sigma,
            };
            (lambda, EigenFunction::power(vec![-ell]), sde)
        }
    };
    let p = Dynamics { sde: p_sde, rate: zero_rate, xi: q.xi.clone() };
    Ok(Extraction {
        kind: model.kind(),
        lambda,
        phi,
        q,
        p,
        payoff: payoff.clone(),
        riccati,
    })
}

/// Free-standing form of [`Extraction::transformed_dynamics`].
pub fn transformed_dynamics<S: Scalar>(ext: &Extraction<S>) -> Dynamics<S> {
    ext.p.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{validate, ModelSpec, QtsmParams};

    fn cir() -> ValidatedModel<f64> {
        validate(ModelSpec::<f64>::cir(0.1, 0.5, 0.2, 0.04)).unwrap()
    }

    #[test]
    fn gbm_examples() {
        let m = validate(ModelSpec::<f64>::gbm(0.08, 0.2, 0.05, 100.0)).unwrap();
        let e = eigenpair(&m, &PayoffSpec::<f64>::power(0.5)).unwrap();
        assert!((e.lambda - 0.015).abs() < 1e-15);
        let e0 = eigenpair(&m, &PayoffSpec::<f64>::bond()).unwrap();
        assert_eq!(e0.lambda, 0.05);
        assert_eq!(e0.phi(&[37.0]), 1.0);
        assert_eq!(e0.p.sde, e0.q.sde);
        assert!(e.generator_residual(&[50.0]).abs() < 1e-12);
    }

    #[test]
    fn cir_examples() {
        let e = eigenpair(&cir(), &PayoffSpec::<f64>::bond()).unwrap();
        let kappa = ((0.25f64 + 0.08).sqrt() - 0.5) / 0.04;
        assert!((kappa - 1.861407).abs() < 1e-6);
        assert!((e.lambda - 0.1 * kappa).abs() < 1e-15);
        match e.p.sde {
            Sde::Cir { a, .. } => assert!((a - 0.33f64.sqrt()).abs() < 1e-15),
            _ => panic!(),
        }
        assert!(e.generator_residual(&[1.0]).abs() < 1e-12);
        let p = e.decompose_price(1.0, 10.0);
        assert!((p - (-1.861407f64 * 0.04 - 1.861407).exp()).abs() < 1e-6);
        let wrong = generator_residual_with(&e.q, &e.phi, e.lambda + 0.01, &[1.0]);
        assert!((wrong - 0.01).abs() < 1e-12);
    }

    #[test]
    fn decomposition_of_gbm_forward() {
        let m = validate(ModelSpec::<f64>::gbm(0.08, 0.2, 0.05, 100.0)).unwrap();
        let e = eigenpair(&m, &PayoffSpec::<f64>::power(1.0)).unwrap();
        assert_eq!(e.p_integrand(&[123.4]), 1.0);
        let p = e.decompose_price(1.0, 5.0);
        assert!((p - 100.0 * 0.15f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn exponent_is_diffusion_times_gradient() {
        let m = validate(ModelSpec::<f64>::heston(0.08, 0.09, 2.0, 0.3, -0.5, 1.0, 0.04)).unwrap();
        let e = eigenpair(&m, &PayoffSpec::<f64>::power(0.5)).unwrap();
        let x = [1.3, 0.07];
        let phi = e.martingale_exponent(&x);
        let sigma = e.q.sde.diffusion(&x);
        let direct = sigma.tr_matvec(&e.log_phi_gradient(&x));
        assert_eq!(phi, direct);
        let pd = e.p_drift(&x);
        let cat = e.p.sde.drift(&x);
        for k in 0..2 {
            assert!((pd[k] - cat[k]).abs() < 1e-14);
        }
        assert!(e.generator_residual(&x).abs() < 1e-12);
    }

    #[test]
    fn three_halves_guard_and_pair() {
        let m = validate(ModelSpec::<f64>::three_halves(2.0, 1.0, 0.5, 0.0, 2.0, 0.5, 1.0)).unwrap();
        let e = eigenpair(&m, &PayoffSpec::<f64>::letf_utility(0.5, 2.0)).unwrap();
        assert!((e.lambda - 0.21954).abs() < 1e-5);
        assert!(e.generator_residual(&[0.7]).abs() < 1e-12);
        let cat = e.p.sde.drift(&[0.7]);
        assert!((cat[0] - e.p_drift(&[0.7])[0]).abs() < 1e-14);

        let bad = validate(ModelSpec::<f64>::three_halves(2.0, 0.1, 0.5, 0.0, 3.0, 1.0, 1.0)).unwrap();
        let err = eigenpair(&bad, &PayoffSpec::<f64>::letf_utility(1.0, 3.0)).unwrap_err();
        assert_eq!(err.name(), "StabilizationUnavailable");
    }

    #[test]
    fn qtsm_closed_loop_is_stable() {
        let p: QtsmParams<f64> = QtsmParams {
            b: vec![0.0],
            big_b: Matrix::scalar(-1.0),
            sigma: Matrix::scalar(1.0),
            beta: 0.0,
            alpha: vec![0.0],
            gamma: Matrix::scalar(1.0),
        };
        let m = validate(ModelSpec::<f64>::qtsm(p, vec![0.2])).unwrap();
        let e = eigenpair(&m, &PayoffSpec::<f64>::bump(vec![0.0], 1.0, 1.0)).unwrap();
        match &e.p.sde {
            Sde::Ou { big_b, .. } => assert!(big_b[(0, 0)] < 0.0),
            _ => panic!(),
        }
        assert!(e.generator_residual(&[0.3]).abs() < 1e-12);
    }
}
