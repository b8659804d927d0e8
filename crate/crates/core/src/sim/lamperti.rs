//! Unit-diffusion coordinates for the one-dimensional catalog models.
//!
//! With `u_ε(x) = ∫ σ_ε⁻¹`, the process `U = u_ε(X)` solves
//! `dU = δ_ε(U) dt + dB̃` with `B̃ = ±B`. A volatility perturbation then
//! acts on the drift `δ_ε` and on the starting point `q(ε) = u_ε(ξ)`.
//! Every catalog drift has the shape `δ(u) = c₋₁/u + c₁ u + c₀`.

use crate::analytic::Measure;
use crate::error::{Error, Result};
use crate::extraction::three_halves_constants;
use crate::models::{ModelParams, Param, Payoff, PayoffSpec, Rate, ValidatedModel};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Map<S> {
    /// `u = ln(x/ξ)/σ`.
    Log { xi: S },
    /// `u = 2√x/σ`.
    Sqrt,
    /// `u = 2/(σ√x)`.
    InvSqrt,
}

/// Lamperti transform of a one-dimensional catalog model along one
/// parameter direction, evaluated at `ε = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lamperti<S> {
    map: Map<S>,
    sigma: S,
    coef: [S; 3],
    coef_eps: [S; 3],
    moves_sigma: bool,
    rate: Rate<S>,
    /// `B̃ = sign · B`.
    pub sign: S,
    /// `q(0) = u(ξ)`.
    pub q: S,
    /// `q'(0)`.
    pub q_prime: S,
}

impl<S: Scalar> Lamperti<S> {
    pub fn u(&self, x: S) -> S {
        match self.map {
            Map::Log { xi } => (x / xi).ln() / self.sigma,
            Map::Sqrt => S::two() * x.sqrt() / self.sigma,
            Map::InvSqrt => S::two() / (self.sigma * x.sqrt()),
        }
    }

    /// Inverse map `v = u⁻¹`.
    pub fn v(&self, u: S) -> S {
        match self.map {
            Map::Log { xi } => xi * (self.sigma * u).exp(),
            Map::Sqrt => S::c(0.25) * self.sigma * self.sigma * u * u,
            Map::InvSqrt => S::c(4.0) / (self.sigma * self.sigma * u * u),
        }
    }

    /// `u'(x) = sign / σ(x)`.
    pub fn u_prime(&self, x: S) -> S {
        match self.map {
            Map::Log { .. } => S::one() / (self.sigma * x),
            Map::Sqrt => S::one() / (self.sigma * x.sqrt()),
            Map::InvSqrt => -S::one() / (self.sigma * x * x.sqrt()),
        }
    }

    /// Coefficients `(c₋₁, c₁, c₀)` of `δ(u) = c₋₁/u + c₁u + c₀`.
    pub fn coefficients(&self) -> [S; 3] {
        self.coef
    }

    pub fn drift(&self, u: S) -> S {
        shape(&self.coef, u)
    }

    /// `∂_ε δ_ε(u)` at fixed `u`.
    pub fn drift_eps(&self, u: S) -> S {
        shape(&self.coef_eps, u)
    }

    /// `∂_ε v_ε(u)` at fixed `u`.
    pub fn v_eps(&self, u: S) -> S {
        if !self.moves_sigma {
            return S::zero();
        }
        let x = self.v(u);
        match self.map {
            Map::Log { .. } => x * u,
            Map::Sqrt => S::two() * x / self.sigma,
            Map::InvSqrt => -S::two() * x / self.sigma,
        }
    }

    /// Transformed rate `R(u) = r(v(u))`.
    pub fn rate(&self, u: S) -> S {
        self.rate.eval(&[self.v(u)])
    }

    /// Score weight in the original coordinates: the drift change of `U`
    /// read against `dB`.
    pub fn score(&self, x: S) -> S {
        self.sign * self.drift_eps(self.u(x))
    }
}

fn shape<S: Scalar>(c: &[S; 3], u: S) -> S {
    let mut out = c[2];
    if c[0] != S::zero() {
        out += c[0] / u;
    }
    if c[1] != S::zero() {
        out += c[1] * u;
    }
    out
}

fn payoff_power<S: Scalar>(payoff: Option<&PayoffSpec<S>>) -> S {
    match payoff.map(|p| &p.payoff) {
        Some(Payoff::Power { alpha }) | Some(Payoff::PowerCall { alpha, .. }) => *alpha,
        _ => S::zero(),
    }
}

/// Builds the transform of `model` under `measure` (`P` uses the catalog
/// extraction for `payoff`) for the perturbation `param`.
pub fn lamperti<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: Option<&PayoffSpec<S>>,
    measure: Measure,
    param: Param,
) -> Result<Lamperti<S>> {
    let under_p = measure == Measure::P;
    let zero = S::zero();
    let half = S::half();
    let xi = model.xi()[0];
    let not_here = || Error::NotInCatalog(format!("no Lamperti direction {param} for {}", model.kind()));
    let rate = match measure {
        Measure::Q => model.q_dynamics().rate,
        Measure::P => Rate::Const(zero),
    };
    let (map, sigma, coef, coef_eps, sign) = match &model.params {
        ModelParams::Gbm(p) => {
            let alpha = if under_p { payoff_power(payoff) } else { zero };
            let m = p.mu + p.sigma * p.sigma * alpha;
            let coef = [zero, zero, m / p.sigma - half * p.sigma];
            let d = match param {
                Param::Mu => S::one() / p.sigma,
                Param::Sigma => S::two() * alpha - m / (p.sigma * p.sigma) - half,
                Param::R => zero,
                _ => return Err(not_here()),
            };
            (Map::Log { xi }, p.sigma, coef, [zero, zero, d], S::one())
        }
        ModelParams::Cir(p) => {
            let s2 = p.sigma * p.sigma;
            let b = (p.a * p.a + S::two() * s2).sqrt();
            let kappa = if under_p { b } else { p.a };
            let coef = [S::two() * p.theta / s2 - half, -half * kappa, zero];
            let d = match param {
                Param::Theta => [S::two() / s2, zero, zero],
                Param::A => [zero, -half * if under_p { p.a / b } else { S::one() }, zero],
                Param::Sigma => [
                    -S::c(4.0) * p.theta / (s2 * p.sigma),
                    if under_p { -p.sigma / b } else { zero },
                    zero,
                ],
                _ => return Err(not_here()),
            };
            (Map::Sqrt, p.sigma, coef, d, S::one())
        }
        ModelParams::ThreeHalves(p) => {
            let s2 = p.sigma * p.sigma;
            let (_, s3, ell) = three_halves_constants(p.a, p.sigma, p.alpha, p.leverage);
            let on = if under_p { S::one() } else { zero };
            let ell_c = -ell / s3;
            let ell_k = half / s3;
            let theta_c = p.a + s2 + on * s2 * ell;
            let coef = [S::two() * theta_c / s2 - half, -half * p.theta, zero];
            let d_inv = match param {
                Param::Theta => None,
                Param::A => Some(S::two() / s2 + on * S::two() * ell_c / s2),
                Param::Sigma => Some(
                    -S::c(4.0) * p.a / (s2 * p.sigma)
                        + on * S::two() * ell_c * (-S::two() * p.a / (s2 * p.sigma)),
                ),
                Param::Leverage => {
                    Some(on * S::two() * ell_k * p.alpha * (S::two() * p.leverage - S::one()))
                }
                Param::Alpha => Some(on * S::two() * ell_k * p.leverage * (p.leverage - S::one())),
                Param::R => Some(zero),
                _ => return Err(not_here()),
            };
            let d = match d_inv {
                None => [zero, -half, zero],
                Some(v) => [v, zero, zero],
            };
            (Map::InvSqrt, p.sigma, coef, d, -S::one())
        }
        _ => {
            return Err(Error::UnsupportedModel(format!(
                "the Lamperti transform needs a one-dimensional model, got {}",
                model.kind()
            )))
        }
    };
    if !(sigma > zero) || !sigma.is_finite() {
        return Err(Error::NonInvertibleTransform(format!("volatility {sigma} has no inverse")));
    }
    let moves_sigma = param == Param::Sigma;
    let mut out = Lamperti {
        map,
        sigma,
        coef,
        coef_eps,
        moves_sigma,
        rate,
        sign,
        q: zero,
        q_prime: zero,
    };
    out.q = out.u(xi);
    if moves_sigma {
        out.q_prime = -out.q / sigma;
    }
    Ok(out)
}
