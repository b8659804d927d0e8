//! The five-model catalog, payoff families and parameter validation.

mod dynamics;
mod params;
mod payoff;

pub use dynamics::{Dynamics, Rate, Sde};
pub use params::{
    CirParams, GbmParams, HestonParams, ModelKind, ModelParams, Param, QtsmParams,
    ThreeHalvesParams,
};
pub use payoff::{Growth, Payoff, PayoffSpec};

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::scalar::Scalar;

/// Largest QTSM dimension handled by the dense solvers.
pub const MAX_QTSM_DIM: usize = 16;

/// A catalog model with its initial state `ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec<S> {
    pub params: ModelParams<S>,
    pub initial_state: Vec<S>,
}

impl<S: Scalar> ModelSpec<S> {
    pub fn new(params: ModelParams<S>, initial_state: Vec<S>) -> Self {
        Self { params, initial_state }
    }

    pub fn gbm(mu: S, sigma: S, r: S, s0: S) -> Self {
        Self::new(ModelParams::Gbm(GbmParams { mu, sigma, r }), vec![s0])
    }

    pub fn cir(theta: S, a: S, sigma: S, r0: S) -> Self {
        Self::new(ModelParams::Cir(CirParams { theta, a, sigma }), vec![r0])
    }

    pub fn heston(mu: S, gamma: S, beta: S, delta: S, rho: S, x0: S, v0: S) -> Self {
        Self::new(
            ModelParams::Heston(HestonParams { mu, gamma, beta, delta, rho }),
            vec![x0, v0],
        )
    }

    pub fn three_halves(theta: S, a: S, sigma: S, r: S, leverage: S, alpha: S, x0: S) -> Self {
        Self::new(
            ModelParams::ThreeHalves(ThreeHalvesParams { theta, a, sigma, r, leverage, alpha }),
            vec![x0],
        )
    }

    pub fn qtsm(params: QtsmParams<S>, xi: Vec<S>) -> Self {
        Self::new(ModelParams::Qtsm(params), xi)
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Copy with parameter `param` moved by `h`.
    pub fn bumped(&self, param: Param, h: S) -> Result<Self> {
        let mut out = self.clone();
        let missing = || {
            Error::NotInCatalog(format!(
                "parameter {param} does not exist for {}",
                self.kind()
            ))
        };
        if let Param::Xi(i) = param {
            let x = out.initial_state.get_mut(i).ok_or_else(missing)?;
            *x += h;
            return Ok(out);
        }
        match &mut out.params {
            ModelParams::Gbm(p) => match param {
                Param::Mu => p.mu += h,
                Param::Sigma => p.sigma += h,
                Param::R => p.r += h,
                _ => return Err(missing()),
            },
            ModelParams::Cir(p) => match param {
                Param::Theta => p.theta += h,
                Param::A => p.a += h,
                Param::Sigma => p.sigma += h,
                _ => return Err(missing()),
            },
            ModelParams::Heston(p) => match param {
                Param::Mu => p.mu += h,
                Param::Gamma => p.gamma += h,
                Param::Beta => p.beta += h,
                Param::Delta => p.delta += h,
                Param::Rho => p.rho += h,
                _ => return Err(missing()),
            },
            ModelParams::ThreeHalves(p) => match param {
                Param::Theta => p.theta += h,
                Param::A => p.a += h,
                Param::Sigma => p.sigma += h,
                Param::R => p.r += h,
                Param::Leverage => p.leverage += h,
                Param::Alpha => p.alpha += h,
                _ => return Err(missing()),
            },
            ModelParams::Qtsm(p) => {
                let d = p.dim();
                match param {
                    Param::Beta => p.beta += h,
                    Param::B(i) if i < d => p.b[i] += h,
                    Param::AlphaVec(i) if i < d => p.alpha[i] += h,
                    Param::BigB(i, j) if i < d && j < d => p.big_b[(i, j)] += h,
                    Param::SigmaEntry(i, j) if i < d && j < d => p.sigma[(i, j)] += h,
                    Param::GammaScale => p.gamma = p.gamma.scale(S::one() + h),
                    _ => return Err(missing()),
                }
            }
        }
        Ok(out)
    }

    /// Value of a named parameter, for step-size policies.
    pub fn param_value(&self, param: Param) -> Result<S> {
        if let Param::Xi(i) = param {
            return self
                .initial_state
                .get(i)
                .copied()
                .ok_or_else(|| Error::NotInCatalog(format!("no state coordinate {i}")));
        }
        let missing = || Error::NotInCatalog(format!("parameter {param} not in {}", self.kind()));
        Ok(match (&self.params, param) {
            (ModelParams::Gbm(p), Param::Mu) => p.mu,
            (ModelParams::Gbm(p), Param::Sigma) => p.sigma,
            (ModelParams::Gbm(p), Param::R) => p.r,
            (ModelParams::Cir(p), Param::Theta) => p.theta,
            (ModelParams::Cir(p), Param::A) => p.a,
            (ModelParams::Cir(p), Param::Sigma) => p.sigma,
            (ModelParams::Heston(p), Param::Mu) => p.mu,
            (ModelParams::Heston(p), Param::Gamma) => p.gamma,
            (ModelParams::Heston(p), Param::Beta) => p.beta,
            (ModelParams::Heston(p), Param::Delta) => p.delta,
            (ModelParams::Heston(p), Param::Rho) => p.rho,
            (ModelParams::ThreeHalves(p), Param::Theta) => p.theta,
            (ModelParams::ThreeHalves(p), Param::A) => p.a,
            (ModelParams::ThreeHalves(p), Param::Sigma) => p.sigma,
            (ModelParams::ThreeHalves(p), Param::R) => p.r,
            (ModelParams::ThreeHalves(p), Param::Leverage) => p.leverage,
            (ModelParams::ThreeHalves(p), Param::Alpha) => p.alpha,
            (ModelParams::Qtsm(p), Param::Beta) => p.beta,
            (ModelParams::Qtsm(p), Param::B(i)) if i < p.dim() => p.b[i],
            (ModelParams::Qtsm(p), Param::AlphaVec(i)) if i < p.dim() => p.alpha[i],
            (ModelParams::Qtsm(p), Param::BigB(i, j)) if i < p.dim() && j < p.dim() => {
                p.big_b[(i, j)]
            }
            (ModelParams::Qtsm(p), Param::SigmaEntry(i, j)) if i < p.dim() && j < p.dim() => {
                p.sigma[(i, j)]
            }
            (ModelParams::Qtsm(_), Param::GammaScale) => S::zero(),
            _ => return Err(missing()),
        })
    }
}

/// A model that passed [`validate`]. Only validated models are accepted by
/// the extraction, simulation and estimator layers.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedModel<S>(ModelSpec<S>);

impl<S> Deref for ValidatedModel<S> {
    type Target = ModelSpec<S>;
    fn deref(&self) -> &ModelSpec<S> {
        &self.0
    }
}

impl<S: Scalar> ValidatedModel<S> {
    pub fn spec(&self) -> &ModelSpec<S> {
        &self.0
    }

    pub fn into_spec(self) -> ModelSpec<S> {
        self.0
    }

    pub fn xi(&self) -> &[S] {
        &self.0.initial_state
    }

    /// Dynamics and discounting under the original measure.
    pub fn q_dynamics(&self) -> Dynamics<S> {
        let (sde, rate) = match &self.params {
            ModelParams::Gbm(p) => (Sde::Gbm { drift: p.mu, vol: p.sigma }, Rate::Const(p.r)),
            ModelParams::Cir(p) => (
                Sde::Cir { theta: p.theta, a: p.a, sigma: p.sigma },
                Rate::Coordinate(0),
            ),
            ModelParams::Qtsm(p) => (
                Sde::Ou { b: p.b.clone(), big_b: p.big_b.clone(), sigma: p.sigma.clone() },
                Rate::Quadratic { beta: p.beta, alpha: p.alpha.clone(), gamma: p.gamma.clone() },
            ),
            ModelParams::Heston(p) => (
                Sde::Heston {
                    mu: p.mu,
                    loading: S::zero(),
                    gamma: p.gamma,
                    beta: p.beta,
                    delta: p.delta,
                    rho: p.rho,
                },
                Rate::Const(S::zero()),
            ),
            ModelParams::ThreeHalves(p) => {
                let ab = p.alpha * p.leverage;
                let c1 = S::half() * ab * (p.leverage - S::one()) * p.sigma * p.sigma;
                let c0 = p.r * p.alpha * (p.leverage - S::one());
                (
                    Sde::ThreeHalves { theta: p.theta, a: p.a, sigma: p.sigma },
                    Rate::Affine { c0, c1 },
                )
            }
        };
        Dynamics { sde, rate, xi: self.initial_state.clone() }
    }

    pub fn drift(&self, x: &[S]) -> Result<Vec<S>> {
        let dynamics = self.q_dynamics();
        check_state(&dynamics.sde, x)?;
        Ok(dynamics.sde.drift(x))
    }

    pub fn diffusion(&self, x: &[S]) -> Result<Matrix<S>> {
        let dynamics = self.q_dynamics();
        check_state(&dynamics.sde, x)?;
        Ok(dynamics.sde.diffusion(x))
    }

    pub fn short_rate(&self, x: &[S]) -> Result<S> {
        let dynamics = self.q_dynamics();
        check_state(&dynamics.sde, x)?;
        Ok(dynamics.rate.eval(x))
    }

    /// Checks that `payoff` is admissible for this model.
    pub fn check_payoff(&self, payoff: &PayoffSpec<S>) -> Result<()> {
        payoff.check()?;
        let bad = |m: String| Err(Error::InvalidPayoff(m));
        match (&self.params, &payoff.payoff) {
            (ModelParams::Gbm(_), Payoff::Power { .. } | Payoff::PowerCall { .. } | Payoff::Bond) => {
                Ok(())
            }
            (ModelParams::Cir(p), _) if !matches!(payoff.payoff, Payoff::LetfUtility { .. }) => {
                if let Growth::Exponential(m) = payoff.growth {
                    if !(m < p.a / (p.sigma * p.sigma)) {
                        return bad(format!(
                            "CIR payoff growth exponent {m} must be below a/sigma^2 = {}",
                            p.a / (p.sigma * p.sigma)
                        ));
                    }
                }
                Ok(())
            }
            (ModelParams::Qtsm(q), Payoff::Bump { center, .. } | Payoff::Indicator { center, .. }) => {
                if center.len() != q.dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "bump center has length {} but the model has dimension {}",
                        center.len(),
                        q.dim()
                    )));
                }
                Ok(())
            }
            (ModelParams::Heston(_), Payoff::Power { alpha }) => {
                if *alpha > S::zero() && *alpha < S::one() {
                    Ok(())
                } else {
                    bad(format!("Heston utility exponent {alpha} must lie in (0, 1)"))
                }
            }
            (ModelParams::ThreeHalves(p), Payoff::LetfUtility { alpha, leverage }) => {
                if *alpha == p.alpha && *leverage == p.leverage {
                    Ok(())
                } else {
                    bad("LETF utility payoff must carry the model's alpha and leverage".into())
                }
            }
            (params, _) => bad(format!(
                "payoff {} is not admissible for model {}",
                payoff.name(),
                params.kind()
            )),
        }
    }
}

fn check_state<S: Scalar>(sde: &Sde<S>, x: &[S]) -> Result<()> {
    if sde.in_domain(x) {
        Ok(())
    } else {
        Err(Error::DomainError(format!("state {x:?} is outside the state space")))
    }
}

fn positive<S: Scalar>(value: S, name: &str) -> Result<()> {
    if value > S::zero() && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {value}")))
    }
}

fn finite<S: Scalar>(value: S, name: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

/// Checks every catalog invariant and returns the model unchanged.
pub fn validate<S: Scalar>(model: ModelSpec<S>) -> Result<ValidatedModel<S>> {
    let d = model.dim();
    if model.initial_state.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "{} has dimension {d} but the initial state has length {}",
            model.kind(),
            model.initial_state.len()
        )));
    }
    for (i, &x) in model.initial_state.iter().enumerate() {
        finite(x, &format!("initial_state[{i}]"))?;
    }
    let strictly_positive_state = |idx: &[usize]| -> Result<()> {
        for &i in idx {
            if !(model.initial_state[i] > S::zero()) {
                return Err(Error::DomainError(format!(
                    "initial_state[{i}] = {} must be strictly positive for {}",
                    model.initial_state[i],
                    model.kind()
                )));
            }
        }
        Ok(())
    };
    match &model.params {
        ModelParams::Gbm(p) => {
            finite(p.mu, "mu")?;
            positive(p.sigma, "sigma")?;
            finite(p.r, "r")?;
            strictly_positive_state(&[0])?;
        }
        ModelParams::Cir(p) => {
            positive(p.theta, "theta")?;
            finite(p.a, "a")?;
            positive(p.sigma, "sigma")?;
            let two_theta = S::two() * p.theta;
            let s2 = p.sigma * p.sigma;
            if !(two_theta > s2) {
                return Err(Error::FellerViolation(format!(
                    "CIR requires 2*theta > sigma^2, got 2*theta = {two_theta} <= sigma^2 = {s2} (theta = {}, sigma = {})",
                    p.theta, p.sigma
                )));
            }
            strictly_positive_state(&[0])?;
        }
        ModelParams::Heston(p) => {
            finite(p.mu, "mu")?;
            positive(p.gamma, "gamma")?;
            positive(p.beta, "beta")?;
            positive(p.delta, "delta")?;
            if !(p.rho >= -S::one() && p.rho <= S::one()) {
                return Err(Error::InvalidParameter(format!("rho = {} must lie in [-1, 1]", p.rho)));
            }
            let two_gamma = S::two() * p.gamma;
            let d2 = p.delta * p.delta;
            if !(two_gamma > d2) {
                return Err(Error::FellerViolation(format!(
                    "Heston variance requires 2*gamma > delta^2, got {two_gamma} <= {d2} (gamma = {}, delta = {})",
                    p.gamma, p.delta
                )));
            }
            strictly_positive_state(&[0, 1])?;
        }
        ModelParams::ThreeHalves(p) => {
            positive(p.theta, "theta")?;
            positive(p.a, "a")?;
            positive(p.sigma, "sigma")?;
            finite(p.r, "r")?;
            if !(p.leverage.abs() <= S::c(3.0)) {
                return Err(Error::LeverageOutOfRange(format!(
                    "|leverage| = {} exceeds 3",
                    p.leverage.abs()
                )));
            }
            if !(p.alpha > S::zero() && p.alpha <= S::one()) {
                return Err(Error::InvalidParameter(format!(
                    "utility exponent alpha = {} must lie in (0, 1]",
                    p.alpha
                )));
            }
            strictly_positive_state(&[0])?;
        }
        ModelParams::Qtsm(q) => validate_qtsm(q)?,
    }
    Ok(ValidatedModel(model))
}

fn validate_qtsm<S: Scalar>(q: &QtsmParams<S>) -> Result<()> {
    let d = q.dim();
    if d == 0 || d > MAX_QTSM_DIM {
        return Err(Error::DimensionMismatch(format!(
            "QTSM dimension {d} outside 1..={MAX_QTSM_DIM}"
        )));
    }
    let square = |m: &Matrix<S>, name: &str| -> Result<()> {
        if m.rows() == d && m.cols() == d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{name} is {}x{} but b has length {d}",
                m.rows(),
                m.cols()
            )))
        }
    };
    square(&q.big_b, "B")?;
    square(&q.sigma, "sigma")?;
    square(&q.gamma, "Gamma")?;
    if q.alpha.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "alpha has length {} but b has length {d}",
            q.alpha.len()
        )));
    }
    let all_finite = q.b.iter().chain(&q.alpha).all(|v| v.is_finite())
        && q.beta.is_finite()
        && q.big_b.is_finite()
        && q.sigma.is_finite()
        && q.gamma.is_finite();
    if !all_finite {
        return Err(Error::InvalidParameter("QTSM parameters must be finite".into()));
    }
    if Lu::new(&q.sigma).is_err() || !q.a().is_positive_definite() {
        return Err(Error::SingularSigma(
            "sigma must be nonsingular so that a = sigma sigma^T is positive definite".into(),
        ));
    }
    let scale = S::one() + q.gamma.frobenius_norm();
    if q.gamma.asymmetry() > S::c(1e-12) * scale {
        return Err(Error::NonSpdGamma("Gamma is not symmetric".into()));
    }
    if !q.gamma.is_positive_definite() {
        return Err(Error::NonSpdGamma("Gamma is not positive definite".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation_examples() {
        assert!(validate(ModelSpec::<f64>::cir(0.1, 0.5, 0.2, 0.04)).is_ok());
        let err = validate(ModelSpec::<f64>::cir(0.01, 0.5, 0.2, 0.04)).unwrap_err();
        assert_eq!(err.name(), "FellerViolation");
        assert!(validate(ModelSpec::<f64>::heston(0.08, 0.09, 2.0, 0.3, -0.5, 1.0, 0.04)).is_ok());
        let err = validate(ModelSpec::<f64>::three_halves(2.0, 1.0, 0.5, 0.0, 4.0, 0.5, 1.0)).unwrap_err();
        assert_eq!(err.name(), "LeverageOutOfRange");
    }

    #[test]
    fn drift_diffusion_rate_examples() {
        let cir = validate(ModelSpec::<f64>::cir(0.1, 0.5, 0.2, 0.04)).unwrap();
        assert!((cir.drift(&[1.0]).unwrap()[0] + 0.4).abs() < 1e-15);
        assert!((cir.diffusion(&[1.0]).unwrap()[(0, 0)] - 0.2).abs() < 1e-15);
        assert_eq!(cir.short_rate(&[1.0]).unwrap(), 1.0);
        assert_eq!(cir.drift(&[-0.1]).unwrap_err().name(), "DomainError");

        let q: QtsmParams<f64> = QtsmParams {
            b: vec![0.0],
            big_b: Matrix::scalar(-1.0),
            sigma: Matrix::scalar(1.0),
            beta: 0.0,
            alpha: vec![0.0],
            gamma: Matrix::scalar(1.0),
        };
        let qtsm = validate(ModelSpec::qtsm(q, vec![0.0])).unwrap();
        assert_eq!(qtsm.drift(&[2.0]).unwrap()[0], -2.0);
        assert_eq!(qtsm.short_rate(&[2.0]).unwrap(), 4.0);

        let gbm = validate(ModelSpec::<f64>::gbm(0.08, 0.2, 0.05, 100.0)).unwrap();
        assert!((gbm.drift(&[100.0]).unwrap()[0] - 8.0).abs() < 1e-12);
        assert!((gbm.diffusion(&[100.0]).unwrap()[(0, 0)] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn qtsm_rejections() {
        let base: QtsmParams<f64> = QtsmParams {
            b: vec![0.0, 0.0],
            big_b: Matrix::identity(2).scale(-1.0),
            sigma: Matrix::identity(2),
            beta: 0.0,
            alpha: vec![0.0, 0.0],
            gamma: Matrix::identity(2),
        };
        let mut bad_gamma = base.clone();
        bad_gamma.gamma[(1, 1)] = -1.0;
        let err = validate(ModelSpec::qtsm(bad_gamma, vec![0.0, 0.0])).unwrap_err();
        assert_eq!(err.name(), "NonSPDGamma");
        let mut bad_sigma = base;
        bad_sigma.sigma[(1, 1)] = 0.0;
        let err = validate(ModelSpec::qtsm(bad_sigma, vec![0.0, 0.0])).unwrap_err();
        assert_eq!(err.name(), "SingularSigma");
    }

    #[test]
    fn bump_moves_one_parameter() {
        let m = ModelSpec::<f64>::cir(0.1, 0.5, 0.2, 0.04);
        let b = m.bumped(Param::Theta, 0.01).unwrap();
        assert_eq!(b.param_value(Param::Theta).unwrap(), 0.11);
        assert_eq!(b.param_value(Param::A).unwrap(), 0.5);
        assert!(m.bumped(Param::Rho, 0.1).is_err());
        let x = m.bumped(Param::Xi(0), 0.01).unwrap();
        assert!((x.initial_state[0] - 0.05).abs() < 1e-15);
    }
}
