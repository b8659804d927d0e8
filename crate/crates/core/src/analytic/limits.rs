//! Closed-form long-horizon sensitivity limits.

use crate::analytic::heston::heston_reduction;
use crate::error::{Error, Result};
use crate::extraction::{heston_constants, three_halves_constants};
use crate::models::{
    CirParams, ModelKind, ModelParams, Param, Payoff, PayoffSpec, ValidatedModel,
};
use crate::riccati::{lambda_prime_numeric, qtsm_extraction_inputs};
use crate::scalar::Scalar;

/// Whether a limit is per unit horizon or instantaneous.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitKind {
    /// `lim (1/T) ∂ ln p_T`.
    PerYear,
    /// `lim ∂ ln p_T` for initial-state parameters.
    Instant,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityLimit<S> {
    pub model: ModelKind,
    pub param: Param,
    pub kind: LimitKind,
    pub value: S,
}

fn missing<S>(kind: ModelKind, param: Param) -> Result<S> {
    Err(Error::NotInCatalog(format!("no closed-form limit for {param} in {kind}")))
}

fn power_exponent<S: Scalar>(payoff: &PayoffSpec<S>) -> S {
    match payoff.payoff {
        Payoff::Power { alpha } | Payoff::PowerCall { alpha, .. } => alpha,
        _ => S::zero(),
    }
}

/// `(θ, a, σ)` limits of the CIR model and the instant `r₀` limit, in that
/// order: `-κ`, `θ(b-a)/(σ²b)`, `θ(b-a)²/(σ³b)`, `-κ`.
pub fn cir_limits<S: Scalar>(p: &CirParams<S>) -> [S; 4] {
    let s2 = p.sigma * p.sigma;
    let b = (p.a * p.a + S::two() * s2).sqrt();
    let bma = S::two() * s2 / (b + p.a);
    let kappa = bma / s2;
    [
        -kappa,
        p.theta * bma / (s2 * b),
        p.theta * bma * bma / (s2 * p.sigma * b),
        -kappa,
    ]
}

/// Heston limits in closed form, for parameters
/// `(μ, γ, β, δ, ρ, x₀, v₀)`.
pub fn heston_limit<S: Scalar>(
    p: &crate::models::HestonParams<S>,
    alpha: S,
    x0: S,
    param: Param,
) -> Result<(LimitKind, S)> {
    let (_, s, psi) = heston_constants(p.beta, p.delta, p.rho, alpha);
    // S - a
    let gap = psi * p.delta * p.delta;
    let d2 = p.delta * p.delta;
    let g = p.gamma;
    Ok(match param {
        Param::Mu => (LimitKind::PerYear, alpha),
        Param::Gamma => (LimitKind::PerYear, -psi),
        Param::Beta => (LimitKind::PerYear, g * gap / (d2 * s)),
        Param::Delta => (
            LimitKind::PerYear,
            -p.rho * alpha * g * gap / (d2 * s) + g * gap * gap / (d2 * p.delta * s),
        ),
        Param::Rho => (LimitKind::PerYear, -alpha * g * gap / (p.delta * s)),
        Param::Xi(0) => (LimitKind::Instant, alpha / x0),
        Param::Xi(1) => (LimitKind::Instant, -psi),
        _ => return missing(ModelKind::Heston, param),
    })
}

/// The same Heston limits assembled from the reduced CIR limits and the
/// reduction Jacobian.
pub fn heston_limit_by_chain_rule<S: Scalar>(
    p: &crate::models::HestonParams<S>,
    alpha: S,
    x0: S,
    v0: S,
    param: Param,
) -> Result<(LimitKind, S)> {
    let red = heston_reduction(p, alpha, v0)?;
    let [lt, la, ls, lr0] = cir_limits(&red.cir);
    let j = &red.jacobian;
    let per_year = |col: usize| lt * j[(0, col)] + la * j[(1, col)] + ls * j[(2, col)];
    Ok(match param {
        Param::Mu => (LimitKind::PerYear, alpha),
        Param::Gamma => (LimitKind::PerYear, per_year(0)),
        Param::Beta => (LimitKind::PerYear, per_year(1)),
        Param::Delta => (LimitKind::PerYear, per_year(2)),
        Param::Rho => (LimitKind::PerYear, per_year(3)),
        Param::Xi(0) => (LimitKind::Instant, alpha / x0),
        Param::Xi(1) => (LimitKind::Instant, lr0 * j[(3, 4)]),
        _ => return missing(ModelKind::Heston, param),
    })
}

/// Closed-form limit of `(1/T) ∂ ln p_T` (or `∂ ln p_T` for initial-state
/// parameters) as `T → ∞`.
pub fn sensitivity_limit<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    param: Param,
) -> Result<SensitivityLimit<S>> {
    model.check_payoff(payoff)?;
    let kind = model.kind();
    let xi = model.xi();
    let per_year = |value| Ok((LimitKind::PerYear, value));
    let (lk, value) = match &model.params {
        ModelParams::Gbm(p) => {
            let alpha = power_exponent(payoff);
            match param {
                Param::Mu => per_year(alpha),
                Param::Sigma => per_year(p.sigma * alpha * (alpha - S::one())),
                Param::R => per_year(-S::one()),
                Param::Xi(0) => Ok((LimitKind::Instant, alpha / xi[0])),
                _ => missing(kind, param),
            }
        }
        ModelParams::Cir(p) => {
            let [lt, la, ls, lr0] = cir_limits(p);
            match param {
                Param::Theta => per_year(lt),
                Param::A => per_year(la),
                Param::Sigma => per_year(ls),
                Param::Xi(0) => Ok((LimitKind::Instant, lr0)),
                _ => missing(kind, param),
            }
        }
        ModelParams::Qtsm(p) => match param {
            Param::Xi(i) if i < p.dim() => {
                let inputs = qtsm_extraction_inputs(p)?;
                let vxi = inputs.v.matvec(xi);
                Ok((LimitKind::Instant, -inputs.u[i] - S::two() * vxi[i]))
            }
            Param::Beta
            | Param::B(_)
            | Param::BigB(..)
            | Param::SigmaEntry(..)
            | Param::AlphaVec(_)
            | Param::GammaScale => {
                per_year(-lambda_prime_numeric(p, param, None)?.extrapolated)
            }
            _ => missing(kind, param),
        },
        ModelParams::Heston(p) => {
            let alpha = power_exponent(payoff);
            heston_limit(p, alpha, xi[0], param)
        }
        ModelParams::ThreeHalves(p) => {
            let guard = p.a / (p.sigma * p.sigma) + S::one() - p.alpha * p.leverage;
            if !(guard > S::zero()) {
                return Err(Error::GuardViolated(format!(
                    "a/sigma^2 + 1 - alpha*leverage = {guard} is not positive"
                )));
            }
            let (_, s3, ell) = three_halves_constants(p.a, p.sigma, p.alpha, p.leverage);
            let (al, be) = (p.alpha, p.leverage);
            let s3x2 = S::two() * s3;
            match param {
                Param::Theta => per_year(-ell),
                Param::A => per_year(p.theta * ell / (p.sigma * p.sigma * s3)),
                Param::Sigma => per_year(
                    -S::two() * p.a * p.theta * ell / (p.sigma * p.sigma * p.sigma * s3),
                ),
                Param::R => per_year(-al * (be - S::one())),
                Param::Alpha => per_year(
                    -p.theta * be * (be - S::one()) / s3x2 - p.r * (be - S::one()),
                ),
                Param::Leverage => per_year(
                    -p.theta * al * (S::two() * be - S::one()) / s3x2 - p.r * al,
                ),
                Param::Xi(0) => Ok((LimitKind::Instant, -ell / xi[0])),
                _ => missing(kind, param),
            }
        }
    }?;
    Ok(SensitivityLimit { model: kind, param, kind: lk, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::eigenpair;
    use crate::linalg::Matrix;
    use crate::models::{validate, HestonParams, ModelSpec, QtsmParams};

    fn limit(spec: ModelSpec<f64>, payoff: PayoffSpec<f64>, param: Param) -> f64 {
        sensitivity_limit(&validate(spec).unwrap(), &payoff, param).unwrap().value
    }

    /// `-∂λ/∂param` by central differences of the eigenpair.
    fn lambda_bump(spec: &ModelSpec<f64>, payoff: impl Fn(&ModelSpec<f64>) -> PayoffSpec<f64>, param: Param) -> f64 {
        let h = 1e-6 * (1.0 + spec.param_value(param).unwrap().abs());
        let lam = |s: ModelSpec<f64>| {
            let p = payoff(&s);
            eigenpair(&validate(s).unwrap(), &p).unwrap().lambda
        };
        -(lam(spec.bumped(param, h).unwrap()) - lam(spec.bumped(param, -h).unwrap())) / (2.0 * h)
    }

    #[test]
    fn spec_examples() {
        let gbm = ModelSpec::<f64>::gbm(0.08, 0.2, 0.05, 100.0);
        assert_eq!(limit(gbm.clone(), PayoffSpec::<f64>::power(0.5), Param::Mu), 0.5);
        assert!((limit(gbm, PayoffSpec::<f64>::power(0.5), Param::Sigma) + 0.05).abs() < 1e-15);
        let cir = ModelSpec::<f64>::cir(0.1, 0.5, 0.2, 0.04);
        assert!((limit(cir, PayoffSpec::<f64>::bond(), Param::Theta) + 1.861407).abs() < 1e-6);
        let heston = ModelSpec::<f64>::heston(0.08, 0.09, 2.0, 0.3, -0.5, 1.0, 0.04);
        let g = limit(heston, PayoffSpec::<f64>::power(0.5), Param::Gamma);
        assert!((g + 0.060_162_468_185).abs() < 1e-11, "{g}");
    }

    #[test]
    fn closed_forms_match_lambda_bumps() {
        let cases: Vec<(ModelSpec<f64>, Vec<Param>)> = vec![
            (ModelSpec::<f64>::gbm(0.08, 0.2, 0.05, 100.0), vec![Param::Mu, Param::Sigma, Param::R]),
            (ModelSpec::<f64>::cir(0.1, 0.5, 0.2, 0.04), vec![Param::Theta, Param::A, Param::Sigma]),
            (
                ModelSpec::<f64>::heston(0.08, 0.09, 2.0, 0.3, -0.5, 1.0, 0.04),
                vec![Param::Mu, Param::Gamma, Param::Beta, Param::Delta, Param::Rho],
            ),
            (
                ModelSpec::<f64>::three_halves(2.0, 1.0, 0.5, 0.03, 2.0, 0.5, 1.0),
                vec![Param::Theta, Param::A, Param::Sigma, Param::R, Param::Alpha, Param::Leverage],
            ),
        ];
        for (spec, params) in cases {
            let payoff = |s: &ModelSpec<f64>| match &s.params {
                ModelParams::ThreeHalves(p) => PayoffSpec::<f64>::letf_utility(p.alpha, p.leverage),
                ModelParams::Cir(_) => PayoffSpec::<f64>::bond(),
                _ => PayoffSpec::<f64>::power(0.5),
            };
            for param in params {
                let closed = limit(spec.clone(), payoff(&spec), param);
                let bump = lambda_bump(&spec, payoff, param);
                assert!((closed - bump).abs() < 1e-6, "{} {param}: {closed} vs {bump}", spec.kind());
            }
        }
    }

    #[test]
    fn heston_chain_rule_assembly() {
        let p: HestonParams<f64> = HestonParams { mu: 0.08, gamma: 0.09, beta: 2.0, delta: 0.3, rho: -0.5 };
        for param in [
            Param::Mu,
            Param::Gamma,
            Param::Beta,
            Param::Delta,
            Param::Rho,
            Param::Xi(0),
            Param::Xi(1),
        ] {
            let (k1, direct) = heston_limit(&p, 0.5, 1.0, param).unwrap();
            let (k2, chain) = heston_limit_by_chain_rule(&p, 0.5, 1.0, 0.04, param).unwrap();
            assert_eq!(k1, k2);
            assert!((direct - chain).abs() < 1e-10, "{param}: {direct} vs {chain}");
        }
    }

    #[test]
    fn qtsm_delta_limit() {
        let p: QtsmParams<f64> = QtsmParams {
            b: vec![1.0],
            big_b: Matrix::scalar(0.0),
            sigma: Matrix::scalar(1.0),
            beta: 0.0,
            alpha: vec![0.0],
            gamma: Matrix::scalar(1.0),
        };
        let spec = ModelSpec::<f64>::qtsm(p, vec![0.5]);
        let v = limit(spec, PayoffSpec::<f64>::bump(vec![0.0], 1.0, 1.0), Param::Xi(0));
        assert!((v - (-1.0 - 2.0 * 0.5f64.sqrt() * 0.5)).abs() < 1e-13);
    }

    #[test]
    fn three_halves_guard() {
        let spec = ModelSpec::<f64>::three_halves(2.0, 0.1, 0.5, 0.0, 3.0, 1.0, 1.0);
        let m = validate(spec).unwrap();
        let err = sensitivity_limit(&m, &PayoffSpec::<f64>::letf_utility(1.0, 3.0), Param::Theta);
        assert_eq!(err.unwrap_err().name(), "GuardViolated");
    }
}
