//! Closed-form score functions `k̄ = σ⁻¹ ∂_ε(b + σϕ)` under the transformed
//! measure, together with the first-order response of the eigenfunction
//! and the payoff to a parameter move.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extraction::{eigenpair, heston_constants, three_halves_constants, EigenFunction, Extraction};
use crate::linalg::{Lu, Matrix};
use crate::models::{validate, ModelParams, Param, Payoff, PayoffSpec, QtsmParams, ValidatedModel};
use crate::riccati::{qtsm_tangent, QtsmDirection, QtsmInputs};
use crate::scalar::Scalar;
use crate::sim::ScoreFn;

/// The payoff with any model-tied exponents replaced by the model's own.
/// The leveraged-fund utility carries the 3/2 model's `α` and leverage.
pub fn aligned_payoff<S: Scalar>(model: &ValidatedModel<S>, payoff: &PayoffSpec<S>) -> PayoffSpec<S> {
    match (&model.params, &payoff.payoff) {
        (ModelParams::ThreeHalves(p), Payoff::LetfUtility { .. }) => {
            PayoffSpec::letf_utility(p.alpha, p.leverage).with_growth(payoff.growth)
        }
        _ => payoff.clone(),
    }
}

/// The model moved by `h` along `param`, revalidated, with its aligned
/// payoff.
pub fn bumped<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    param: Param,
    h: S,
) -> Result<(ValidatedModel<S>, PayoffSpec<S>)> {
    let moved = validate(model.spec().bumped(param, h)?)?;
    let pay = aligned_payoff(&moved, payoff);
    Ok((moved, pay))
}

fn missing<T>(model: &ValidatedModel<impl Scalar>, param: Param) -> Result<T> {
    Err(Error::MissingScoreFunction(format!(
        "no closed-form score for {param} in {}; use finite differences or the volatility estimators",
        model.kind()
    )))
}

/// Drift response `ḃ_P(x) = c₀ + C₁ x` of the quadratic model's
/// transformed dynamics, including the volatility channel through `a`.
pub(crate) fn qtsm_p_drift_tangent<S: Scalar>(
    p: &QtsmParams<S>,
    inputs: &QtsmInputs<S>,
    dir: &QtsmDirection<S>,
) -> Result<(Vec<S>, Matrix<S>)> {
    let t = qtsm_tangent(p, inputs, dir)?;
    let a = p.a();
    let da = &(&dir.sigma * &p.sigma.transpose()) + &(&p.sigma * &dir.sigma.transpose());
    let au = a.matvec(&t.u);
    let dau = da.matvec(&inputs.u);
    let c0: Vec<S> = (0..p.dim()).map(|i| dir.b[i] - au[i] - dau[i]).collect();
    let c1 = &dir.big_b - &(&(&da * &inputs.v) + &(&a * &t.v)).scale(S::two());
    Ok((c0, c1))
}

/// `k̄(x)` for a drift parameter, evaluated under the transformed measure
/// of the catalog extraction for `payoff`.
///
/// Volatility parameters and initial-state coordinates have no score and
/// return [`Error::MissingScoreFunction`]. At states outside the domain,
/// as produced by truncated Euler schemes, the score is zero.
pub fn score_function<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    param: Param,
) -> Result<ScoreFn<S>> {
    let zero = S::zero();
    let score: ScoreFn<S> = match &model.params {
        ModelParams::Gbm(p) => {
            let k = match param {
                Param::Mu => S::one() / p.sigma,
                Param::R => zero,
                _ => return missing(model, param),
            };
            Arc::new(move |_x, out| {
                out[0] = k;
                Ok(())
            })
        }
        ModelParams::Cir(p) => {
            let sigma = p.sigma;
            let b = (p.a * p.a + S::two() * sigma * sigma).sqrt();
            match param {
                Param::Theta => Arc::new(move |x, out| {
                    out[0] = if x[0] > zero { S::one() / (sigma * x[0].sqrt()) } else { zero };
                    Ok(())
                }),
                Param::A => {
                    let c = -p.a / (sigma * b);
                    Arc::new(move |x, out| {
                        out[0] = c * x[0].max(zero).sqrt();
                        Ok(())
                    })
                }
                _ => return missing(model, param),
            }
        }
        ModelParams::Qtsm(p) => {
            if matches!(param, Param::SigmaEntry(..) | Param::Xi(_)) {
                return missing(model, param);
            }
            let ext = eigenpair(model, payoff)?;
            let inputs = ext.riccati.as_ref().expect("quadratic extraction carries Riccati data");
            let dir = QtsmDirection::of(p, param)?;
            let (c0, c1) = qtsm_p_drift_tangent(p, inputs, &dir)?;
            let lu = Lu::new(&p.sigma)?;
            let k0 = lu.solve_vec(&c0);
            let k1 = lu.solve(&c1);
            Arc::new(move |x, out| {
                let kx = k1.matvec(x);
                for (o, (a, b)) in out.iter_mut().zip(k0.iter().zip(kx)) {
                    *o = *a + b;
                }
                Ok(())
            })
        }
        ModelParams::Heston(p) => {
            let alpha = heston_exponent(payoff)?;
            let (a, s, psi) = heston_constants(p.beta, p.delta, p.rho, alpha);
            let (rho, delta) = (p.rho, p.delta);
            let rbar = (S::one() - rho * rho).sqrt();
            // Solves σ(x) k = (d₀, d₁) with the lower-triangular Heston σ.
            let solve = move |x: &[S], d0: S, d1: S, out: &mut [S]| {
                if !(x[1] > zero) {
                    out[0] = zero;
                    out[1] = zero;
                    return;
                }
                let sv = x[1].sqrt();
                let k0 = d0 / (sv * x[0]);
                out[0] = k0;
                out[1] = (d1 - rho * delta * sv * k0) / (rbar * delta * sv);
            };
            match param {
                Param::Mu => Arc::new(move |x, out| {
                    solve(x, x[0], zero, out);
                    Ok(())
                }),
                Param::Gamma => Arc::new(move |x, out| {
                    solve(x, zero, S::one(), out);
                    Ok(())
                }),
                Param::Beta => Arc::new(move |x, out| {
                    let v = x[1].max(zero);
                    solve(x, x[0] * v * rho * delta * psi / s, -(a / s) * v, out);
                    Ok(())
                }),
                _ => return missing(model, param),
            }
        }
        ModelParams::ThreeHalves(p) => {
            let (_, s3, ell) = three_halves_constants(p.a, p.sigma, p.alpha, p.leverage);
            let sigma = p.sigma;
            let ell_k = S::half() / s3;
            let c = match param {
                Param::Theta => {
                    return Ok(Arc::new(move |x, out| {
                        out[0] = if x[0] > zero { S::one() / (sigma * x[0].sqrt()) } else { zero };
                        Ok(())
                    }))
                }
                Param::A => {
                    let ell_a = -ell / (s3 * sigma * sigma);
                    -(S::one() + sigma * sigma * ell_a) / sigma
                }
                Param::Alpha => -sigma * ell_k * p.leverage * (p.leverage - S::one()),
                Param::Leverage => -sigma * ell_k * p.alpha * (S::two() * p.leverage - S::one()),
                Param::R => zero,
                _ => return missing(model, param),
            };
            Arc::new(move |x, out| {
                out[0] = c * x[0].max(zero).sqrt();
                Ok(())
            })
        }
    };
    Ok(score)
}

fn heston_exponent<S: Scalar>(payoff: &PayoffSpec<S>) -> Result<S> {
    match payoff.payoff {
        Payoff::Power { alpha } => Ok(alpha),
        _ => Err(Error::InvalidPayoff("Heston needs a power utility payoff".into())),
    }
}

/// Coefficients of `∂_ε ln φ_ε` in the log-polynomial basis, so that
/// `tangent.log_value(x)` is the eigenfunction's log-derivative at `x`.
///
/// The quadratic model uses the implicit Riccati tangent; the scalar
/// catalogs use central differences of their closed-form coefficients.
pub fn phi_tangent<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    param: Param,
) -> Result<EigenFunction<S>> {
    let d = model.dim();
    if param.is_initial_state() {
        return Ok(EigenFunction::power(vec![S::zero(); d]));
    }
    if let ModelParams::Qtsm(p) = &model.params {
        let ext = eigenpair(model, payoff)?;
        let inputs = ext.riccati.as_ref().expect("quadratic extraction carries Riccati data");
        let t = qtsm_tangent(p, inputs, &QtsmDirection::of(p, param)?)?;
        return Ok(EigenFunction::new(
            vec![S::zero(); d],
            t.u.iter().map(|&u| -u).collect(),
            t.v.scale(-S::one()),
        ));
    }
    let h = S::c(1e-6) * (S::one() + model.spec().param_value(param)?.abs());
    let at = |step: S| -> Result<Extraction<S>> {
        let (m, pay) = bumped(model, payoff, param, step)?;
        eigenpair(&m, &pay)
    };
    let up = at(h)?.phi;
    let down = at(-h)?.phi;
    let diff = |a: &[S], b: &[S]| -> Vec<S> {
        a.iter().zip(b).map(|(&x, &y)| (x - y) / (S::two() * h)).collect()
    };
    Ok(EigenFunction::new(
        diff(&up.log_powers, &down.log_powers),
        diff(&up.linear, &down.linear),
        (&up.quadratic - &down.quadratic).scale(S::one() / (S::two() * h)),
    ))
}

/// `c` in `∂_ε ln f(x) = c ln x₀`: nonzero only for the leveraged-fund
/// utility, whose exponent `αβ` moves with the model's `α` and leverage.
pub fn log_payoff_tangent<S: Scalar>(model: &ValidatedModel<S>, payoff: &PayoffSpec<S>, param: Param) -> S {
    match (&model.params, &payoff.payoff) {
        (ModelParams::ThreeHalves(p), Payoff::LetfUtility { .. }) => match param {
            Param::Alpha => p.leverage,
            Param::Leverage => p.alpha,
            _ => S::zero(),
        },
        _ => S::zero(),
    }
}

/// Gradient of `h = φ⁻¹f` at `x`.
pub(crate) fn integrand_gradient<S: Scalar>(ext: &Extraction<S>, x: &[S]) -> Result<Vec<S>> {
    let grad_f = ext.payoff.gradient(x)?;
    let f = ext.payoff.eval(x);
    let g = ext.log_phi_gradient(x);
    let inv_phi = (-ext.phi.log_value(x)).exp();
    Ok(grad_f.iter().zip(&g).map(|(&df, &dg)| inv_phi * (df - f * dg)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    fn p_drift_change(model: &ValidatedModel<f64>, payoff: &PayoffSpec<f64>, param: Param, x: &[f64]) -> Vec<f64> {
        let h = 1e-6 * (1.0 + model.spec().param_value(param).unwrap().abs());
        let drift = |s: f64| {
            let (m, pay) = bumped(model, payoff, param, s).unwrap();
            eigenpair(&m, &pay).unwrap().p.sde.drift(x)
        };
        let up = drift(h);
        let down = drift(-h);
        up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    }

    fn check_scores(spec: ModelSpec<f64>, payoff: PayoffSpec<f64>, params: &[Param], x: &[f64]) {
        let model = validate(spec).unwrap();
        let sigma = model.q_dynamics().sde.diffusion(x);
        for &param in params {
            let k = score_function(&model, &payoff, param).unwrap();
            let mut out = vec![0.0; x.len()];
            k(x, &mut out).unwrap();
            let got = sigma.matvec(&out);
            let want = p_drift_change(&model, &payoff, param, x);
            for i in 0..x.len() {
                assert!((got[i] - want[i]).abs() < 1e-6 * (1.0 + want[i].abs()), "{} {param}: {got:?} vs {want:?}", model.kind());
            }
        }
    }

    #[test]
    fn scores_reproduce_transformed_drift_changes() {
        check_scores(ModelSpec::gbm(0.08, 0.2, 0.05, 100.0), PayoffSpec::power(0.5), &[Param::Mu, Param::R], &[80.0]);
        check_scores(ModelSpec::cir(0.1, 0.5, 0.2, 0.04), PayoffSpec::bond(), &[Param::Theta, Param::A], &[0.07]);
        check_scores(
            ModelSpec::heston(0.08, 0.09, 2.0, 0.3, -0.5, 1.0, 0.04),
            PayoffSpec::power(0.5),
            &[Param::Mu, Param::Gamma, Param::Beta],
            &[1.3, 0.05],
        );
        check_scores(
            ModelSpec::three_halves(2.0, 1.0, 0.5, 0.03, 2.0, 0.5, 1.0),
            PayoffSpec::letf_utility(0.5, 2.0),
            &[Param::Theta, Param::A, Param::Alpha, Param::Leverage, Param::R],
            &[0.8],
        );
        let q = QtsmParams {
            b: vec![0.1, -0.2],
            big_b: Matrix::from_rows(&[vec![-1.0, 0.2], vec![0.1, -0.7]]).unwrap(),
            sigma: Matrix::from_rows(&[vec![0.3, 0.0], vec![0.1, 0.4]]).unwrap(),
            beta: 0.01,
            alpha: vec![0.02, 0.01],
            gamma: Matrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.3]]).unwrap(),
        };
        check_scores(
            ModelSpec::qtsm(q, vec![0.1, 0.2]),
            PayoffSpec::bump(vec![0.0, 0.0], 1.0, 1.0),
            &[Param::B(0), Param::BigB(1, 0), Param::AlphaVec(1), Param::Beta, Param::GammaScale],
            &[0.3, -0.4],
        );
    }

    #[test]
    fn volatility_parameters_have_no_score() {
        let m = validate(ModelSpec::<f64>::cir(0.1, 0.5, 0.2, 0.04)).unwrap();
        let err = score_function(&m, &PayoffSpec::bond(), Param::Sigma).err().unwrap();
        assert_eq!(err.name(), "MissingScoreFunction");
    }

    #[test]
    fn qtsm_phi_tangent_matches_bumped_coefficients() {
        let q = QtsmParams {
            b: vec![0.1],
            big_b: Matrix::scalar(-0.8),
            sigma: Matrix::scalar(0.3),
            beta: 0.0,
            alpha: vec![0.05],
            gamma: Matrix::scalar(0.4),
        };
        let m = validate(ModelSpec::qtsm(q, vec![0.2])).unwrap();
        let pay = PayoffSpec::bump(vec![0.0], 1.0, 1.0);
        for param in [Param::B(0), Param::SigmaEntry(0, 0), Param::GammaScale] {
            let t = phi_tangent(&m, &pay, param).unwrap();
            let h = 1e-6;
            let (up, pu) = bumped(&m, &pay, param, h).unwrap();
            let (dn, pd) = bumped(&m, &pay, param, -h).unwrap();
            let x = [0.37];
            let fd: f64 = (eigenpair(&up, &pu).unwrap().phi.log_value(&x)
                - eigenpair(&dn, &pd).unwrap().phi.log_value(&x))
                / (2.0 * h);
            assert!((t.log_value(&x) - fd).abs() < 1e-7, "{param}");
        }
    }

    #[test]
    fn integrand_gradient_matches_difference() {
        let m = validate(ModelSpec::<f64>::cir(0.1, 0.5, 0.2, 0.04)).unwrap();
        let ext = eigenpair(&m, &PayoffSpec::power_call(1.0, 0.03)).unwrap();
        let x = [0.06];
        let g = integrand_gradient(&ext, &x).unwrap()[0];
        let e = 1e-7;
        let fd = (ext.p_integrand(&[x[0] + e]) - ext.p_integrand(&[x[0] - e])) / (2.0 * e);
        assert!((g - fd).abs() < 1e-6);
    }
}
