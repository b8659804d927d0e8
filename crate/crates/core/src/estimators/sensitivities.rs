use std::sync::Arc;

use crate::analytic::Measure;
use crate::error::{Error, Result};
use crate::extraction::{eigenpair, Extraction};
use crate::linalg::{dot, Lu, Matrix};
use crate::models::{ModelParams, Param, PayoffSpec, ValidatedModel};
use crate::riccati::QtsmDirection;
use crate::scalar::Scalar;
use crate::sim::{first_variation_vega, lamperti, simulate, Accumulators, GridSpec, McConfig, Scheme, ScoreFn};

use super::catalog::{integrand_gradient, log_payoff_tangent, phi_tangent, qtsm_p_drift_tangent, score_function};
use super::estimate::{mean_se, Clock, Estimate};

/// Per-path pieces of `∂_ε E^{P_ε}[h_ε(X_T^ε)]` with `h = φ⁻¹f`.
pub(crate) struct Channels<S> {
    pub h: Vec<S>,
    /// `∂_ε h_ε(X_T)` at a fixed terminal state.
    pub payoff: Vec<S>,
    /// The change of the path law: score, initial-value and transform terms.
    pub stochastic: Vec<S>,
    pub scheme: Scheme,
    pub antithetic: bool,
}

impl<S: Scalar> Channels<S> {
    fn estimate(&self, samples: &[S], clock: &Clock) -> Estimate<S> {
        let (value, std_error) = mean_se(samples, self.antithetic);
        Estimate {
            value,
            std_error,
            n_paths: samples.len(),
            scheme: self.scheme,
            antithetic: self.antithetic,
            wall_time: clock.elapsed(),
        }
    }
}

/// `h (∂_ε ln f - ∂_ε ln φ)` at each terminal state.
fn payoff_channel<S: Scalar>(
    model: &ValidatedModel<S>,
    ext: &Extraction<S>,
    param: Param,
    h: &[S],
    terminal: impl Fn(usize) -> Vec<S>,
) -> Result<Vec<S>> {
    let tangent = phi_tangent(model, &ext.payoff, param)?;
    let lf = log_payoff_tangent(model, &ext.payoff, param);
    Ok(h.iter()
        .enumerate()
        .map(|(i, &hi)| {
            if hi == S::zero() {
                return S::zero();
            }
            let x = terminal(i);
            let mut d = -tangent.log_value(&x);
            if lf != S::zero() {
                d += lf * x[0].ln();
            }
            hi * d
        })
        .collect())
}

pub(crate) fn lr_channels<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    param: Param,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Channels<S>> {
    let ext = eigenpair(model, payoff)?;
    let score = score_function(model, payoff, param)?;
    let ens = simulate(&ext.p, grid, mc, &Accumulators::none().with_score(score))?;
    let h: Vec<S> = (0..ens.n_paths).map(|i| ext.p_integrand(ens.terminal(i))).collect();
    let stochastic = h.iter().zip(&ens.score_integrals).map(|(&hi, &s)| hi * s).collect();
    let payoff = payoff_channel(model, &ext, param, &h, |i| ens.terminal(i).to_vec())?;
    Ok(Channels { h, payoff, stochastic, scheme: ens.scheme, antithetic: ens.antithetic })
}

/// Channels for the initial-state coordinate `k`; the payoff channel is
/// empty because `h` does not depend on `ξ`.
pub(crate) fn bel_channels<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    k: usize,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Channels<S>> {
    let d = model.dim();
    if k >= d {
        return Err(Error::NotInCatalog(format!("no state coordinate {k} in a {d}-dimensional model")));
    }
    let ext = eigenpair(model, payoff)?;
    let ens = simulate(&ext.p, grid, mc, &Accumulators::none().with_bel())?;
    let inv_t = S::one() / grid.horizon();
    let h: Vec<S> = (0..ens.n_paths).map(|i| ext.p_integrand(ens.terminal(i))).collect();
    let stochastic = h.iter().enumerate().map(|(i, &hi)| hi * ens.bel(i)[k] * inv_t).collect();
    Ok(Channels {
        payoff: vec![S::zero(); h.len()],
        h,
        stochastic,
        scheme: ens.scheme,
        antithetic: ens.antithetic,
    })
}

pub(crate) fn lamperti_channels<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    param: Param,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Channels<S>> {
    let ext = eigenpair(model, payoff)?;
    let lam = Arc::new(lamperti(model, Some(payoff), Measure::P, param)?);
    let l = lam.clone();
    let score: ScoreFn<S> = Arc::new(move |x, out| {
        out[0] = if x[0] > S::zero() { l.score(x[0]) } else { S::zero() };
        Ok(())
    });
    let initial = lam.q_prime != S::zero();
    let mut acc = Accumulators::none().with_score(score);
    if initial {
        acc = acc.with_bel();
    }
    let ens = simulate(&ext.p, grid, mc, &acc)?;
    let xi = ext.xi();
    let sigma_xi = ext.p.sde.diffusion(xi)[(0, 0)];
    let initial_weight = lam.q_prime * lam.sign * sigma_xi / grid.horizon();
    let n = ens.n_paths;
    let h: Vec<S> = (0..n).map(|i| ext.p_integrand(ens.terminal(i))).collect();
    let mut stochastic = Vec::with_capacity(n);
    for i in 0..n {
        let x = ens.terminal(i);
        let mut s = h[i] * ens.score_integrals[i];
        if initial {
            s += initial_weight * h[i] * ens.bel(i)[0];
        }
        let ve = lam.v_eps(lam.u(x[0]));
        if ve != S::zero() {
            s += integrand_gradient(&ext, x)?[0] * ve;
        }
        stochastic.push(s);
    }
    let payoff = payoff_channel(model, &ext, param, &h, |i| ens.terminal(i).to_vec())?;
    Ok(Channels { h, payoff, stochastic, scheme: ens.scheme, antithetic: ens.antithetic })
}

/// Volatility channels of the quadratic model: the pathwise response
/// `∇h(X_T)·Z_T` of the first variation process driven by `σ̄ = ∂_ε σ`,
/// plus a score for the induced change of the transformed drift.
pub(crate) fn variation_channels<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    param: Param,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Channels<S>> {
    let p = match &model.params {
        ModelParams::Qtsm(p) => p,
        _ => {
            return Err(Error::UnsupportedModel(format!(
                "the variation-process vega is implemented for the quadratic model, not {}",
                model.kind()
            )))
        }
    };
    let ext = eigenpair(model, payoff)?;
    let inputs = ext.riccati.as_ref().expect("quadratic extraction carries Riccati data");
    let dir = QtsmDirection::of(p, param)?;
    let (c0, c1) = qtsm_p_drift_tangent(p, inputs, &dir)?;
    let lu = Lu::new(&p.sigma)?;
    let k0 = lu.solve_vec(&c0);
    let k1 = lu.solve(&c1);
    let score: ScoreFn<S> = Arc::new(move |x, out| {
        let kx = k1.matvec(x);
        for (o, (a, b)) in out.iter_mut().zip(k0.iter().zip(kx)) {
            *o = *a + b;
        }
        Ok(())
    });
    let ens = simulate(&ext.p, grid, mc, &Accumulators::none().with_score(score))?;
    let sigma_bar: Matrix<S> = dir.sigma.clone();
    let z = first_variation_vega(&ext.p, Arc::new(move |_x| sigma_bar.clone()), grid, mc)?;
    let d = ext.p.dim();
    let n = ens.n_paths;
    let h: Vec<S> = (0..n).map(|i| ext.p_integrand(ens.terminal(i))).collect();
    let mut stochastic = Vec::with_capacity(n);
    for i in 0..n {
        let grad = integrand_gradient(&ext, ens.terminal(i))?;
        stochastic.push(dot(&grad, &z[i * d..(i + 1) * d]) + h[i] * ens.score_integrals[i]);
    }
    let payoff = payoff_channel(model, &ext, param, &h, |i| ens.terminal(i).to_vec())?;
    Ok(Channels { h, payoff, stochastic, scheme: ens.scheme, antithetic: ens.antithetic })
}

/// Likelihood-ratio estimate of `∂_ε E^{P_ε}[h(X_T^ε)]` with `h = φ⁻¹f`
/// held fixed: the sample mean of `h(X_T) ∫₀ᵀ k̄(X_t) dB_t`.
pub fn rho_lr<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    param: Param,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Estimate<S>> {
    let clock = Clock::start();
    let ch = lr_channels(model, payoff, param, grid, mc)?;
    Ok(ch.estimate(&ch.stochastic, &clock))
}

/// Bismut–Elworthy–Li estimate of `∇_ξ E^P[h(X_T)]`, one entry per state
/// coordinate: `(1/T) E[h(X_T) ∫₀ᵀ (σ⁻¹(X_t) Y_t)ᵀ dB_t]`.
pub fn delta_bel<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Vec<Estimate<S>>> {
    let clock = Clock::start();
    let ext = eigenpair(model, payoff)?;
    let ens = simulate(&ext.p, grid, mc, &Accumulators::none().with_bel())?;
    let inv_t = S::one() / grid.horizon();
    let h: Vec<S> = (0..ens.n_paths).map(|i| ext.p_integrand(ens.terminal(i))).collect();
    Ok((0..model.dim())
        .map(|k| {
            let samples: Vec<S> = h.iter().enumerate().map(|(i, &hi)| hi * ens.bel(i)[k] * inv_t).collect();
            let (value, std_error) = mean_se(&samples, ens.antithetic);
            Estimate {
                value,
                std_error,
                n_paths: ens.n_paths,
                scheme: ens.scheme,
                antithetic: ens.antithetic,
                wall_time: clock.elapsed(),
            }
        })
        .collect())
}

/// Volatility sensitivity of `E^{P_σ}[h(X_T)]` for a one-dimensional model
/// through its Lamperti transform: the drift change of `U` as a score, the
/// move of `U₀ = u_σ(ξ)` through the Bismut–Elworthy–Li weight, and the
/// move of the inverse map at `U_T`. The eigenvalue and eigenfunction
/// channels are left to [`longterm_slope`](super::longterm_slope).
pub fn vega_lamperti<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Estimate<S>> {
    let clock = Clock::start();
    let ch = lamperti_channels(model, payoff, Param::Sigma, grid, mc)?;
    Ok(ch.estimate(&ch.stochastic, &clock))
}

/// Volatility sensitivity of `E^{P_ε}[h(X_T)]` for a quadratic-model
/// volatility entry, from the first variation process `Z` and a score for
/// the induced drift change.
pub fn vega_variation<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    param: Param,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Estimate<S>> {
    let clock = Clock::start();
    let ch = variation_channels(model, payoff, param, grid, mc)?;
    Ok(ch.estimate(&ch.stochastic, &clock))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{validate, ModelSpec};

    #[test]
    fn constant_integrand_gives_zero_rho_and_delta() {
        let m = validate(ModelSpec::<f64>::gbm(0.08, 0.2, 0.05, 100.0)).unwrap();
        let pay = PayoffSpec::power(0.5);
        let grid = GridSpec::new(5.0, 50).unwrap();
        let mc = McConfig::new(20_000, 5);
        let r = rho_lr(&m, &pay, Param::Mu, &grid, &mc).unwrap();
        assert!(r.value.abs() <= 3.0 * r.std_error, "{r}");
        let d = delta_bel(&m, &pay, &grid, &mc).unwrap();
        assert!(d[0].value.abs() <= 3.0 * d[0].std_error, "{}", d[0]);
        let z = rho_lr(&m, &pay, Param::R, &grid, &mc).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn vega_for_power_payoff_is_a_martingale_increment() {
        let m = validate(ModelSpec::<f64>::gbm(0.08, 0.2, 0.05, 100.0)).unwrap();
        let grid = GridSpec::new(10.0, 100).unwrap();
        let v = vega_lamperti(&m, &PayoffSpec::power(0.5), &grid, &McConfig::new(20_000, 9)).unwrap();
        assert!(v.value.abs() <= 3.0 * v.std_error, "{v}");
    }

    #[test]
    fn variation_vega_rejects_scalar_models() {
        let m = validate(ModelSpec::<f64>::cir(0.1, 0.5, 0.2, 0.04)).unwrap();
        let grid = GridSpec::new(1.0, 10).unwrap();
        let err = vega_variation(&m, &PayoffSpec::bond(), Param::Sigma, &grid, &McConfig::new(10, 1));
        assert_eq!(err.unwrap_err().name(), "UnsupportedModel");
    }
}
