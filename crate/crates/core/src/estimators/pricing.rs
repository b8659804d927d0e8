use crate::analytic::Measure;
use crate::error::{Error, Result};
use crate::extraction::eigenpair;
use crate::models::{Param, PayoffSpec, ValidatedModel};
use crate::riccati::richardson_consistent;
use crate::scalar::Scalar;
use crate::sim::{simulate, Accumulators, GridSpec, McConfig, Scheme};

use super::catalog::{aligned_payoff, bumped};
use super::estimate::{log_ratio_independent, log_ratio_paired, mean_se, Clock, Estimate};

/// Per-path price contributions and the run metadata.
pub(crate) struct PriceSamples<S> {
    pub samples: Vec<S>,
    pub scheme: Scheme,
    pub antithetic: bool,
}

/// `e^{-∫r} f(X_T)` per path under the pricing measure.
pub(crate) fn q_samples<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<PriceSamples<S>> {
    model.check_payoff(payoff)?;
    let dynamics = model.q_dynamics();
    let acc = if dynamics.rate.is_zero() { Accumulators::none() } else { Accumulators::discount() };
    let ens = simulate(&dynamics, grid, mc, &acc)?;
    let samples = (0..ens.n_paths)
        .map(|i| {
            let f = payoff.eval(ens.terminal(i));
            match ens.discount_integrals.get(i) {
                Some(&d) if f != S::zero() => (-d).exp() * f,
                _ => f,
            }
        })
        .collect();
    Ok(PriceSamples { samples, scheme: ens.scheme, antithetic: ens.antithetic })
}

/// `φ(ξ) e^{-λT} φ⁻¹f(X_T)` per path under the transformed measure.
pub(crate) fn p_samples<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<PriceSamples<S>> {
    let ext = eigenpair(model, payoff)?;
    let ens = simulate(&ext.p, grid, mc, &Accumulators::none())?;
    let prefactor = ext.decompose_price(S::one(), grid.horizon());
    let samples = (0..ens.n_paths).map(|i| prefactor * ext.p_integrand(ens.terminal(i))).collect();
    Ok(PriceSamples { samples, scheme: ens.scheme, antithetic: ens.antithetic })
}

fn finish<S: Scalar>(s: PriceSamples<S>, clock: Clock) -> Estimate<S> {
    let (value, std_error) = mean_se(&s.samples, s.antithetic);
    Estimate {
        value,
        std_error,
        n_paths: s.samples.len(),
        scheme: s.scheme,
        antithetic: s.antithetic,
        wall_time: clock.elapsed(),
    }
}

/// `p_T = E[e^{-∫₀ᵀ r(X_t) dt} f(X_T)]` by direct simulation.
pub fn price_q<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Estimate<S>> {
    let clock = Clock::start();
    Ok(finish(q_samples(model, payoff, grid, mc)?, clock))
}

/// `p_T = φ(ξ) e^{-λT} E^P[φ⁻¹f(X_T)]` by simulating the transformed
/// dynamics.
pub fn price_p<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Estimate<S>> {
    let clock = Clock::start();
    Ok(finish(p_samples(model, payoff, grid, mc)?, clock))
}

/// A price functional that finite differences can re-evaluate at moved
/// parameters.
#[derive(Clone, Debug)]
pub struct Pricer<'a, S> {
    pub model: &'a ValidatedModel<S>,
    pub payoff: &'a PayoffSpec<S>,
    pub grid: GridSpec<S>,
    pub mc: McConfig,
    /// [`Measure::Q`] prices by [`price_q`], [`Measure::P`] by [`price_p`].
    pub measure: Measure,
}

impl<'a, S: Scalar> Pricer<'a, S> {
    pub fn new(model: &'a ValidatedModel<S>, payoff: &'a PayoffSpec<S>, grid: GridSpec<S>, mc: McConfig) -> Self {
        Self { model, payoff, grid, mc, measure: Measure::P }
    }

    pub fn with_measure(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }

    pub fn price(&self) -> Result<Estimate<S>> {
        let payoff = aligned_payoff(self.model, self.payoff);
        match self.measure {
            Measure::Q => price_q(self.model, &payoff, &self.grid, &self.mc),
            Measure::P => price_p(self.model, &payoff, &self.grid, &self.mc),
        }
    }

    fn samples_at(&self, param: Param, h: S, seed: u64) -> Result<PriceSamples<S>> {
        let (model, payoff) = bumped(self.model, self.payoff, param, h)?;
        let mc = McConfig { seed, ..self.mc.clone() };
        match self.measure {
            Measure::Q => q_samples(&model, &payoff, &self.grid, &mc),
            Measure::P => p_samples(&model, &payoff, &self.grid, &mc),
        }
    }
}

/// Finite-difference settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdOptions<S> {
    /// Step; `None` uses `1e-4 (1 + |param|)`.
    pub h: Option<S>,
    /// Common random numbers: both legs reuse the seed.
    pub crn: bool,
    /// Also evaluate at `h/2` and `h/4` and reject steps whose differences
    /// are not second-order consistent.
    pub richardson: bool,
}

impl<S> Default for FdOptions<S> {
    fn default() -> Self {
        Self { h: None, crn: true, richardson: false }
    }
}

pub fn default_fd_step<S: Scalar>(value: S) -> S {
    S::c(1e-4) * (S::one() + value.abs())
}

/// Central difference of `ln p` along `param`: `(ln p(+h) - ln p(-h)) / 2h`.
///
/// With common random numbers the error is computed from the linearised
/// per-path differences; otherwise the minus leg runs on `seed + 1` and
/// the two legs are treated as independent.
pub fn fd_sensitivity<S: Scalar>(pricer: &Pricer<'_, S>, param: Param, opts: FdOptions<S>) -> Result<Estimate<S>> {
    let clock = Clock::start();
    let h = match opts.h {
        Some(h) => h,
        None => default_fd_step(pricer.model.spec().param_value(param)?),
    };
    if !(h > S::zero()) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {h}")));
    }
    let central = |step: S| -> Result<(S, S, PriceSamples<S>)> {
        let seed = pricer.mc.seed;
        let plus = pricer.samples_at(param, step, seed)?;
        let minus_seed = if opts.crn { seed } else { seed.wrapping_add(1) };
        let minus = pricer.samples_at(param, -step, minus_seed)?;
        let (diff, se) = if opts.crn {
            log_ratio_paired(&plus.samples, &minus.samples, plus.antithetic)
        } else {
            log_ratio_independent(&plus.samples, &minus.samples, plus.antithetic)
        };
        let scale = S::two() * step;
        Ok((diff / scale, se / scale, plus))
    };
    let (value, std_error, meta) = central(h)?;
    if opts.richardson {
        let (d2, _, _) = central(h * S::half())?;
        let (d4, _, _) = central(h * S::c(0.25))?;
        if !richardson_consistent(value, d2, d4) {
            return Err(Error::StepTooLarge(format!(
                "finite differences {value:e}, {d2:e}, {d4:e} at h = {h:e} are not O(h^2) consistent"
            )));
        }
    }
    Ok(Estimate {
        value,
        std_error,
        n_paths: meta.samples.len(),
        scheme: meta.scheme,
        antithetic: meta.antithetic,
        wall_time: clock.elapsed(),
    })
}
