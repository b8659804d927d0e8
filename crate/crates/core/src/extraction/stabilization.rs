use std::fmt;

use crate::analytic::quadrature::{integrate_half_line, Tolerance};
use crate::analytic::{cir_invariant_density, cir_payoff_expectation, CirDensity, Measure};
use crate::error::{Error, Result};
use crate::estimators::mean_se;
use crate::models::{Growth, ModelParams, PayoffSpec, Sde, ValidatedModel};
use crate::scalar::Scalar;
use crate::sim::{simulate, Accumulators, GridSpec, McConfig};

use super::Extraction;

/// Argument behind a stabilization verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabilizationMethod {
    /// Bounded `φ⁻¹f` along a positive-recurrent transformed diffusion.
    BoundedRecurrent,
    /// Transformed diffusion with an invariant law integrating `φ⁻¹f`.
    L2Ergodic,
    /// Drift condition for a transient transformed diffusion.
    Lyapunov,
}

impl StabilizationMethod {
    pub fn name(self) -> &'static str {
        match self {
            StabilizationMethod::BoundedRecurrent => "BoundedRecurrent",
            StabilizationMethod::L2Ergodic => "L2Ergodic",
            StabilizationMethod::Lyapunov => "Lyapunov",
        }
    }
}

impl fmt::Display for StabilizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

/// `E^P[φ⁻¹f(X_T)]` at one horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizonValue<S> {
    pub horizon: S,
    pub value: S,
    pub std_error: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizationDiagnostic<S> {
    pub method: StabilizationMethod,
    /// What was checked and how.
    pub witness: String,
    pub verdict: Verdict,
    /// Relative change of the expectation over the last two horizons.
    pub measured: S,
    pub values: Vec<HorizonValue<S>>,
    /// Expectation under the invariant law, when it is available in closed
    /// form.
    pub limit: Option<S>,
}

/// Relative tolerance on the change between the last two horizons.
pub const CAUCHY_TOLERANCE: f64 = 1e-2;

fn method_for<S: Scalar>(model: &ValidatedModel<S>, payoff: &PayoffSpec<S>) -> StabilizationMethod {
    match (&model.params, payoff.growth) {
        (ModelParams::Gbm(_), _) => StabilizationMethod::Lyapunov,
        (ModelParams::Qtsm(_), Growth::Bounded) => StabilizationMethod::BoundedRecurrent,
        _ => StabilizationMethod::L2Ergodic,
    }
}

/// Estimates `E^P[φ⁻¹f(X_T)]` on `horizons` and checks that it settles to
/// a nonzero constant: the last two values must agree within three
/// combined standard errors or [`CAUCHY_TOLERANCE`] relative, and the last
/// value must exceed three standard errors.
///
/// The square-root model uses its exact transition density; other models
/// are simulated with `mc` on the default grid.
pub fn stabilization_check<S: Scalar>(
    ext: &Extraction<S>,
    model: &ValidatedModel<S>,
    horizons: &[S],
    mc: &McConfig,
) -> Result<StabilizationDiagnostic<S>> {
    if horizons.len() < 2 || horizons.windows(2).any(|w| !(w[0] < w[1])) || !(horizons[0] > S::zero()) {
        return Err(Error::InvalidParameter(
            "stabilization needs at least two positive ascending horizons".into(),
        ));
    }
    let method = method_for(model, &ext.payoff);
    let mut values = Vec::with_capacity(horizons.len());
    let mut limit = None;
    let witness;
    match (&model.params, &ext.p.sde) {
        (ModelParams::Cir(params), Sde::Cir { .. }) => {
            let kappa = -ext.phi.linear[0];
            let growth = match ext.payoff.growth {
                Growth::Exponential(m) => Growth::Exponential(m + kappa),
                _ => Growth::Exponential(kappa * S::c(1.0 + 1e-9)),
            };
            let weight = |r: S| (kappa * r).exp();
            for &t in horizons {
                let d = CirDensity::new(params, Measure::P, ext.xi()[0], t);
                let value = cir_payoff_expectation(&ext.payoff, weight, growth, &d)?;
                values.push(HorizonValue { horizon: t, value, std_error: S::zero() });
            }
            let inv = cir_invariant_density(params, Measure::P);
            let q = integrate_half_line(
                |r: S| {
                    let g = inv.ln_pdf(r);
                    if g == S::neg_infinity() {
                        S::zero()
                    } else {
                        ext.payoff.eval(&[r]) * (kappa * r + g).exp()
                    }
                },
                Tolerance::default(),
            )?;
            limit = Some(q.value);
            witness = format!(
                "transition-density quadrature of E^P[e^(kappa r) f(r_T)]; invariant gamma limit {:.10e}",
                q.value
            );
        }
        _ => {
            for (i, &t) in horizons.iter().enumerate() {
                let grid = GridSpec::with_default_steps(t)?;
                let run = McConfig { seed: mc.seed.wrapping_add(i as u64), ..mc.clone() };
                let ens = simulate(&ext.p, &grid, &run, &Accumulators::none())?;
                let h: Vec<S> = (0..ens.n_paths).map(|k| ext.p_integrand(ens.terminal(k))).collect();
                let (value, std_error) = mean_se(&h, ens.antithetic);
                values.push(HorizonValue { horizon: t, value, std_error });
            }
            witness = format!(
                "Monte Carlo E^P[phi^-1 f(X_T)] with {} paths per horizon ({})",
                mc.n_paths,
                mc.resolve_scheme(&ext.p.sde)
            );
        }
    }
    let last = values[values.len() - 1];
    let prev = values[values.len() - 2];
    if !(last.value.abs() > S::c(3.0) * last.std_error) {
        return Err(Error::InconclusiveDiagnostic(format!(
            "E^P at T = {} is {:e} with standard error {:e}",
            last.horizon, last.value, last.std_error
        )));
    }
    let combined = (last.std_error * last.std_error + prev.std_error * prev.std_error).sqrt();
    let gap = (last.value - prev.value).abs();
    let measured = gap / last.value.abs();
    let settled = gap <= S::c(3.0) * combined || measured <= S::c(CAUCHY_TOLERANCE);
    let verdict = if settled && last.value != S::zero() { Verdict::Pass } else { Verdict::Fail };
    Ok(StabilizationDiagnostic { method, witness, verdict, measured, values, limit })
}
