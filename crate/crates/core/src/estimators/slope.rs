use std::fmt;
use std::str::FromStr;

use crate::analytic::{sensitivity_limit, LimitKind, Measure};
use crate::error::{Error, Result};
use crate::extraction::eigenpair;
use crate::models::{ModelKind, Param, PayoffSpec, ValidatedModel};
use crate::scalar::Scalar;
use crate::sim::{GridSpec, McConfig, Scheme};

use super::catalog::phi_tangent;
use super::estimate::ratio_se;
use super::pricing::{fd_sensitivity, FdOptions, Pricer};
use super::sensitivities::{bel_channels, lamperti_channels, lr_channels, variation_channels, Channels};

/// Estimator used for the expectation channel of a slope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlopeMethod {
    /// Likelihood ratio with the catalog score.
    Lr,
    /// Central finite differences of `ln p_T`.
    Fd,
    /// Bismut–Elworthy–Li weight, for initial-state parameters.
    Bel,
    /// Unit-diffusion transform for volatility parameters of scalar models.
    /// Quadratic-model volatility entries use the first variation process.
    Lamperti,
}

impl SlopeMethod {
    pub fn name(self) -> &'static str {
        match self {
            SlopeMethod::Lr => "LR",
            SlopeMethod::Fd => "FD",
            SlopeMethod::Bel => "BEL",
            SlopeMethod::Lamperti => "Lamperti",
        }
    }
}

impl fmt::Display for SlopeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SlopeMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(SlopeMethod::Lr),
            "fd" => Ok(SlopeMethod::Fd),
            "bel" => Ok(SlopeMethod::Bel),
            "lamperti" => Ok(SlopeMethod::Lamperti),
            _ => Err(Error::InvalidParameter(format!("unknown method '{s}'"))),
        }
    }
}

/// The four parts of `(1/T) ∂_ε ln p_T` (or `∂_ξ ln p_T`): the eigenvalue
/// term `-λ'(0)`, the eigenfunction term `∂_ε ln φ(ξ)/T`, the integrand
/// term `E[∂_ε h]/(T E[h])` and the path-law term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Addends<S> {
    pub lambda: S,
    pub phi: S,
    pub payoff: S,
    pub stochastic: S,
}

impl<S: Scalar> Addends<S> {
    pub fn total(&self) -> S {
        self.lambda + self.phi + self.payoff + self.stochastic
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeRow<S> {
    pub horizon: S,
    pub slope: S,
    pub std_error: S,
    pub limit: S,
    pub abs_gap: S,
    /// Absent for finite differences, which do not split the derivative.
    pub addends: Option<Addends<S>>,
    pub n_paths: usize,
    pub scheme: Scheme,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeSeries<S> {
    pub model: ModelKind,
    pub param: Param,
    pub method: SlopeMethod,
    /// Per-year slopes for model parameters, instantaneous log-deltas for
    /// initial-state coordinates.
    pub kind: LimitKind,
    pub limit: S,
    pub rows: Vec<SlopeRow<S>>,
}

/// Discretisation and difference settings for [`longterm_slope`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeOptions<S> {
    /// Steps per year, floored at 64 steps per horizon.
    pub steps_per_year: f64,
    pub fd: FdOptions<S>,
}

impl<S> Default for SlopeOptions<S> {
    fn default() -> Self {
        Self { steps_per_year: 32.0, fd: FdOptions::default() }
    }
}

fn check_method<S: Scalar>(model: &ValidatedModel<S>, param: Param, method: SlopeMethod) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidParameter(m));
    match (method, param) {
        (SlopeMethod::Bel, Param::Xi(_)) | (SlopeMethod::Fd, _) => Ok(()),
        (SlopeMethod::Bel, _) => bad(format!("BEL applies to initial-state parameters, not {param}")),
        (_, Param::Xi(_)) => bad(format!("initial-state parameter {param} needs BEL or FD")),
        (SlopeMethod::Lamperti, Param::SigmaEntry(..)) if model.kind() == ModelKind::Qtsm => Ok(()),
        (SlopeMethod::Lamperti, _) if model.dim() != 1 => Err(Error::UnsupportedModel(format!(
            "the Lamperti transform needs a one-dimensional model, got {}",
            model.kind()
        ))),
        _ => Ok(()),
    }
}

/// Seed of row `i`.
fn row_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Long-horizon sensitivity series on `horizons`.
///
/// For model parameters each row is `(1/T) ∂_ε ln p_T`, assembled from the
/// closed-form `-λ'(0)`, the eigenfunction tangent and the Monte Carlo
/// channels of the chosen method. For an initial-state coordinate `ξ_k`
/// each row is `∂ ln p_T/∂ξ_k = ∂_k ln φ(ξ) + ∂_k E/E` without the `1/T`.
pub fn longterm_slope<S: Scalar>(
    model: &ValidatedModel<S>,
    payoff: &PayoffSpec<S>,
    param: Param,
    horizons: &[S],
    method: SlopeMethod,
    opts: &SlopeOptions<S>,
    mc: &McConfig,
) -> Result<SlopeSeries<S>> {
    if horizons.is_empty() || horizons.windows(2).any(|w| !(w[0] < w[1])) || !(horizons[0] > S::zero()) {
        return Err(Error::InvalidParameter("horizon grid must be positive and strictly ascending".into()));
    }
    check_method(model, param, method)?;
    let limit = sensitivity_limit(model, payoff, param)?;
    let instant = limit.kind == LimitKind::Instant;
    let ext = eigenpair(model, payoff)?;
    let (lambda_term, phi_log) = if let Param::Xi(k) = param {
        (S::zero(), ext.log_phi_gradient(ext.xi())[k])
    } else {
        (limit.value, phi_tangent(model, payoff, param)?.log_value(ext.xi()))
    };

    let mut rows = Vec::with_capacity(horizons.len());
    for (i, &horizon) in horizons.iter().enumerate() {
        let grid = GridSpec::with_steps_per_year(horizon, opts.steps_per_year)?;
        let row_mc = McConfig { seed: row_seed(mc.seed, i), ..mc.clone() };
        let scale = if instant { S::one() } else { S::one() / grid.horizon() };
        let row = match method {
            SlopeMethod::Fd => {
                let pricer = Pricer::new(model, payoff, grid, row_mc).with_measure(Measure::P);
                let e = fd_sensitivity(&pricer, param, opts.fd)?;
                SlopeRow {
                    horizon,
                    slope: e.value * scale,
                    std_error: e.std_error * scale,
                    limit: limit.value,
                    abs_gap: (e.value * scale - limit.value).abs(),
                    addends: None,
                    n_paths: e.n_paths,
                    scheme: e.scheme,
                }
            }
            _ => {
                let ch = match (method, param) {
                    (SlopeMethod::Bel, Param::Xi(k)) => bel_channels(model, payoff, k, &grid, &row_mc)?,
                    (SlopeMethod::Lamperti, Param::SigmaEntry(..)) => {
                        variation_channels(model, payoff, param, &grid, &row_mc)?
                    }
                    (SlopeMethod::Lamperti, _) => lamperti_channels(model, payoff, param, &grid, &row_mc)?,
                    _ => lr_channels(model, payoff, param, &grid, &row_mc)?,
                };
                assemble(horizon, &ch, lambda_term, phi_log * scale, scale, limit.value)
            }
        };
        rows.push(row);
    }
    Ok(SlopeSeries { model: model.kind(), param, method, kind: limit.kind, limit: limit.value, rows })
}

fn assemble<S: Scalar>(horizon: S, ch: &Channels<S>, lambda: S, phi: S, scale: S, limit: S) -> SlopeRow<S> {
    let num: Vec<S> = ch.payoff.iter().zip(&ch.stochastic).map(|(&a, &b)| a + b).collect();
    let (ratio, se) = ratio_se(&num, &ch.h, ch.antithetic);
    let (payoff_part, _) = ratio_se(&ch.payoff, &ch.h, ch.antithetic);
    let addends = Addends {
        lambda,
        phi,
        payoff: payoff_part * scale,
        stochastic: (ratio - payoff_part) * scale,
    };
    let slope = lambda + phi + ratio * scale;
    SlopeRow {
        horizon,
        slope,
        std_error: se * scale,
        limit,
        abs_gap: (slope - limit).abs(),
        addends: Some(addends),
        n_paths: ch.h.len(),
        scheme: ch.scheme,
    }
}
