//! Transition and invariant densities of the square-root process, bond
//! prices and expectations by quadrature.

use crate::analytic::quadrature::{integrate_half_line, Tolerance};
use crate::analytic::special::{ln_bessel_i, log_gamma};
use crate::error::{Error, Result};
use crate::models::{CirParams, Growth, PayoffSpec};
use crate::scalar::Scalar;

/// Measure under which a CIR density is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    /// Reversion speed `a`.
    Q,
    /// Reversion speed `b = √(a² + 2σ²)` of the transformed measure.
    P,
}

/// Law of `r_t` given `r_0` for `dr = (θ - κr) dt + σ√r dW`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CirDensity<S> {
    pub theta: S,
    /// Reversion speed `κ` under the chosen measure.
    pub reversion: S,
    pub sigma: S,
    pub r0: S,
    pub t: S,
    pub measure: Measure,
}

impl<S: Scalar> CirDensity<S> {
    pub fn new(params: &CirParams<S>, measure: Measure, r0: S, t: S) -> Self {
        let reversion = match measure {
            Measure::Q => params.a,
            Measure::P => (params.a * params.a + S::two() * params.sigma * params.sigma).sqrt(),
        };
        Self { theta: params.theta, reversion, sigma: params.sigma, r0, t, measure }
    }

    /// `q = 2θ/σ² - 1`.
    pub fn order(&self) -> S {
        S::two() * self.theta / (self.sigma * self.sigma) - S::one()
    }

    /// `h_t = 2κ / (σ²(1 - e^{-κt}))`.
    pub fn h(&self) -> S {
        let k = self.reversion;
        let denom = if k == S::zero() {
            self.t
        } else {
            -(-k * self.t).exp_m1() / k
        };
        S::two() / (self.sigma * self.sigma * denom)
    }

    /// `ln g(r; t)`.
    pub fn ln_pdf(&self, r: S) -> S {
        if !(r > S::zero()) {
            return S::neg_infinity();
        }
        let h = self.h();
        let q = self.order();
        let u = h * self.r0 * (-self.reversion * self.t).exp();
        let v = h * r;
        let z = S::two() * (u * v).sqrt();
        // -u - v + z = -(√u - √v)², kept separate from the scaled Bessel term.
        let gap = u.sqrt() - v.sqrt();
        h.ln() - gap * gap + S::half() * q * (v.ln() - u.ln()) + (ln_bessel_i(q.abs(), z) - z)
    }

    pub fn pdf(&self, r: S) -> S {
        self.ln_pdf(r).exp()
    }

    /// `E[r_t] = θ/κ + (r₀ - θ/κ) e^{-κt}`.
    pub fn mean(&self) -> S {
        let m = self.theta / self.reversion;
        m + (self.r0 - m) * (-self.reversion * self.t).exp()
    }

    /// Decay rate of the right tail, `h_t`.
    pub fn tail_rate(&self) -> S {
        self.h()
    }
}

/// Stationary law: gamma with shape `2θ/σ²` and rate `2κ/σ²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CirInvariant<S> {
    pub shape: S,
    pub rate: S,
}

impl<S: Scalar> CirInvariant<S> {
    pub fn ln_pdf(&self, r: S) -> S {
        if !(r > S::zero()) {
            return S::neg_infinity();
        }
        self.shape * self.rate.ln() - log_gamma(self.shape) + (self.shape - S::one()) * r.ln()
            - self.rate * r
    }

    pub fn pdf(&self, r: S) -> S {
        self.ln_pdf(r).exp()
    }
}

pub fn cir_invariant_density<S: Scalar>(params: &CirParams<S>, measure: Measure) -> CirInvariant<S> {
    let d = CirDensity::new(params, measure, S::one(), S::one());
    let s2 = params.sigma * params.sigma;
    CirInvariant { shape: S::two() * params.theta / s2, rate: S::two() * d.reversion / s2 }
}

pub fn cir_density<S: Scalar>(d: &CirDensity<S>, r: S) -> S {
    d.pdf(r)
}

/// `∫ f(r) g(r; t) dr` by adaptive quadrature.
///
/// Exponentially growing payoffs must grow slower than `2κ/σ²`, the decay
/// rate of the stationary tail.
pub fn cir_expectation<S: Scalar>(
    f: impl Fn(S) -> S,
    growth: Growth<S>,
    d: &CirDensity<S>,
) -> Result<S> {
    if let Growth::Exponential(m) = growth {
        let limit = S::two() * d.reversion / (d.sigma * d.sigma);
        if !(m < limit) {
            return Err(Error::TailDivergence(format!(
                "growth exponent {m} is not below 2b/sigma^2 = {limit}"
            )));
        }
    }
    let tol = Tolerance::default();
    // Integrate f·g over a rescaled variable so the bulk of the law sits near 1.
    let scale = d.mean().max(S::c(1e-12));
    let q = integrate_half_line(|x: S| {
        let r = x * scale;
        let g = d.ln_pdf(r);
        if g == S::neg_infinity() {
            S::zero()
        } else {
            f(r) * g.exp() * scale
        }
    }, tol)?;
    Ok(q.value)
}

/// Expectation of a payoff's `φ⁻¹f` style integrand with its declared growth.
pub fn cir_payoff_expectation<S: Scalar>(
    payoff: &PayoffSpec<S>,
    weight: impl Fn(S) -> S,
    growth: Growth<S>,
    d: &CirDensity<S>,
) -> Result<S> {
    cir_expectation(|r| payoff.eval(&[r]) * weight(r), growth, d)
}

/// Zero-coupon bond `E^Q[e^{-∫₀ᵀ r dt}] = A(T) e^{-B(T) r₀}`.
pub fn cir_bond_price<S: Scalar>(params: &CirParams<S>, r0: S, horizon: S) -> S {
    let (theta, a, sigma) = (params.theta, params.a, params.sigma);
    let h = (a * a + S::two() * sigma * sigma).sqrt();
    let e = (h * horizon).exp_m1();
    let denom = (h + a) * e + S::two() * h;
    let big_b = S::two() * e / denom;
    let ln_a = S::two() * theta / (sigma * sigma)
        * ((S::two() * h).ln() + S::half() * (a + h) * horizon - denom.ln());
    (ln_a - big_b * r0).exp()
}
