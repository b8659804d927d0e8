use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Terminal payoff families. One-dimensional payoffs act on the first state
/// coordinate (the asset for Heston).
#[derive(Clone, Debug, PartialEq)]
pub enum Payoff<S> {
    /// `f(s) = s^α`.
    Power { alpha: S },
    /// `f(s) = (s^α - K)_+`.
    PowerCall { alpha: S, strike: S },
    /// Smooth compactly supported bump `h·exp(1 - 1/(1 - |x-c|²/w²))`.
    Bump { center: Vec<S>, width: S, height: S },
    /// `h·1{|x - c| < w}`.
    Indicator { center: Vec<S>, width: S, height: S },
    /// `f ≡ 1`.
    Bond,
    /// Power utility of a leveraged fund, realised as `x^{αβ}` at maturity
    /// with the integrated-variance drag carried by the model's rate.
    LetfUtility { alpha: S, leverage: S },
}

/// Declared growth of the payoff at the boundary of the state space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Growth<S> {
    Bounded,
    Polynomial(S),
    Exponential(S),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PayoffSpec<S> {
    pub payoff: Payoff<S>,
    pub growth: Growth<S>,
}

impl<S: Scalar> PayoffSpec<S> {
    /// Wraps a payoff with its natural growth declaration.
    pub fn new(payoff: Payoff<S>) -> Self {
        let growth = match &payoff {
            Payoff::Power { alpha } | Payoff::PowerCall { alpha, .. } => Growth::Polynomial(*alpha),
            Payoff::LetfUtility { alpha, leverage } => Growth::Polynomial(*alpha * *leverage),
            Payoff::Bump { .. } | Payoff::Indicator { .. } | Payoff::Bond => Growth::Bounded,
        };
        Self { payoff, growth }
    }

    pub fn with_growth(mut self, growth: Growth<S>) -> Self {
        self.growth = growth;
        self
    }

    pub fn power(alpha: S) -> Self {
        Self::new(Payoff::Power { alpha })
    }

    pub fn power_call(alpha: S, strike: S) -> Self {
        Self::new(Payoff::PowerCall { alpha, strike })
    }

    pub fn bond() -> Self {
        Self::new(Payoff::Bond)
    }

    pub fn bump(center: Vec<S>, width: S, height: S) -> Self {
        Self::new(Payoff::Bump { center, width, height })
    }

    pub fn letf_utility(alpha: S, leverage: S) -> Self {
        Self::new(Payoff::LetfUtility { alpha, leverage })
    }

    pub fn name(&self) -> &'static str {
        match self.payoff {
            Payoff::Power { .. } => "Power",
            Payoff::PowerCall { .. } => "PowerCall",
            Payoff::Bump { .. } => "Bump",
            Payoff::Indicator { .. } => "Indicator",
            Payoff::Bond => "Bond",
            Payoff::LetfUtility { .. } => "LETFUtility",
        }
    }

    /// Structural checks that do not depend on the model.
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPayoff(m.to_string()));
        match &self.payoff {
            Payoff::Power { alpha } if !alpha.is_finite() => bad("power exponent must be finite"),
            Payoff::PowerCall { alpha, strike } if !(alpha.is_finite() && *strike >= S::zero()) => {
                bad("power call needs a finite exponent and a nonnegative strike")
            }
            Payoff::Bump { width, height, center } | Payoff::Indicator { width, height, center }
                if !(*width > S::zero() && *height > S::zero() && !center.is_empty()) =>
            {
                bad("bump needs positive width and height and a nonempty center")
            }
            _ => Ok(()),
        }
    }

    /// Pointwise evaluation `f(x)`.
    pub fn eval(&self, x: &[S]) -> S {
        let s = x[0];
        match &self.payoff {
            Payoff::Power { alpha } => s.powf(*alpha),
            Payoff::PowerCall { alpha, strike } => (s.powf(*alpha) - *strike).max(S::zero()),
            Payoff::Bump { center, width, height } => {
                let rho2 = dist2(x, center) / (*width * *width);
                if rho2 < S::one() {
                    *height * (S::one() - S::one() / (S::one() - rho2)).exp()
                } else {
                    S::zero()
                }
            }
            Payoff::Indicator { center, width, height } => {
                if dist2(x, center) < *width * *width {
                    *height
                } else {
                    S::zero()
                }
            }
            Payoff::Bond => S::one(),
            Payoff::LetfUtility { alpha, leverage } => s.powf(*alpha * *leverage),
        }
    }

    /// `ln f(x)` for the strictly positive power families, computed so that
    /// it cancels exactly against a matching power eigenfunction.
    pub fn ln_eval(&self, x: &[S]) -> Option<S> {
        match &self.payoff {
            Payoff::Power { alpha } => Some(*alpha * x[0].ln()),
            Payoff::LetfUtility { alpha, leverage } => Some(*alpha * *leverage * x[0].ln()),
            Payoff::Bond => Some(S::zero()),
            _ => None,
        }
    }

    /// Gradient of `f`, for payoffs that are Lipschitz.
    pub fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        let mut g = vec![S::zero(); x.len()];
        let s = x[0];
        match &self.payoff {
            Payoff::Power { alpha } => g[0] = *alpha * s.powf(*alpha - S::one()),
            Payoff::PowerCall { alpha, strike } => {
                if s.powf(*alpha) > *strike {
                    g[0] = *alpha * s.powf(*alpha - S::one());
                }
            }
            Payoff::LetfUtility { alpha, leverage } => {
                let p = *alpha * *leverage;
                g[0] = p * s.powf(p - S::one());
            }
            Payoff::Bond => {}
            Payoff::Bump { center, width, .. } => {
                let w2 = *width * *width;
                let rho2 = dist2(x, center) / w2;
                if rho2 < S::one() {
                    let f = self.eval(x);
                    let sm = S::one() - rho2;
                    for (k, gk) in g.iter_mut().enumerate() {
                        *gk = -f * S::two() * (x[k] - center[k]) / (w2 * sm * sm);
                    }
                }
            }
            Payoff::Indicator { .. } => {
                return Err(Error::InvalidPayoff(
                    "indicator payoff has no pathwise gradient".into(),
                ))
            }
        }
        Ok(g)
    }
}

fn dist2<S: Scalar>(x: &[S], c: &[S]) -> S {
    x.iter().zip(c).map(|(&a, &b)| (a - b) * (a - b)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_evaluations() {
        assert_eq!(PayoffSpec::<f64>::power(0.5).eval(&[4.0]), 2.0);
        assert_eq!(PayoffSpec::power_call(1.0, 100.0).eval(&[90.0]), 0.0);
        assert_eq!(PayoffSpec::bond().eval(&[0.03]), 1.0);
        let b = PayoffSpec::<f64>::bump(vec![0.0, 0.0], 1.0, 2.0);
        assert!((b.eval(&[0.0, 0.0]) - 2.0).abs() < 1e-15);
        assert_eq!(b.eval(&[1.0, 0.0]), 0.0);
    }

    #[test]
    fn bump_gradient_matches_difference() {
        let b = PayoffSpec::<f64>::bump(vec![0.1, -0.2], 0.8, 1.5);
        let x = [0.3, 0.1];
        let g = b.gradient(&x).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (b.eval(&xp) - b.eval(&xm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8, "{fd} {}", g[k]);
        }
    }
}
