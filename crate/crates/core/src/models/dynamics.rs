use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;

/// Coefficients of a catalog diffusion `dX = b(X) dt + σ(X) dW`.
///
/// Each catalog model keeps its functional form under the transformed
/// measure, so the same variants describe both the original and the
/// extracted dynamics.
#[derive(Clone, Debug, PartialEq)]
pub enum Sde<S> {
    /// `dS = m S dt + v S dW`.
    Gbm { drift: S, vol: S },
    /// `dr = (θ - a r) dt + σ√r dW`.
    Cir { theta: S, a: S, sigma: S },
    /// `dX = (b + BX) dt + σ dW`.
    Ou { b: Vec<S>, big_b: Matrix<S>, sigma: Matrix<S> },
    /// `dX = X(μ + c v) dt + √v X dZ`, `dv = (γ - βv) dt + δ√v dW`,
    /// with `W = ρZ + √(1-ρ²)Z̄`.
    Heston { mu: S, loading: S, gamma: S, beta: S, delta: S, rho: S },
    /// `dX = (θ - aX) X dt + σ X^{3/2} dW`.
    ThreeHalves { theta: S, a: S, sigma: S },
}

impl<S: Scalar> Sde<S> {
    pub fn dim(&self) -> usize {
        match self {
            Sde::Ou { b, .. } => b.len(),
            Sde::Heston { .. } => 2,
            _ => 1,
        }
    }

    /// Coordinates that must stay strictly positive.
    pub fn positive_coords(&self) -> &'static [usize] {
        match self {
            Sde::Ou { .. } => &[],
            Sde::Heston { .. } => &[0, 1],
            _ => &[0],
        }
    }

    pub fn in_domain(&self, x: &[S]) -> bool {
        x.len() == self.dim()
            && x.iter().all(|v| v.is_finite())
            && self.positive_coords().iter().all(|&i| x[i] > S::zero())
    }

    pub fn drift(&self, x: &[S]) -> Vec<S> {
        match self {
            Sde::Gbm { drift, .. } => vec![*drift * x[0]],
            Sde::Cir { theta, a, .. } => vec![*theta - *a * x[0]],
            Sde::Ou { b, big_b, .. } => {
                let mut out = big_b.matvec(x);
                for (o, &bi) in out.iter_mut().zip(b) {
                    *o += bi;
                }
                out
            }
            Sde::Heston { mu, loading, gamma, beta, .. } => {
                vec![x[0] * (*mu + *loading * x[1]), *gamma - *beta * x[1]]
            }
            Sde::ThreeHalves { theta, a, .. } => vec![(*theta - *a * x[0]) * x[0]],
        }
    }

    /// Diffusion matrix; column `i` multiplies the `i`-th independent
    /// Brownian increment.
    pub fn diffusion(&self, x: &[S]) -> Matrix<S> {
        match self {
            Sde::Gbm { vol, .. } => Matrix::scalar(*vol * x[0]),
            Sde::Cir { sigma, .. } => Matrix::scalar(*sigma * x[0].max(S::zero()).sqrt()),
            Sde::Ou { sigma, .. } => sigma.clone(),
            Sde::Heston { delta, rho, .. } => {
                let sv = x[1].max(S::zero()).sqrt();
                let rbar = (S::one() - *rho * *rho).max(S::zero()).sqrt();
                let mut m = Matrix::zeros(2, 2);
                m[(0, 0)] = sv * x[0];
                m[(1, 0)] = *rho * *delta * sv;
                m[(1, 1)] = rbar * *delta * sv;
                m
            }
            Sde::ThreeHalves { sigma, .. } => {
                let s = x[0].max(S::zero());
                Matrix::scalar(*sigma * s * s.sqrt())
            }
        }
    }

    /// `∂b_j/∂x_k`.
    pub fn drift_jacobian(&self, x: &[S]) -> Matrix<S> {
        match self {
            Sde::Gbm { drift, .. } => Matrix::scalar(*drift),
            Sde::Cir { a, .. } => Matrix::scalar(-*a),
            Sde::Ou { big_b, .. } => big_b.clone(),
            Sde::Heston { mu, loading, beta, .. } => {
                let mut m = Matrix::zeros(2, 2);
                m[(0, 0)] = *mu + *loading * x[1];
                m[(0, 1)] = *loading * x[0];
                m[(1, 1)] = -*beta;
                m
            }
            Sde::ThreeHalves { theta, a, .. } => Matrix::scalar(*theta - S::two() * *a * x[0]),
        }
    }

    /// For each noise column `i`, the matrix `∂σ_{ji}/∂x_k`.
    pub fn diffusion_jacobians(&self, x: &[S]) -> Vec<Matrix<S>> {
        let half = S::half();
        match self {
            Sde::Gbm { vol, .. } => vec![Matrix::scalar(*vol)],
            Sde::Cir { sigma, .. } => {
                vec![Matrix::scalar(half * *sigma / x[0].max(S::min_positive_value()).sqrt())]
            }
            Sde::Ou { b, .. } => vec![Matrix::zeros(b.len(), b.len()); b.len()],
            Sde::Heston { delta, rho, .. } => {
                let sv = x[1].max(S::min_positive_value()).sqrt();
                let rbar = (S::one() - *rho * *rho).max(S::zero()).sqrt();
                let mut d0 = Matrix::zeros(2, 2);
                d0[(0, 0)] = sv;
                d0[(0, 1)] = half * x[0] / sv;
                d0[(1, 1)] = half * *rho * *delta / sv;
                let mut d1 = Matrix::zeros(2, 2);
                d1[(1, 1)] = half * rbar * *delta / sv;
                vec![d0, d1]
            }
            Sde::ThreeHalves { sigma, .. } => {
                vec![Matrix::scalar(S::c(1.5) * *sigma * x[0].max(S::zero()).sqrt())]
            }
        }
    }
}

/// Short-rate function `r(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Rate<S> {
    Const(S),
    /// `r(x) = x_i`.
    Coordinate(usize),
    /// `r(x) = β + ⟨α, x⟩ + ⟨Γx, x⟩`.
    Quadratic { beta: S, alpha: Vec<S>, gamma: Matrix<S> },
    /// `r(x) = c0 + c1 x_0`.
    Affine { c0: S, c1: S },
}

impl<S: Scalar> Rate<S> {
    pub fn eval(&self, x: &[S]) -> S {
        match self {
            Rate::Const(r) => *r,
            Rate::Coordinate(i) => x[*i],
            Rate::Quadratic { beta, alpha, gamma } => *beta + dot(alpha, x) + gamma.bilinear(x, x),
            Rate::Affine { c0, c1 } => *c0 + *c1 * x[0],
        }
    }

    pub fn gradient(&self, x: &[S]) -> Vec<S> {
        let mut g = vec![S::zero(); x.len()];
        match self {
            Rate::Const(_) => {}
            Rate::Coordinate(i) => g[*i] = S::one(),
            Rate::Quadratic { alpha, gamma, .. } => {
                let gx = gamma.matvec(x);
                let gtx = gamma.tr_matvec(x);
                for k in 0..x.len() {
                    g[k] = alpha[k] + gx[k] + gtx[k];
                }
            }
            Rate::Affine { c1, .. } => g[0] = *c1,
        }
        g
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rate::Const(r) if *r == S::zero())
    }
}

/// A diffusion together with its discount rate and starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct Dynamics<S> {
    pub sde: Sde<S>,
    pub rate: Rate<S>,
    pub xi: Vec<S>,
}

impl<S: Scalar> Dynamics<S> {
    pub fn dim(&self) -> usize {
        self.sde.dim()
    }

    pub fn with_xi(&self, xi: Vec<S>) -> Self {
        Self {
            sde: self.sde.clone(),
            rate: self.rate.clone(),
            xi,
        }
    }
}
