use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{expm, Matrix};
use crate::models::Sde;
use crate::scalar::Scalar;

use super::rng::PathRng;

/// Time-stepping scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    EulerMaruyama,
    /// Lognormal transition of geometric Brownian motion.
    ExactGbm,
    /// Noncentral chi-square transition of the square-root process. Also
    /// drives the Heston variance and the reciprocal of the 3/2 process.
    ExactCir,
    /// Euler with the positive part taken inside drift and diffusion.
    FullTruncationEuler,
    /// Gaussian transition of a linear (OU) system.
    ExactOu,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "EulerMaruyama",
            Scheme::ExactGbm => "ExactGBM",
            Scheme::ExactCir => "ExactCIR",
            Scheme::FullTruncationEuler => "FullTruncationEuler",
            Scheme::ExactOu => "ExactOU",
        }
    }

    /// Scheme used when none is requested.
    pub fn default_for<S>(sde: &Sde<S>) -> Self {
        match sde {
            Sde::Gbm { .. } => Scheme::ExactGbm,
            Sde::Ou { .. } => Scheme::ExactOu,
            Sde::Cir { .. } | Sde::Heston { .. } | Sde::ThreeHalves { .. } => {
                Scheme::FullTruncationEuler
            }
        }
    }

    /// Whether the scheme can drive `sde`.
    pub fn supports<S>(self, sde: &Sde<S>) -> bool {
        match self {
            Scheme::EulerMaruyama | Scheme::FullTruncationEuler => true,
            Scheme::ExactGbm => matches!(sde, Sde::Gbm { .. }),
            Scheme::ExactCir => {
                matches!(sde, Sde::Cir { .. } | Sde::Heston { .. } | Sde::ThreeHalves { .. })
            }
            Scheme::ExactOu => matches!(sde, Sde::Ou { .. }),
        }
    }

    /// Antithetic pairing needs a transition that is odd in its normals.
    pub fn supports_antithetic(self) -> bool {
        self != Scheme::ExactCir
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "eulermaruyama" | "euler" => Ok(Scheme::EulerMaruyama),
            "exactgbm" => Ok(Scheme::ExactGbm),
            "exactcir" => Ok(Scheme::ExactCir),
            "fulltruncationeuler" | "fulltruncation" => Ok(Scheme::FullTruncationEuler),
            "exactou" => Ok(Scheme::ExactOu),
            _ => Err(Error::InvalidParameter(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Exact one-step law of `dX = (b + BX) dt + σ dW`, sampled jointly with
/// the Brownian increment.
#[derive(Clone, Debug)]
struct OuTransition<S> {
    propagator: Matrix<S>,
    half_propagator: Matrix<S>,
    shift: Vec<S>,
    /// Lower Cholesky factor of `Cov(ΔW, ε)` with `ΔW` first.
    chol: Matrix<S>,
}

impl<S: Scalar> OuTransition<S> {
    fn new(b: &[S], big_b: &Matrix<S>, sigma: &Matrix<S>, dt: S) -> Result<Self> {
        let d = b.len();
        let propagator = expm(&big_b.scale(dt))?;
        let half_propagator = expm(&big_b.scale(S::half() * dt))?;

        let mut aug = Matrix::zeros(2 * d, 2 * d);
        aug.set_block(0, 0, &big_b.scale(dt));
        aug.set_block(0, d, &Matrix::identity(d).scale(dt));
        let integral = expm(&aug)?.submatrix(0, d, d, d);
        let shift = integral.matvec(b);

        let a = sigma * &sigma.transpose();
        let mut vl = Matrix::zeros(2 * d, 2 * d);
        vl.set_block(0, 0, &big_b.scale(-dt));
        vl.set_block(0, d, &a.scale(dt));
        vl.set_block(d, d, &big_b.transpose().scale(dt));
        let e = expm(&vl)?;
        let f22 = e.submatrix(d, d, d, d);
        let f12 = e.submatrix(0, d, d, d);
        let q = (&f22.transpose() * &f12).symmetrized();
        let cross = &integral * sigma;

        let mut cov = Matrix::zeros(2 * d, 2 * d);
        cov.set_block(0, 0, &Matrix::identity(d).scale(dt));
        cov.set_block(0, d, &cross.transpose());
        cov.set_block(d, 0, &cross);
        cov.set_block(d, d, &q);
        let chol = cov.cholesky()?;
        Ok(Self { propagator, half_propagator, shift, chol })
    }
}

/// One-path time stepper for a given diffusion and scheme.
#[derive(Clone, Debug)]
pub struct Stepper<S> {
    sde: Sde<S>,
    scheme: Scheme,
    dt: S,
    sqrt_dt: f64,
    ou: Option<OuTransition<S>>,
}

impl<S: Scalar> Stepper<S> {
    pub fn new(sde: &Sde<S>, scheme: Scheme, dt: S) -> Result<Self> {
        if !scheme.supports(sde) {
            return Err(Error::SchemeModelMismatch(format!(
                "scheme {scheme} cannot simulate this model"
            )));
        }
        let ou = match (sde, scheme) {
            (Sde::Ou { b, big_b, sigma }, Scheme::ExactOu) => {
                Some(OuTransition::new(b, big_b, sigma, dt)?)
            }
            _ => None,
        };
        Ok(Self { sde: sde.clone(), scheme, dt, sqrt_dt: dt.to_f64_lossy().sqrt(), ou })
    }

    pub fn sde(&self) -> &Sde<S> {
        &self.sde
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dim(&self) -> usize {
        self.sde.dim()
    }

    fn normal_increment(&self, rng: &mut PathRng) -> S {
        S::c(self.sqrt_dt * rng.normal())
    }

    /// Advances `x` by one step into `next` and writes the Brownian
    /// increments driving the step into `dw`.
    pub fn step(&self, x: &[S], next: &mut [S], dw: &mut [S], rng: &mut PathRng) {
        let dt = self.dt;
        let half = S::half();
        let truncate = self.scheme == Scheme::FullTruncationEuler;
        match &self.sde {
            Sde::Gbm { drift, vol } => {
                dw[0] = self.normal_increment(rng);
                next[0] = if self.scheme == Scheme::ExactGbm {
                    x[0] * ((*drift - half * *vol * *vol) * dt + *vol * dw[0]).exp()
                } else {
                    x[0] + *drift * x[0] * dt + *vol * x[0] * dw[0]
                };
            }
            Sde::Cir { theta, a, sigma } => {
                if self.scheme == Scheme::ExactCir {
                    next[0] = exact_cir(*theta, *a, *sigma, x[0], dt, rng);
                    dw[0] = implied_increment(*theta, *a, *sigma, x[0], next[0], dt);
                } else {
                    dw[0] = self.normal_increment(rng);
                    let xp = x[0].max(S::zero());
                    let xd = if truncate { xp } else { x[0] };
                    next[0] = x[0] + (*theta - *a * xd) * dt + *sigma * xp.sqrt() * dw[0];
                }
            }
            Sde::Ou { b, big_b, sigma } => {
                let d = b.len();
                if let Some(ou) = &self.ou {
                    let z: Vec<S> = (0..2 * d).map(|_| S::c(rng.normal())).collect();
                    let joint = ou.chol.matvec(&z);
                    let moved = ou.propagator.matvec(x);
                    for i in 0..d {
                        dw[i] = joint[i];
                        next[i] = moved[i] + ou.shift[i] + joint[d + i];
                    }
                } else {
                    for w in dw.iter_mut().take(d) {
                        *w = self.normal_increment(rng);
                    }
                    let bx = big_b.matvec(x);
                    let noise = sigma.matvec(&dw[..d]);
                    for i in 0..d {
                        next[i] = x[i] + (b[i] + bx[i]) * dt + noise[i];
                    }
                }
            }
            Sde::Heston { mu, loading, gamma, beta, delta, rho } => {
                let rbar = (S::one() - *rho * *rho).max(S::zero()).sqrt();
                let v = x[1];
                let vp = v.max(S::zero());
                if self.scheme == Scheme::ExactCir {
                    next[1] = exact_cir(*gamma, *beta, *delta, v, dt, rng);
                    let w = implied_increment(*gamma, *beta, *delta, v, next[1], dt);
                    let n = self.normal_increment(rng);
                    dw[0] = *rho * w + rbar * n;
                    dw[1] = rbar * w - *rho * n;
                } else {
                    dw[0] = self.normal_increment(rng);
                    dw[1] = self.normal_increment(rng);
                    next[1] = v
                        + (*gamma - *beta * vp) * dt
                        + *delta * vp.sqrt() * (*rho * dw[0] + rbar * dw[1]);
                }
                next[0] = x[0] * ((*mu + (*loading - half) * vp) * dt + vp.sqrt() * dw[0]).exp();
            }
            Sde::ThreeHalves { theta, a, sigma } => {
                // r = 1/X is a square-root process driven by -B.
                let (ct, ca) = (*a + *sigma * *sigma, *theta);
                let r = S::one() / x[0];
                let r_next = if self.scheme == Scheme::ExactCir {
                    let rn = exact_cir(ct, ca, *sigma, r, dt, rng);
                    dw[0] = -implied_increment(ct, ca, *sigma, r, rn, dt);
                    rn
                } else {
                    dw[0] = self.normal_increment(rng);
                    let rn = r + (ct - ca * r) * dt - *sigma * r.sqrt() * dw[0];
                    rn.abs()
                };
                next[0] = S::one() / r_next;
            }
        }
    }

    /// For exact linear transitions, `e^{BΔ/2}`: the midpoint weight applied
    /// to additive forcing of a process sharing the drift matrix.
    pub fn forcing_weight(&self) -> Option<&Matrix<S>> {
        self.ou.as_ref().map(|o| &o.half_propagator)
    }

    /// `∂x_{n+1}/∂x_n` of the step just taken, used to propagate the first
    /// variation process.
    pub fn step_jacobian(&self, x: &[S], next: &[S], dw: &[S]) -> Matrix<S> {
        let dt = self.dt;
        let half = S::half();
        match (&self.sde, self.scheme) {
            (Sde::Gbm { .. }, Scheme::ExactGbm) => Matrix::scalar(next[0] / x[0]),
            (Sde::Ou { .. }, Scheme::ExactOu) => {
                self.ou.as_ref().expect("OU transition prepared").propagator.clone()
            }
            (Sde::Heston { loading, beta, delta, rho, .. }, _) => {
                let rbar = (S::one() - *rho * *rho).max(S::zero()).sqrt();
                let sv = x[1].max(S::min_positive_value()).sqrt();
                let mut j = Matrix::zeros(2, 2);
                j[(0, 0)] = next[0] / x[0];
                j[(0, 1)] = next[0] * ((*loading - half) * dt + half * dw[0] / sv);
                j[(1, 1)] = S::one() - *beta * dt + half * *delta * (*rho * dw[0] + rbar * dw[1]) / sv;
                j
            }
            (Sde::ThreeHalves { theta, sigma, .. }, _) => {
                let r = S::one() / x[0];
                let dr = S::one() - *theta * dt - half * *sigma * dw[0] / r.sqrt();
                let ratio = next[0] / x[0];
                Matrix::scalar(ratio * ratio * dr)
            }
            (sde, _) => {
                let d = sde.dim();
                let mut j = sde.drift_jacobian(x).scale(dt);
                for (i, di) in sde.diffusion_jacobians(x).iter().enumerate() {
                    j = &j + &di.scale(dw[i]);
                }
                &j + &Matrix::identity(d)
            }
        }
    }
}

/// Draws `r_{t+dt}` given `r_t` from the noncentral chi-square law.
fn exact_cir<S: Scalar>(theta: S, a: S, sigma: S, r: S, dt: S, rng: &mut PathRng) -> S {
    let (theta, a, sigma, r, dt) = (
        theta.to_f64_lossy(),
        a.to_f64_lossy(),
        sigma.to_f64_lossy(),
        r.to_f64_lossy(),
        dt.to_f64_lossy(),
    );
    let decay = (-a * dt).exp();
    let c = if a.abs() < 1e-12 {
        sigma * sigma * dt / 4.0
    } else {
        sigma * sigma * (1.0 - decay) / (4.0 * a)
    };
    let df = 4.0 * theta / (sigma * sigma);
    let nc = r.max(0.0) * decay / c;
    let n = rng.poisson(0.5 * nc);
    S::c(rng.gamma(0.5 * df + n, 2.0 * c))
}

/// Brownian increment consistent with a square-root transition `r → r_next`.
fn implied_increment<S: Scalar>(theta: S, a: S, sigma: S, r: S, r_next: S, dt: S) -> S {
    (r_next - r - (theta - a * r) * dt) / (sigma * r.max(S::min_positive_value()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_model_compatibility() {
        let gbm: Sde<f64> = Sde::Gbm { drift: 0.1, vol: 0.2 };
        let cir: Sde<f64> = Sde::Cir { theta: 0.1, a: 0.5, sigma: 0.2 };
        assert!(Stepper::new(&cir, Scheme::ExactGbm, 0.1).is_err());
        assert_eq!(
            Stepper::new(&gbm, Scheme::ExactCir, 0.1).unwrap_err().name(),
            "SchemeModelMismatch"
        );
        assert!(Stepper::new(&cir, Scheme::ExactCir, 0.1).is_ok());
        assert_eq!("ExactGBM".parse::<Scheme>().unwrap(), Scheme::ExactGbm);
        assert_eq!("full_truncation_euler".parse::<Scheme>().unwrap(), Scheme::FullTruncationEuler);
    }

    #[test]
    fn ou_transition_moments() {
        let big_b = Matrix::from_rows(&[vec![-1.0f64, 0.3], vec![0.0, -0.5]]).unwrap();
        let sigma = Matrix::from_rows(&[vec![0.4f64, 0.0], vec![0.1, 0.3]]).unwrap();
        let dt = 0.7;
        let t = OuTransition::new(&[0.2, -0.1], &big_b, &sigma, dt).unwrap();
        let cov = &t.chol * &t.chol.transpose();
        // Oracle: fine Riemann sums of the defining integrals.
        let n = 20000;
        let h = dt / n as f64;
        let mut q = Matrix::zeros(2, 2);
        let mut g = Matrix::zeros(2, 2);
        for k in 0..n {
            let s = (k as f64 + 0.5) * h;
            let e = expm(&big_b.scale(s)).unwrap();
            let es = &e * &sigma;
            q = &q + &(&es * &es.transpose()).scale(h);
            g = &g + &e.scale(h);
        }
        let cross = &g * &sigma;
        for i in 0..2 {
            for j in 0..2 {
                assert!((cov[(2 + i, 2 + j)] - q[(i, j)]).abs() < 1e-8);
                assert!((cov[(2 + i, j)] - cross[(i, j)]).abs() < 1e-8);
            }
        }
        let shift = g.matvec(&[0.2, -0.1]);
        assert!((t.shift[0] - shift[0]).abs() < 1e-8 && (t.shift[1] - shift[1]).abs() < 1e-8);
    }

    #[test]
    fn full_truncation_never_feeds_negative_roots() {
        let cir: Sde<f64> = Sde::Cir { theta: 0.01, a: 0.5, sigma: 1.5 };
        let s = Stepper::new(&cir, Scheme::FullTruncationEuler, 0.25).unwrap();
        let mut rng = PathRng::new(1, 0, false);
        let mut x = [0.01];
        let mut next = [0.0];
        let mut dw = [0.0];
        let mut went_negative = false;
        for _ in 0..2000 {
            s.step(&x, &mut next, &mut dw, &mut rng);
            assert!(next[0].is_finite());
            went_negative |= next[0] < 0.0;
            x = next;
        }
        assert!(went_negative);
    }
}
