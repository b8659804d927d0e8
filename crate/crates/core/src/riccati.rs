//! Stabilizing solution of the quadratic-model Riccati equation
//! `2VaV - BᵀV - VB - Γ = 0` by the Hamiltonian invariant-subspace method,
//! together with the extraction inputs `(V, u, λ)` and their parameter
//! derivatives.

use crate::error::{Error, Result};
use crate::linalg::{dot, sylvester, Lu, Matrix, RealSchur};
use crate::models::{validate, ModelSpec, Param, QtsmParams, MAX_QTSM_DIM};
use crate::scalar::Scalar;

/// Coefficients `(a, B, Γ)` of the Riccati equation.
#[derive(Clone, Debug, PartialEq)]
pub struct CareProblem<S> {
    pub a: Matrix<S>,
    pub b: Matrix<S>,
    pub gamma: Matrix<S>,
}

fn symmetric_within<S: Scalar>(m: &Matrix<S>, tol: S) -> bool {
    m.asymmetry() <= tol * (S::one() + m.max_abs())
}

impl<S: Scalar> CareProblem<S> {
    /// Checks shapes and symmetry. Definiteness of `Γ` is left to the
    /// solver, which reports an eigenvalue on the imaginary axis when the
    /// Hamiltonian has no dichotomy.
    pub fn new(a: Matrix<S>, b: Matrix<S>, gamma: Matrix<S>) -> Result<Self> {
        let d = a.rows();
        let shapes_ok = [&a, &b, &gamma].iter().all(|m| m.rows() == d && m.cols() == d);
        if d == 0 || !shapes_ok {
            return Err(Error::DimensionMismatch(
                "a, B and Gamma must be square of equal size".into(),
            ));
        }
        if d > MAX_QTSM_DIM {
            return Err(Error::DimensionMismatch(format!(
                "dimension {d} exceeds the dense limit {MAX_QTSM_DIM}"
            )));
        }
        if ![&a, &b, &gamma].iter().all(|m| m.is_finite()) {
            return Err(Error::InvalidParameter("non-finite Riccati coefficient".into()));
        }
        let tol = S::c(1e-12).max(S::c(16.0) * S::eps());
        if !symmetric_within(&a, tol) {
            return Err(Error::InvalidParameter("a must be symmetric".into()));
        }
        if !a.is_positive_definite() {
            return Err(Error::SingularSigma("a = sigma sigma^T is not positive definite".into()));
        }
        if !symmetric_within(&gamma, tol) {
            return Err(Error::NonSpdGamma("Gamma must be symmetric".into()));
        }
        Ok(Self { a, b, gamma })
    }

    pub fn from_qtsm(p: &QtsmParams<S>) -> Result<Self> {
        Self::new(p.a(), p.big_b.clone(), p.gamma.clone())
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// `H = [[B, -2a], [-Γ, -Bᵀ]]`.
    pub fn hamiltonian(&self) -> Matrix<S> {
        let d = self.dim();
        let mut h = Matrix::zeros(2 * d, 2 * d);
        h.set_block(0, 0, &self.b);
        h.set_block(0, d, &self.a.scale(-S::two()));
        h.set_block(d, 0, &self.gamma.scale(-S::one()));
        h.set_block(d, d, &self.b.transpose().scale(-S::one()));
        h
    }

    /// `2VaV - BᵀV - VB - Γ`.
    pub fn residual(&self, v: &Matrix<S>) -> Matrix<S> {
        let vav = v * &(&self.a * v);
        let btv = &self.b.transpose() * v;
        let vb = v * &self.b;
        &(&(&vav.scale(S::two()) - &btv) - &vb) - &self.gamma
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CareSolution<S> {
    pub v: Matrix<S>,
    /// `B - 2aV`.
    pub closed_loop: Matrix<S>,
    pub closed_loop_eigenvalues: Vec<(S, S)>,
    pub residual_norm: S,
    /// Frobenius asymmetry of `P₂₁P₁₁⁻¹` before symmetrization.
    pub raw_asymmetry: S,
    pub stable: bool,
}

/// Solves the Riccati equation for its stabilizing root.
pub fn solve_care<S: Scalar>(problem: &CareProblem<S>) -> Result<CareSolution<S>> {
    let d = problem.dim();
    let h = problem.hamiltonian();
    let hnorm = h.frobenius_norm();
    let axis_tol = S::c(1e-10).max(S::c(64.0) * S::eps()) * hnorm;

    let mut schur = RealSchur::new(&h)?;
    if let Some(&(re, im)) = schur.eigenvalues().iter().find(|(re, _)| re.abs() < axis_tol) {
        return Err(Error::ImaginaryAxisEigenvalue(format!(
            "Hamiltonian eigenvalue {re:e}{im:+e}i lies within {axis_tol:e} of the imaginary axis"
        )));
    }
    let stable_dim = schur.reorder(|re, _| re < S::zero())?;
    if stable_dim != d {
        return Err(Error::ImaginaryAxisEigenvalue(format!(
            "stable subspace has dimension {stable_dim}, expected {d}"
        )));
    }

    let z = schur.z();
    let p11 = z.submatrix(0, 0, d, d);
    let p21 = z.submatrix(d, 0, d, d);
    // V P11 = P21, solved as P11ᵀ Vᵀ = P21ᵀ.
    let lu = Lu::new(&p11.transpose())
        .map_err(|_| Error::SingularP11("stable invariant subspace is not a graph".into()))?;
    let cond_probe = lu.inverse().max_abs() * p11.max_abs();
    if !cond_probe.is_finite() || cond_probe > S::one() / (S::c(16.0) * S::eps()) {
        return Err(Error::SingularP11(format!(
            "P11 is numerically singular (condition estimate {cond_probe:e})"
        )));
    }
    let raw = lu.solve(&p21.transpose()).transpose();
    let raw_asymmetry = (&raw - &raw.transpose()).frobenius_norm();
    let v = raw.symmetrized();

    let closed_loop = &problem.b - &(&problem.a * &v).scale(S::two());
    let closed_loop_eigenvalues = RealSchur::new(&closed_loop)?.eigenvalues();
    let stable = closed_loop_eigenvalues.iter().all(|&(re, _)| re < S::zero());
    let residual_norm = problem.residual(&v).frobenius_norm();
    Ok(CareSolution {
        v,
        closed_loop,
        closed_loop_eigenvalues,
        residual_norm,
        raw_asymmetry,
        stable,
    })
}

/// Extraction inputs of the quadratic model.
#[derive(Clone, Debug, PartialEq)]
pub struct QtsmInputs<S> {
    pub v: Matrix<S>,
    /// `u = (2Va - Bᵀ)⁻¹ (2Vb + α)`.
    pub u: Vec<S>,
    /// `λ = β - ½uᵀau + tr(aV) + uᵀb`.
    pub lambda: S,
    pub care: CareSolution<S>,
}

pub fn qtsm_extraction_inputs<S: Scalar>(p: &QtsmParams<S>) -> Result<QtsmInputs<S>> {
    let care = solve_care(&CareProblem::from_qtsm(p)?)?;
    let a = p.a();
    let v = care.v.clone();
    let m = &(&v * &a).scale(S::two()) - &p.big_b.transpose();
    let mut w = v.matvec(&p.b);
    for (wi, &ai) in w.iter_mut().zip(&p.alpha) {
        *wi = S::two() * *wi + ai;
    }
    let u = Lu::new(&m)?.solve_vec(&w);
    let lambda = p.beta - S::half() * a.bilinear(&u, &u) + (&a * &v).trace() + dot(&u, &p.b);
    Ok(QtsmInputs { v, u, lambda, care })
}

/// A perturbation direction in quadratic-model parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct QtsmDirection<S> {
    pub b: Vec<S>,
    pub big_b: Matrix<S>,
    pub sigma: Matrix<S>,
    pub beta: S,
    pub alpha: Vec<S>,
    pub gamma: Matrix<S>,
}

impl<S: Scalar> QtsmDirection<S> {
    pub fn zero(d: usize) -> Self {
        Self {
            b: vec![S::zero(); d],
            big_b: Matrix::zeros(d, d),
            sigma: Matrix::zeros(d, d),
            beta: S::zero(),
            alpha: vec![S::zero(); d],
            gamma: Matrix::zeros(d, d),
        }
    }

    /// Unit direction of a named parameter, matching [`ModelSpec::bumped`].
    pub fn of(p: &QtsmParams<S>, param: Param) -> Result<Self> {
        let d = p.dim();
        let mut dir = Self::zero(d);
        match param {
            Param::Beta => dir.beta = S::one(),
            Param::B(i) if i < d => dir.b[i] = S::one(),
            Param::AlphaVec(i) if i < d => dir.alpha[i] = S::one(),
            Param::BigB(i, j) if i < d && j < d => dir.big_b[(i, j)] = S::one(),
            Param::SigmaEntry(i, j) if i < d && j < d => dir.sigma[(i, j)] = S::one(),
            Param::GammaScale => dir.gamma = p.gamma.clone(),
            _ => {
                return Err(Error::NotInCatalog(format!(
                    "parameter {param} is not a QTSM coefficient"
                )))
            }
        }
        Ok(dir)
    }
}

/// First-order response of `(V, u, λ)` along a direction.
#[derive(Clone, Debug, PartialEq)]
pub struct QtsmTangent<S> {
    pub v: Matrix<S>,
    pub u: Vec<S>,
    pub lambda: S,
}

/// Differentiates the Riccati root and the extraction inputs implicitly.
///
/// With `A = B - 2aV` the tangent `V̇` solves the Lyapunov-type equation
/// `AᵀV̇ + V̇A = -(ḂᵀV + VḂ + Γ̇ - 2VȧV)`.
pub fn qtsm_tangent<S: Scalar>(
    p: &QtsmParams<S>,
    base: &QtsmInputs<S>,
    dir: &QtsmDirection<S>,
) -> Result<QtsmTangent<S>> {
    let a = p.a();
    let v = &base.v;
    let u = &base.u;
    let da = &(&dir.sigma * &p.sigma.transpose()) + &(&p.sigma * &dir.sigma.transpose());
    let acl = &base.care.closed_loop;

    let forcing = &(&(&(&dir.big_b.transpose() * v) + &(v * &dir.big_b)) + &dir.gamma)
        - &(v * &(&da * v)).scale(S::two());
    let dv = sylvester(&acl.transpose(), acl, &forcing.scale(-S::one()))?.symmetrized();

    let m = &(v * &a).scale(S::two()) - &p.big_b.transpose();
    let dm = &(&(&dv * &a) + &(v * &da)).scale(S::two()) - &dir.big_b.transpose();
    let dvb = dv.matvec(&p.b);
    let vdb = v.matvec(&dir.b);
    let dmu = dm.matvec(u);
    let rhs: Vec<S> = (0..p.dim())
        .map(|i| S::two() * (dvb[i] + vdb[i]) + dir.alpha[i] - dmu[i])
        .collect();
    let du = Lu::new(&m)?.solve_vec(&rhs);

    let dlambda = dir.beta - a.bilinear(u, &du) - S::half() * da.bilinear(u, u)
        + (&da * v).trace()
        + (&a * &dv).trace()
        + dot(&du, &p.b)
        + dot(u, &dir.b);
    Ok(QtsmTangent { v: dv, u: du, lambda: dlambda })
}

/// Central-difference estimate of `∂λ/∂param` with a Richardson check.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaPrime<S> {
    /// Central difference at step `h`.
    pub value: S,
    /// Central difference at step `h/2`.
    pub half_step: S,
    /// Richardson extrapolation `(4 D(h/2) - D(h)) / 3`.
    pub extrapolated: S,
    pub h: S,
}

/// Default step `1e-5 (1 + |param|)`.
pub fn default_step<S: Scalar>(value: S) -> S {
    S::c(1e-5) * (S::one() + value.abs())
}

/// Richardson consistency of three central differences at `h`, `h/2`, `h/4`.
pub fn richardson_consistent<S: Scalar>(d_h: S, d_h2: S, d_h4: S) -> bool {
    let coarse = (d_h - d_h2).abs();
    let fine = (d_h2 - d_h4).abs();
    coarse <= S::c(40.0) * fine + S::c(1e-9) * (S::one() + d_h2.abs())
}

fn lambda_at<S: Scalar>(p: &QtsmParams<S>, param: Param, h: S) -> Result<S> {
    let spec = ModelSpec::qtsm(p.clone(), vec![S::zero(); p.dim()]).bumped(param, h)?;
    let model = validate(spec)?;
    match &model.params {
        crate::models::ModelParams::Qtsm(q) => Ok(qtsm_extraction_inputs(q)?.lambda),
        _ => unreachable!("bumping preserves the model kind"),
    }
}

/// `λ'(0)` along `param` by re-solving the Riccati equation at `±h`.
pub fn lambda_prime_numeric<S: Scalar>(
    p: &QtsmParams<S>,
    param: Param,
    h: Option<S>,
) -> Result<LambdaPrime<S>> {
    let spec = ModelSpec::qtsm(p.clone(), vec![S::zero(); p.dim()]);
    let h = h.unwrap_or_else(|| default_step(spec.param_value(param).unwrap_or(S::zero())));
    if !(h > S::zero()) {
        return Err(Error::InvalidParameter("difference step must be positive".into()));
    }
    let central = |step: S| -> Result<S> {
        Ok((lambda_at(p, param, step)? - lambda_at(p, param, -step)?) / (S::two() * step))
    };
    let d1 = central(h)?;
    let d2 = central(h * S::half())?;
    let d4 = central(h * S::c(0.25))?;
    if !richardson_consistent(d1, d2, d4) {
        return Err(Error::StepTooLarge(format!(
            "central differences {d1:e}, {d2:e}, {d4:e} at h = {h:e} are not O(h^2) consistent"
        )));
    }
    Ok(LambdaPrime {
        value: d1,
        half_step: d2,
        extrapolated: (S::c(4.0) * d2 - d1) / S::c(3.0),
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_problem(a: f64, b: f64, g: f64) -> CareProblem<f64> {
        CareProblem::new(Matrix::scalar(a), Matrix::scalar(b), Matrix::scalar(g)).unwrap()
    }

    fn scalar_qtsm(b: f64, big_b: f64, gamma: f64) -> QtsmParams<f64> {
        QtsmParams {
            b: vec![b],
            big_b: Matrix::scalar(big_b),
            sigma: Matrix::scalar(1.0),
            beta: 0.0,
            alpha: vec![0.0],
            gamma: Matrix::scalar(gamma),
        }
    }

    #[test]
    fn scalar_root() {
        let s = solve_care(&scalar_problem(1.0, 0.0, 1.0)).unwrap();
        assert!((s.v[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((s.closed_loop[(0, 0)] + 2f64.sqrt()).abs() < 1e-14);
        assert!(s.stable);
    }

    #[test]
    fn zero_gamma_hits_axis() {
        let err = solve_care(&scalar_problem(1.0, 0.0, 0.0)).unwrap_err();
        assert_eq!(err.name(), "ImaginaryAxisEigenvalue");
    }

    #[test]
    fn decoupled_pair() {
        let i2: Matrix<f64> = Matrix::identity(2);
        let p = CareProblem::new(i2.clone(), Matrix::zeros(2, 2), i2).unwrap();
        let s = solve_care(&p).unwrap();
        let expected = Matrix::<f64>::identity(2).scale(0.5f64.sqrt());
        assert!((&s.v - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn extraction_inputs_examples() {
        let q = qtsm_extraction_inputs(&scalar_qtsm(0.0, 0.0, 1.0)).unwrap();
        assert!(q.u[0].abs() < 1e-15);
        assert!((q.lambda - 0.5f64.sqrt()).abs() < 1e-14);

        let q = qtsm_extraction_inputs(&scalar_qtsm(1.0, 0.0, 1.0)).unwrap();
        assert!((q.u[0] - 1.0).abs() < 1e-14);
        assert!((q.lambda - (0.5f64.sqrt() + 0.5)).abs() < 1e-14);

        let p = QtsmParams {
            b: vec![0.0; 2],
            big_b: Matrix::zeros(2, 2),
            sigma: Matrix::identity(2),
            beta: 5.0,
            alpha: vec![0.0; 2],
            gamma: Matrix::identity(2),
        };
        let q = qtsm_extraction_inputs(&p).unwrap();
        assert!((q.lambda - (5.0 + 2.0 / 2f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn numeric_derivatives() {
        let p = scalar_qtsm(0.0, 0.0, 1.0);
        let beta = lambda_prime_numeric(&p, Param::Beta, None).unwrap();
        assert!((beta.value - 1.0).abs() < 1e-10);

        let g = lambda_prime_numeric(&p, Param::GammaScale, None).unwrap();
        assert!((g.value - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-9);

        // λ(b) = 1/√2 + b²/2 at a = 1, B = Γ-scale = 1: u = b, so λ' = b.
        let p = scalar_qtsm(0.3, 0.0, 1.0);
        let db = lambda_prime_numeric(&p, Param::B(0), None).unwrap();
        assert!((db.value - 0.3).abs() < 1e-9);
    }

    #[test]
    fn tangent_matches_numeric() {
        let p: QtsmParams<f64> = QtsmParams {
            b: vec![0.1, -0.2],
            big_b: Matrix::from_rows(&[vec![-0.8, 0.3], vec![0.1, -0.5]]).unwrap(),
            sigma: Matrix::from_rows(&[vec![0.3, 0.0], vec![0.1, 0.2]]).unwrap(),
            beta: 0.01,
            alpha: vec![0.05, 0.02],
            gamma: Matrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 0.5]]).unwrap(),
        };
        let base = qtsm_extraction_inputs(&p).unwrap();
        for param in [
            Param::B(1),
            Param::BigB(0, 1),
            Param::SigmaEntry(1, 0),
            Param::AlphaVec(0),
            Param::GammaScale,
        ] {
            let dir = QtsmDirection::of(&p, param).unwrap();
            let t = qtsm_tangent(&p, &base, &dir).unwrap();
            let n = lambda_prime_numeric(&p, param, None).unwrap();
            assert!((t.lambda - n.extrapolated).abs() < 1e-8, "{param}: {} {}", t.lambda, n.value);
        }
    }
}
