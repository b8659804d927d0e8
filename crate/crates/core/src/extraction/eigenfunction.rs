use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Positive eigenfunction in log-polynomial form
/// `ln φ(x) = Σ pᵢ ln xᵢ + ⟨c, x⟩ + ⟨Qx, x⟩`.
///
/// Every catalog eigenfunction has this shape: powers for GBM and 3/2,
/// an exponential for CIR, a quadratic exponential for QTSM and a
/// power-times-exponential for Heston.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenFunction<S> {
    pub log_powers: Vec<S>,
    pub linear: Vec<S>,
    pub quadratic: Matrix<S>,
}

impl<S: Scalar> EigenFunction<S> {
    pub fn new(log_powers: Vec<S>, linear: Vec<S>, quadratic: Matrix<S>) -> Self {
        Self { log_powers, linear, quadratic }
    }

    pub fn power(powers: Vec<S>) -> Self {
        let d = powers.len();
        Self::new(powers, vec![S::zero(); d], Matrix::zeros(d, d))
    }

    pub fn exponential(linear: Vec<S>) -> Self {
        let d = linear.len();
        Self::new(vec![S::zero(); d], linear, Matrix::zeros(d, d))
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn log_value(&self, x: &[S]) -> S {
        let mut g = S::zero();
        for (i, &p) in self.log_powers.iter().enumerate() {
            if p != S::zero() {
                g += p * x[i].ln();
            }
        }
        for (i, &c) in self.linear.iter().enumerate() {
            if c != S::zero() {
                g += c * x[i];
            }
        }
        if self.quadratic.max_abs() != S::zero() {
            g += self.quadratic.bilinear(x, x);
        }
        g
    }

    pub fn value(&self, x: &[S]) -> S {
        self.log_value(x).exp()
    }

    /// `∇ ln φ = ∇φ/φ`.
    pub fn log_gradient(&self, x: &[S]) -> Vec<S> {
        let qx = self.quadratic.matvec(x);
        let qtx = self.quadratic.tr_matvec(x);
        (0..self.dim())
            .map(|i| {
                let mut g = self.linear[i] + qx[i] + qtx[i];
                if self.log_powers[i] != S::zero() {
                    g += self.log_powers[i] / x[i];
                }
                g
            })
            .collect()
    }

    /// `∇² ln φ`.
    pub fn log_hessian(&self, x: &[S]) -> Matrix<S> {
        let mut h = &self.quadratic + &self.quadratic.transpose();
        for (i, &p) in self.log_powers.iter().enumerate() {
            if p != S::zero() {
                h[(i, i)] -= p / (x[i] * x[i]);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let f: EigenFunction<f64> = EigenFunction::new(
            vec![0.4, 0.0],
            vec![0.1, -0.3],
            Matrix::from_rows(&[vec![-0.2, 0.05], vec![0.05, -0.1]]).unwrap(),
        );
        let x = [1.2, 0.7];
        let g = f.log_gradient(&x);
        let h = f.log_hessian(&x);
        let eps = 1e-5;
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += eps;
            xm[k] -= eps;
            let fd = (f.log_value(&xp) - f.log_value(&xm)) / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-9);
            let gp = f.log_gradient(&xp);
            let gm = f.log_gradient(&xm);
            for j in 0..2 {
                assert!(((gp[j] - gm[j]) / (2.0 * eps) - h[(j, k)]).abs() < 1e-8);
            }
        }
    }
}
