use crate::error::{Error, Result};
use crate::linalg::{lu::Lu, Matrix};
use crate::scalar::Scalar;

/// Solves `A X + X B = C` for square `A` (m×m), `B` (n×n) via the
/// Kronecker system `(I ⊗ A + Bᵀ ⊗ I) vec X = vec C`.
pub fn sylvester<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>, c: &Matrix<S>) -> Result<Matrix<S>> {
    let (m, n) = (a.rows(), b.rows());
    if !a.is_square() || !b.is_square() || c.rows() != m || c.cols() != n {
        return Err(Error::DimensionMismatch("Sylvester operand shapes".into()));
    }
    let dim = m * n;
    let mut k = Matrix::zeros(dim, dim);
    for i in 0..m {
        for j in 0..n {
            let row = i * n + j;
            for p in 0..m {
                k[(row, p * n + j)] += a[(i, p)];
            }
            for q in 0..n {
                k[(row, i * n + q)] += b[(q, j)];
            }
        }
    }
    let x = Lu::new(&k)
        .map_err(|_| Error::SingularMatrix("Sylvester operator is singular".into()))?
        .solve_vec(c.as_slice());
    Ok(Matrix::from_fn(m, n, |i, j| x[i * n + j]))
}

/// Solves the continuous Lyapunov equation `A X + X Aᵀ + Q = 0`.
pub fn lyapunov<S: Scalar>(a: &Matrix<S>, q: &Matrix<S>) -> Result<Matrix<S>> {
    Ok(sylvester(a, &a.transpose(), &q.scale(-S::one()))?.symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_lyapunov() {
        let a = Matrix::scalar(-1.0f64);
        let x = lyapunov(&a, &Matrix::scalar(1.0)).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sylvester_residual() {
        let a: Matrix<f64> = Matrix::from_rows(&[vec![-2.0, 1.0], vec![0.5, -3.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![-1.0, 0.2, 0.0], vec![0.0, -4.0, 1.0], vec![0.3, 0.0, -2.0]])
            .unwrap();
        let c = Matrix::from_fn(2, 3, |i, j| (i + 2 * j) as f64 - 1.5);
        let x = sylvester(&a, &b, &c).unwrap();
        let res = &(&(&a * &x) + &(&x * &b)) - &c;
        assert!(res.max_abs() < 1e-13);
    }
}
