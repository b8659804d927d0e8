use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<S> {
    lu: Matrix<S>,
    perm: Vec<usize>,
    sign: S,
}

impl<S: Scalar> Lu<S> {
    pub fn new(a: &Matrix<S>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = S::one();
        let scale = a.max_abs().max(S::min_positive_value());
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -S::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > scale * S::eps() * S::c(16.0)) {
                return Err(Error::SingularMatrix(format!(
                    "zero pivot in column {k} of a {n}x{n} matrix"
                )));
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                if m != S::zero() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= m * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve_vec(&self, b: &[S]) -> Vec<S> {
        let n = self.dim();
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                x[i] = x[i] - u * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &Matrix<S>) -> Matrix<S> {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let col = self.solve_vec(&b.column(j));
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn inverse(&self) -> Matrix<S> {
        self.solve(&Matrix::identity(self.dim()))
    }

    pub fn determinant(&self) -> S {
        (0..self.dim()).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }
}

/// Solves `A x = b`.
pub fn solve<S: Scalar>(a: &Matrix<S>, b: &[S]) -> Result<Vec<S>> {
    Ok(Lu::new(a)?.solve_vec(b))
}

pub fn inverse<S: Scalar>(a: &Matrix<S>) -> Result<Matrix<S>> {
    Ok(Lu::new(a)?.inverse())
}
