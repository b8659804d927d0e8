//! Real Schur decomposition `A = Z T Zᵀ` with eigenvalue reordering.
//!
//! `T` is quasi upper triangular: 1×1 blocks carry real eigenvalues and 2×2
//! blocks carry complex conjugate pairs. The factorisation is computed by a
//! Householder reduction to Hessenberg form followed by Francis double-shift
//! QR sweeps. Blocks can then be permuted along the diagonal by orthogonal
//! swaps of adjacent blocks, which is what invariant-subspace methods such as
//! the Hamiltonian approach to the algebraic Riccati equation need.

use crate::error::{Error, Result};
use crate::linalg::{lu::Lu, Matrix};
use crate::scalar::Scalar;

/// A diagonal block of the quasi-triangular factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub size: usize,
}

#[derive(Clone, Debug)]
pub struct RealSchur<S> {
    t: Matrix<S>,
    z: Matrix<S>,
    blocks: Vec<Block>,
}

impl<S: Scalar> RealSchur<S> {
    pub fn new(a: &Matrix<S>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("Schur form of non-square matrix".into()));
        }
        if !a.is_finite() {
            return Err(Error::NoConvergence("non-finite matrix entries".into()));
        }
        let (mut h, mut z) = hessenberg(a);
        let sizes = francis_qr(&mut h, &mut z)?;
        let mut blocks = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for size in sizes {
            blocks.push(Block { start, size });
            start += size;
        }
        let mut schur = Self { t: h, z, blocks };
        schur.clean();
        Ok(schur)
    }

    pub fn t(&self) -> &Matrix<S> {
        &self.t
    }

    pub fn z(&self) -> &Matrix<S> {
        &self.z
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Eigenvalues `(re, im)` in block order.
    pub fn eigenvalues(&self) -> Vec<(S, S)> {
        let mut out = Vec::with_capacity(self.t.rows());
        for b in &self.blocks {
            if b.size == 1 {
                out.push((self.t[(b.start, b.start)], S::zero()));
            } else {
                let (re, im) = block_eigen(&self.t, b.start);
                out.push((re, im));
                out.push((re, -im));
            }
        }
        out
    }

    fn block_real_part(&self, b: Block) -> S {
        if b.size == 1 {
            self.t[(b.start, b.start)]
        } else {
            block_eigen(&self.t, b.start).0
        }
    }

    /// Moves every block whose eigenvalue satisfies `select(re, im)` to the
    /// leading part of `T`, preserving relative order. Returns the dimension
    /// of the leading invariant subspace.
    pub fn reorder(&mut self, select: impl Fn(S, S) -> bool) -> Result<usize> {
        let mut placed = 0usize;
        let mut idx = 0usize;
        while idx < self.blocks.len() {
            let b = self.blocks[idx];
            let (re, im) = if b.size == 1 {
                (self.t[(b.start, b.start)], S::zero())
            } else {
                block_eigen(&self.t, b.start)
            };
            if select(re, im) {
                let mut k = idx;
                while k > placed {
                    self.swap_adjacent(k - 1)?;
                    k -= 1;
                }
                placed += 1;
            }
            idx += 1;
        }
        Ok(self.blocks[..placed].iter().map(|b| b.size).sum())
    }

    /// Swaps blocks `k` and `k + 1`.
    pub fn swap_adjacent(&mut self, k: usize) -> Result<()> {
        let b1 = self.blocks[k];
        let b2 = self.blocks[k + 1];
        let (n1, n2) = (b1.size, b2.size);
        let j = b1.start;
        let m = n1 + n2;
        let q = if n1 == 1 && n2 == 1 {
            let t11 = self.t[(j, j)];
            let t12 = self.t[(j, j + 1)];
            let t22 = self.t[(j + 1, j + 1)];
            givens_swap(t11, t12, t22)
        } else {
            let a11 = self.t.submatrix(j, j, n1, n1);
            let a12 = self.t.submatrix(j, j + n1, n1, n2);
            let a22 = self.t.submatrix(j + n1, j + n1, n2, n2);
            let x = solve_block_sylvester(&a11, &a22, &a12.scale(-S::one()))?;
            let mut basis = Matrix::zeros(m, n2);
            basis.set_block(0, 0, &x);
            basis.set_block(n1, 0, &Matrix::identity(n2));
            householder_q(&basis)
        };
        self.apply_similarity(j, &q);

        let norm = self.t.frobenius_norm();
        let lower = self.t.submatrix(j + n2, j, n1, n2).max_abs();
        if lower > S::c(1e3) * S::eps() * norm.max(S::one()) {
            return Err(Error::NoConvergence(format!(
                "ill-conditioned block swap at {j} (residual {lower})"
            )));
        }
        for r in 0..n1 {
            for c in 0..n2 {
                self.t[(j + n2 + r, j + c)] = S::zero();
            }
        }
        self.blocks[k] = Block { start: j, size: n2 };
        self.blocks[k + 1] = Block { start: j + n2, size: n1 };
        self.clean();
        Ok(())
    }

    /// `T ← Qᵀ T Q` and `Z ← Z Q` on the index window starting at `j`.
    fn apply_similarity(&mut self, j: usize, q: &Matrix<S>) {
        let n = self.t.rows();
        let m = q.rows();
        let mut tmp = vec![S::zero(); m];
        for col in 0..n {
            for (r, t) in tmp.iter_mut().enumerate() {
                *t = (0..m).map(|i| q[(i, r)] * self.t[(j + i, col)]).sum();
            }
            for (r, &t) in tmp.iter().enumerate() {
                self.t[(j + r, col)] = t;
            }
        }
        for mat in [&mut self.t, &mut self.z] {
            for row in 0..n {
                for (c, t) in tmp.iter_mut().enumerate() {
                    *t = (0..m).map(|i| mat[(row, j + i)] * q[(i, c)]).sum();
                }
                for (c, &t) in tmp.iter().enumerate() {
                    mat[(row, j + c)] = t;
                }
            }
        }
    }

    /// Zeroes everything below the block diagonal.
    fn clean(&mut self) {
        let n = self.t.rows();
        let mut inside = vec![false; n];
        for b in &self.blocks {
            if b.size == 2 {
                inside[b.start] = true;
            }
        }
        for i in 1..n {
            for j in 0..i {
                let keep = j + 1 == i && inside[j];
                if !keep {
                    self.t[(i, j)] = S::zero();
                }
            }
        }
    }

    /// Largest real part of the eigenvalues in the leading `k` blocks.
    pub fn max_real_leading(&self, k: usize) -> S {
        self.blocks[..k]
            .iter()
            .map(|&b| self.block_real_part(b))
            .fold(S::neg_infinity(), S::max)
    }
}

fn block_eigen<S: Scalar>(t: &Matrix<S>, s: usize) -> (S, S) {
    let a = t[(s, s)];
    let b = t[(s, s + 1)];
    let c = t[(s + 1, s)];
    let d = t[(s + 1, s + 1)];
    let p = S::half() * (a - d);
    let disc = p * p + b * c;
    let re = S::half() * (a + d);
    (re, disc.abs().sqrt())
}

/// Rotation whose first column spans the eigenvector of `t22`.
fn givens_swap<S: Scalar>(t11: S, t12: S, t22: S) -> Matrix<S> {
    let x = t12;
    let y = t22 - t11;
    let r = x.hypot(y);
    let (c, s) = if r == S::zero() {
        (S::one(), S::zero())
    } else {
        (x / r, y / r)
    };
    Matrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) | (1, 1) => c,
        (0, 1) => -s,
        _ => s,
    })
}

/// Solves `A11 X - X A22 = C` through the Kronecker form.
fn solve_block_sylvester<S: Scalar>(
    a11: &Matrix<S>,
    a22: &Matrix<S>,
    c: &Matrix<S>,
) -> Result<Matrix<S>> {
    let (n1, n2) = (a11.rows(), a22.rows());
    let n = n1 * n2;
    let mut k = Matrix::zeros(n, n);
    for i in 0..n1 {
        for j in 0..n2 {
            let row = i * n2 + j;
            for p in 0..n1 {
                k[(row, p * n2 + j)] += a11[(i, p)];
            }
            for q in 0..n2 {
                k[(row, i * n2 + q)] -= a22[(q, j)];
            }
        }
    }
    let lu = Lu::new(&k).map_err(|_| {
        Error::NoConvergence("blocks to swap share an eigenvalue".into())
    })?;
    let x = lu.solve_vec(c.as_slice());
    Ok(Matrix::from_fn(n1, n2, |i, j| x[i * n2 + j]))
}

/// Full orthogonal factor of the Householder QR of a tall matrix.
fn householder_q<S: Scalar>(a: &Matrix<S>) -> Matrix<S> {
    let m = a.rows();
    let mut r = a.clone();
    let mut q = Matrix::identity(m);
    for k in 0..a.cols().min(m - 1) {
        let mut v: Vec<S> = (k..m).map(|i| r[(i, k)]).collect();
        let alpha = v.iter().map(|&x| x * x).sum::<S>().sqrt();
        if alpha == S::zero() {
            continue;
        }
        let sign = if v[0] >= S::zero() { S::one() } else { -S::one() };
        v[0] += sign * alpha;
        let vnorm2: S = v.iter().map(|&x| x * x).sum();
        if vnorm2 == S::zero() {
            continue;
        }
        let beta = S::two() / vnorm2;
        for j in 0..r.cols() {
            let s: S = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
            for i in k..m {
                r[(i, j)] -= beta * s * v[i - k];
            }
        }
        for i in 0..m {
            let s: S = (k..m).map(|p| q[(i, p)] * v[p - k]).sum();
            for p in k..m {
                q[(i, p)] -= beta * s * v[p - k];
            }
        }
    }
    q
}

/// Householder reduction `A = Z H Zᵀ` with `H` upper Hessenberg.
fn hessenberg<S: Scalar>(a: &Matrix<S>) -> (Matrix<S>, Matrix<S>) {
    let n = a.rows();
    let mut h = a.clone();
    let mut z = Matrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<S> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let alpha = v.iter().map(|&x| x * x).sum::<S>().sqrt();
        if alpha == S::zero() {
            continue;
        }
        let sign = if v[0] >= S::zero() { S::one() } else { -S::one() };
        v[0] += sign * alpha;
        let vnorm2: S = v.iter().map(|&x| x * x).sum();
        let beta = S::two() / vnorm2;
        for j in 0..n {
            let s: S = (k + 1..n).map(|i| v[i - k - 1] * h[(i, j)]).sum();
            for i in k + 1..n {
                h[(i, j)] -= beta * s * v[i - k - 1];
            }
        }
        for mat in [&mut h, &mut z] {
            for i in 0..n {
                let s: S = (k + 1..n).map(|p| mat[(i, p)] * v[p - k - 1]).sum();
                for p in k + 1..n {
                    mat[(i, p)] -= beta * s * v[p - k - 1];
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = S::zero();
        }
    }
    (h, z)
}

/// Francis double-shift QR on a Hessenberg matrix, accumulating into `z`.
/// Returns the diagonal block sizes from top to bottom.
fn francis_qr<S: Scalar>(h: &mut Matrix<S>, z: &mut Matrix<S>) -> Result<Vec<usize>> {
    let nn = h.rows();
    if nn == 0 {
        return Ok(Vec::new());
    }
    let eps = S::eps();
    let zero = S::zero();
    let mut sizes_rev = Vec::new();
    let mut norm = zero;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    let mut n = nn as isize - 1;
    let mut exshift = zero;
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let max_total = 60 * nn.max(1);
    let (mut p, mut q, mut r, mut s, mut zz);
    let (mut x, mut y, mut w);

    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == zero {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            h[(nu, nu)] += exshift;
            if nu > 0 {
                h[(nu, nu - 1)] = zero;
            }
            sizes_rev.push(1);
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) * S::half();
            q = p * p + w;
            zz = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            if nu > 1 {
                h[(nu - 1, nu - 2)] = zero;
            }
            if q >= zero {
                zz = if p >= zero { p + zz } else { p - zz };
                x = h[(nu, nu - 1)];
                s = x.abs() + zz.abs();
                p = x / s;
                q = zz / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in nu - 1..nn {
                    zz = h[(nu - 1, j)];
                    h[(nu - 1, j)] = q * zz + p * h[(nu, j)];
                    h[(nu, j)] = q * h[(nu, j)] - p * zz;
                }
                for i in 0..=nu {
                    zz = h[(i, nu - 1)];
                    h[(i, nu - 1)] = q * zz + p * h[(i, nu)];
                    h[(i, nu)] = q * h[(i, nu)] - p * zz;
                }
                for i in 0..nn {
                    zz = z[(i, nu - 1)];
                    z[(i, nu - 1)] = q * zz + p * z[(i, nu)];
                    z[(i, nu)] = q * z[(i, nu)] - p * zz;
                }
                h[(nu, nu - 1)] = zero;
                sizes_rev.push(1);
                sizes_rev.push(1);
            } else {
                sizes_rev.push(2);
            }
            n -= 2;
            iter = 0;
        } else {
            total_iter += 1;
            if total_iter > max_total {
                return Err(Error::NoConvergence(
                    "Francis QR iteration limit exceeded".into(),
                ));
            }
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];

            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = S::c(0.75) * s;
                y = x;
                w = S::c(-0.4375) * s * s;
            }
            if iter == 30 {
                s = (y - x) * S::half();
                s = s * s + w;
                if s > zero {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) * S::half() + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = S::c(0.964);
                    y = x;
                    w = x;
                }
            }
            iter += 1;

            let mut m = nu - 2;
            loop {
                zz = h[(m, m)];
                r = x - zz;
                s = y - zz;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - zz - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps
                    * (p.abs() * (h[(m - 1, m - 1)].abs() + zz.abs() + h[(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=nu {
                h[(i, i - 2)] = zero;
                if i > m + 2 {
                    h[(i, i - 3)] = zero;
                }
            }

            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { zero };
                    x = p.abs() + q.abs() + r.abs();
                    if x == zero {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < zero {
                    s = -s;
                }
                if s != zero {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    zz = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * zz;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += zz * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                    for i in 0..nn {
                        p = x * z[(i, k)] + y * z[(i, k + 1)];
                        if notlast {
                            p += zz * z[(i, k + 2)];
                            z[(i, k + 2)] -= p * r;
                        }
                        z[(i, k)] -= p;
                        z[(i, k + 1)] -= p * q;
                    }
                }
            }
        }
    }
    sizes_rev.reverse();
    Ok(sizes_rev)
}
