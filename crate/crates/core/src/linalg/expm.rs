use crate::error::Result;
use crate::linalg::{lu, Matrix};
use crate::scalar::Scalar;

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm<S: Scalar>(a: &Matrix<S>) -> Result<Matrix<S>> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.rows();
    let norm = a.norm_one().to_f64_lossy();
    let theta13 = 5.371920351148152;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a.scale(S::c(2f64.powi(-s)));
    let id = Matrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| S::c(B[i]);
    let u_inner = &(&a6.scale(b(13)) + &a4.scale(b(11))) + &a2.scale(b(9));
    let u_tail = &(&(&a6.scale(b(7)) + &a4.scale(b(5))) + &a2.scale(b(3))) + &id.scale(b(1));
    let u = &a * &(&(&a6 * &u_inner) + &u_tail);
    let v_inner = &(&a6.scale(b(12)) + &a4.scale(b(10))) + &a2.scale(b(8));
    let v = &(&a6 * &v_inner)
        + &(&(&(&a6.scale(b(6)) + &a4.scale(b(4))) + &a2.scale(b(2))) + &id.scale(b(0)));
    let p = &v + &u;
    let q = &v - &u;
    let mut r = lu::Lu::new(&q)?.solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}
