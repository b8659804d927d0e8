//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Absolute and relative tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_segments: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-10, rel: 1e-8, max_segments: 4000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature<S> {
    pub value: S,
    pub error: S,
    pub segments: usize,
}

#[derive(Clone, Copy)]
struct Segment<S> {
    lo: S,
    hi: S,
    value: S,
    error: S,
}

fn kronrod<S: Scalar>(f: &impl Fn(S) -> S, lo: S, hi: S) -> Segment<S> {
    let centre = S::half() * (lo + hi);
    let half = S::half() * (hi - lo);
    let fc = f(centre);
    let mut k = fc * S::c(WGK[7]);
    let mut g = fc * S::c(WG[3]);
    for j in 0..7 {
        let dx = half * S::c(XGK[j]);
        let pair = f(centre - dx) + f(centre + dx);
        k += S::c(WGK[j]) * pair;
        if j % 2 == 1 {
            g += S::c(WG[j / 2]) * pair;
        }
    }
    Segment { lo, hi, value: k * half, error: ((k - g) * half).abs() }
}

/// `∫_lo^hi f`.
pub fn integrate<S: Scalar>(f: impl Fn(S) -> S, lo: S, hi: S, tol: Tolerance) -> Result<Quadrature<S>> {
    let mut segs = vec![kronrod(&f, lo, hi)];
    loop {
        let value: S = segs.iter().map(|s| s.value).sum();
        let error: S = segs.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(Error::NoConvergence("quadrature produced a non-finite value".into()));
        }
        let target = S::c(tol.abs).max(S::c(tol.rel) * value.abs());
        if error <= target || segs.len() >= tol.max_segments {
            return Ok(Quadrature { value, error, segments: segs.len() });
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .fold((0, S::neg_infinity()), |acc, (i, s)| if s.error > acc.1 { (i, s.error) } else { acc });
        let worst = segs.swap_remove(idx);
        let mid = S::half() * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            return Ok(Quadrature { value, error, segments: segs.len() + 1 });
        }
        segs.push(kronrod(&f, worst.lo, mid));
        segs.push(kronrod(&f, mid, worst.hi));
    }
}

/// `∫_0^∞ f` through the substitution `r = u/(1-u)`.
pub fn integrate_half_line<S: Scalar>(f: impl Fn(S) -> S, tol: Tolerance) -> Result<Quadrature<S>> {
    let g = |u: S| {
        let w = S::one() - u;
        if w <= S::zero() {
            return S::zero();
        }
        let r = u / w;
        let v = f(r) / (w * w);
        if v.is_finite() {
            v
        } else {
            S::zero()
        }
    };
    integrate(g, S::zero(), S::one(), tol)
}
