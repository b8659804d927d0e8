use std::fmt;
use std::time::{Duration, Instant};

use crate::scalar::Scalar;
use crate::sim::Scheme;

/// A Monte Carlo point estimate with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate<S> {
    pub value: S,
    /// Sample standard deviation of the per-path contributions over `√n`.
    /// Antithetic runs use the pair averages as samples.
    pub std_error: S,
    pub n_paths: usize,
    pub scheme: Scheme,
    pub antithetic: bool,
    pub wall_time: Duration,
}

impl<S: Scalar> Estimate<S> {
    /// `|a - b| / √(se_a² + se_b²)`, infinite when both errors vanish and
    /// the values differ.
    pub fn z_score(&self, other: &Estimate<S>) -> S {
        z_score(self.value, self.std_error, other.value, other.std_error)
    }

    pub fn within(&self, target: S, n_se: S) -> bool {
        (self.value - target).abs() <= n_se * self.std_error
    }
}

impl<S: Scalar> fmt::Display for Estimate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} ± {:.2e} (n = {}, {})", self.value, self.std_error, self.n_paths, self.scheme)
    }
}

/// `|a - b| / √(sa² + sb²)`.
pub fn z_score<S: Scalar>(a: S, sa: S, b: S, sb: S) -> S {
    let gap = (a - b).abs();
    let se = (sa * sa + sb * sb).sqrt();
    if se > S::zero() {
        gap / se
    } else if gap == S::zero() {
        S::zero()
    } else {
        S::infinity()
    }
}

/// Wall-clock timer for [`Estimate::wall_time`].
pub(crate) struct Clock(Instant);

impl Clock {
    pub(crate) fn start() -> Self {
        Clock(Instant::now())
    }

    pub(crate) fn elapsed(&self) -> Duration {
        self.0.elapsed()
    }
}

/// Mean and standard error of per-path samples, accumulated in `f64`.
/// With `antithetic` the samples are first averaged over pairs `(2k, 2k+1)`.
pub(crate) fn mean_se<S: Scalar>(samples: &[S], antithetic: bool) -> (S, S) {
    let xs = paired(samples.iter().map(|v| v.to_f64_lossy()), antithetic);
    let (m, se) = mean_se_f64(&xs);
    (S::c(m), S::c(se))
}

/// Ratio of means `Σa / Σb` with a delta-method standard error computed on
/// the joint sample.
pub(crate) fn ratio_se<S: Scalar>(num: &[S], den: &[S], antithetic: bool) -> (S, S) {
    let a = paired(num.iter().map(|v| v.to_f64_lossy()), antithetic);
    let b = paired(den.iter().map(|v| v.to_f64_lossy()), antithetic);
    let (ma, _) = mean_se_f64(&a);
    let (mb, _) = mean_se_f64(&b);
    let ratio = ma / mb;
    let influence: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - ratio * y) / mb).collect();
    let (_, se) = mean_se_f64(&influence);
    (S::c(ratio), S::c(se))
}

/// `ln Σa - ln Σb` for two samples on shared paths, with the linearised
/// per-path difference as the error sample.
pub(crate) fn log_ratio_paired<S: Scalar>(plus: &[S], minus: &[S], antithetic: bool) -> (S, S) {
    let a = paired(plus.iter().map(|v| v.to_f64_lossy()), antithetic);
    let b = paired(minus.iter().map(|v| v.to_f64_lossy()), antithetic);
    let (ma, _) = mean_se_f64(&a);
    let (mb, _) = mean_se_f64(&b);
    let influence: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x / ma - y / mb).collect();
    let (_, se) = mean_se_f64(&influence);
    (S::c(ma.ln() - mb.ln()), S::c(se))
}

/// Same as [`log_ratio_paired`] for independent samples.
pub(crate) fn log_ratio_independent<S: Scalar>(plus: &[S], minus: &[S], antithetic: bool) -> (S, S) {
    let a = paired(plus.iter().map(|v| v.to_f64_lossy()), antithetic);
    let b = paired(minus.iter().map(|v| v.to_f64_lossy()), antithetic);
    let (ma, sa) = mean_se_f64(&a);
    let (mb, sb) = mean_se_f64(&b);
    let se = ((sa / ma).powi(2) + (sb / mb).powi(2)).sqrt();
    (S::c(ma.ln() - mb.ln()), S::c(se))
}

fn paired(values: impl Iterator<Item = f64>, antithetic: bool) -> Vec<f64> {
    let xs: Vec<f64> = values.collect();
    if antithetic {
        xs.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
    } else {
        xs
    }
}

fn mean_se_f64(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    // Sums run on deviations from the first sample.
    let shift = xs[0];
    let offset = xs.iter().map(|x| x - shift).sum::<f64>() / n as f64;
    let mean = shift + offset;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - shift - offset) * (x - shift - offset)).sum();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}
