//! Leveraged fund value on a simulated 3/2 path.

use crate::error::{Error, Result};
use crate::models::ThreeHalvesParams;
use crate::scalar::Scalar;

/// `L_T = X_T^β exp(-r(β-1)T - ½β(β-1)σ² ∫₀ᵀ X_u du)` for `X₀ = L₀ = 1`,
/// with the time integral taken by the trapezoidal rule on a uniform grid.
pub fn letf_terminal<S: Scalar>(path: &[S], dt: S, p: &ThreeHalvesParams<S>) -> Result<S> {
    if path.is_empty() {
        return Err(Error::NonPositivePath("empty path".into()));
    }
    if let Some(i) = path.iter().position(|&x| !(x > S::zero()) || !x.is_finite()) {
        return Err(Error::NonPositivePath(format!("state {} at index {i}", path[i])));
    }
    let n = path.len() - 1;
    let horizon = dt * S::from_usize_lossy(n);
    let mut integral = S::zero();
    for w in path.windows(2) {
        integral += S::half() * (w[0] + w[1]) * dt;
    }
    let beta = p.leverage;
    let drag = p.r * (beta - S::one()) * horizon
        + S::half() * beta * (beta - S::one()) * p.sigma * p.sigma * integral;
    Ok((beta * path[n].ln() - drag).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(leverage: f64, r: f64) -> ThreeHalvesParams<f64> {
        ThreeHalvesParams { theta: 2.0, a: 1.0, sigma: 0.5, r, leverage, alpha: 0.5 }
    }

    #[test]
    fn examples() {
        let path = vec![1.0; 101];
        let l = letf_terminal(&path, 0.01, &params(2.0, 0.05)).unwrap();
        assert!((l - (-0.3f64).exp()).abs() < 1e-14);
        let l = letf_terminal(&path, 0.01, &params(-1.0, 0.0)).unwrap();
        assert!((l - (-0.25f64).exp()).abs() < 1e-14);
        let wiggly = vec![1.0, 1.3, 0.8, 1.7];
        let l = letf_terminal(&wiggly, 0.1, &params(1.0, 0.05)).unwrap();
        assert!((l - 1.7).abs() < 1e-14);
        assert_eq!(
            letf_terminal(&[1.0, -0.1], 0.1, &params(2.0, 0.0)).unwrap_err().name(),
            "NonPositivePath"
        );
    }
}
