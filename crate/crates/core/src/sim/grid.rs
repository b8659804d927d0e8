use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform time grid on `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<S> {
    n_steps: usize,
    dt: S,
}

impl<S: Scalar> GridSpec<S> {
    pub fn new(horizon: S, n_steps: usize) -> Result<Self> {
        if n_steps == 0 || !(horizon > S::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid needs a positive horizon and step count, got T = {horizon}, n = {n_steps}"
            )));
        }
        Ok(Self { n_steps, dt: horizon / S::from_usize_lossy(n_steps) })
    }

    /// `max(64, ⌈32 T⌉)` steps.
    pub fn with_default_steps(horizon: S) -> Result<Self> {
        Self::new(horizon, default_steps(horizon.to_f64_lossy(), 32.0))
    }

    /// `max(64, ⌈steps_per_year · T⌉)` steps.
    pub fn with_steps_per_year(horizon: S, steps_per_year: f64) -> Result<Self> {
        Self::new(horizon, default_steps(horizon.to_f64_lossy(), steps_per_year))
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> S {
        self.dt
    }

    /// `n_steps · dt`.
    pub fn horizon(&self) -> S {
        self.dt * S::from_usize_lossy(self.n_steps)
    }

    pub fn time(&self, i: usize) -> S {
        self.dt * S::from_usize_lossy(i)
    }
}

pub fn default_steps(horizon: f64, steps_per_year: f64) -> usize {
    ((steps_per_year * horizon).ceil() as usize).max(64)
}
