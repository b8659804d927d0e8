use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::scalar::Scalar;

/// Per-path random source keyed by `(seed, stream)`.
///
/// The stream of a path is a pure function of the seed and the path's
/// stream id, so results do not depend on scheduling. Antithetic partners
/// share a stream and see negated normals.
pub struct PathRng {
    rng: ChaCha8Rng,
    sign: f64,
}

impl PathRng {
    pub fn new(seed: u64, stream: u64, antithetic: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, sign: if antithetic { -1.0 } else { 1.0 } }
    }

    /// Stream for path `path_id`; antithetic pairs are `(2k, 2k+1)`.
    pub fn for_path(seed: u64, path_id: usize, antithetic: bool) -> Self {
        if antithetic {
            Self::new(seed, (path_id / 2) as u64, path_id % 2 == 1)
        } else {
            Self::new(seed, path_id as u64, false)
        }
    }

    pub fn normal(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.sign * z
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn poisson(&mut self, mean: f64) -> f64 {
        if mean <= 0.0 {
            return 0.0;
        }
        match Poisson::new(mean) {
            Ok(p) => p.sample(&mut self.rng),
            Err(_) => mean.round(),
        }
    }

    pub fn gamma(&mut self, shape: f64, scale: f64) -> f64 {
        Gamma::new(shape, scale)
            .map(|g| g.sample(&mut self.rng))
            .unwrap_or(f64::NAN)
    }
}

/// Brownian increments `N(0, dt·I)` of one path, `n_steps × dim`, row-major.
pub fn increments<S: Scalar>(seed: u64, path_id: usize, n_steps: usize, dim: usize, dt: S) -> Vec<S> {
    let mut rng = PathRng::for_path(seed, path_id, false);
    let sd = dt.to_f64_lossy().sqrt();
    (0..n_steps * dim).map(|_| S::c(sd * rng.normal())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<f64> = increments(7, 3, 50, 2, 0.01);
        let b: Vec<f64> = increments(7, 3, 50, 2, 0.01);
        assert_eq!(a, b);
        let c: Vec<f64> = increments(7, 4, 50, 2, 0.01);
        assert_ne!(a, c);
    }

    #[test]
    fn antithetic_partner_is_negated() {
        let mut p = PathRng::for_path(11, 4, true);
        let mut q = PathRng::for_path(11, 5, true);
        for _ in 0..10 {
            assert_eq!(p.normal(), -q.normal());
        }
    }
}
