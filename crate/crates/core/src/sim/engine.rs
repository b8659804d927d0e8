use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::models::{Dynamics, Rate, Sde};
use crate::scalar::Scalar;

use super::grid::GridSpec;
use super::rng::PathRng;
use super::scheme::{Scheme, Stepper};

/// Monte Carlo run settings.
#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// `None` selects [`Scheme::default_for`] the simulated diffusion.
    pub scheme: Option<Scheme>,
    /// Pairs paths `(2k, 2k+1)` with negated normals.
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self { n_paths, seed, scheme: None, antithetic: false }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = Some(scheme);
        self
    }

    pub fn with_antithetic(mut self, antithetic: bool) -> Self {
        self.antithetic = antithetic;
        self
    }

    pub fn resolve_scheme<S>(&self, sde: &Sde<S>) -> Scheme {
        self.scheme.unwrap_or_else(|| Scheme::default_for(sde))
    }

    fn check(&self, scheme: Scheme) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be positive".into()));
        }
        if self.antithetic {
            if !scheme.supports_antithetic() {
                return Err(Error::InvalidParameter(format!(
                    "antithetic sampling is not available for {scheme}"
                )));
            }
            if self.n_paths % 2 == 1 {
                return Err(Error::InvalidParameter(
                    "antithetic sampling needs an even number of paths".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `k̄(x)` written into the output slice, one entry per noise column.
pub type ScoreFn<S> = Arc<dyn Fn(&[S], &mut [S]) -> Result<()> + Send + Sync>;
/// Scalar function of the state.
pub type StateFn<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;

/// Path functionals requested from [`simulate`].
#[derive(Clone, Default)]
pub struct Accumulators<S> {
    /// `∫ r(X_t) dt` by the trapezoidal rule.
    pub discount: bool,
    /// `Σ k̄(X_{t_i}) · ΔB_i`.
    pub score: Option<ScoreFn<S>>,
    /// `∫ (σ⁻¹(X_t) Y_t)ᵀ dB_t`, one entry per initial coordinate.
    pub bel: bool,
    /// The first variation `Y_T`.
    pub variation: bool,
    /// `∫ g(X_t) dt` by the trapezoidal rule.
    pub time_integral: Option<StateFn<S>>,
}

impl<S> Accumulators<S> {
    pub fn none() -> Self {
        Self { discount: false, score: None, bel: false, variation: false, time_integral: None }
    }

    pub fn discount() -> Self {
        Self { discount: true, ..Self::none() }
    }

    pub fn with_score(mut self, score: ScoreFn<S>) -> Self {
        self.score = Some(score);
        self
    }

    pub fn with_bel(mut self) -> Self {
        self.bel = true;
        self
    }

    pub fn with_variation(mut self) -> Self {
        self.variation = true;
        self
    }

    pub fn with_time_integral(mut self, g: StateFn<S>) -> Self {
        self.time_integral = Some(g);
        self
    }
}

/// One step of one path, as seen by a [`PathFunctional`].
pub struct StepView<'a, S> {
    pub index: usize,
    pub dt: S,
    pub x: &'a [S],
    pub next: &'a [S],
    pub dw: &'a [S],
    /// `∂x_{n+1}/∂x_n`, present when the functional asks for it.
    pub jacobian: Option<&'a Matrix<S>>,
    pub stepper: &'a Stepper<S>,
}

/// Streaming per-path accumulator.
pub trait PathFunctional<S: Scalar>: Sync {
    type Acc: Send;

    fn wants_jacobian(&self) -> bool {
        false
    }

    fn start(&self, x0: &[S]) -> Self::Acc;

    fn step(&self, acc: &mut Self::Acc, view: &StepView<'_, S>) -> Result<()>;
}

/// Terminal state and accumulator of one path.
pub struct PathResult<S, A> {
    pub terminal: Vec<S>,
    pub acc: A,
}

/// Simulates `mc.n_paths` paths of `sde` from `xi` and folds each through
/// `functional`. Results are in path order and do not depend on the
/// number of worker threads.
pub fn run_paths<S: Scalar, F: PathFunctional<S>>(
    sde: &Sde<S>,
    xi: &[S],
    grid: &GridSpec<S>,
    mc: &McConfig,
    functional: &F,
) -> Result<Vec<PathResult<S, F::Acc>>> {
    let scheme = mc.resolve_scheme(sde);
    mc.check(scheme)?;
    if xi.len() != sde.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {} but the model has dimension {}",
            xi.len(),
            sde.dim()
        )));
    }
    let stepper = Stepper::new(sde, scheme, grid.dt())?;
    (0..mc.n_paths)
        .into_par_iter()
        .map(|path| run_one(&stepper, xi, grid, mc, path, functional))
        .collect()
}

fn run_one<S: Scalar, F: PathFunctional<S>>(
    stepper: &Stepper<S>,
    xi: &[S],
    grid: &GridSpec<S>,
    mc: &McConfig,
    path: usize,
    functional: &F,
) -> Result<PathResult<S, F::Acc>> {
    let d = xi.len();
    let mut rng = PathRng::for_path(mc.seed, path, mc.antithetic);
    let mut x = xi.to_vec();
    let mut next = vec![S::zero(); d];
    let mut dw = vec![S::zero(); d];
    let mut acc = functional.start(xi);
    let want_j = functional.wants_jacobian();
    for index in 0..grid.n_steps() {
        stepper.step(&x, &mut next, &mut dw, &mut rng);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowup { step: index + 1, path });
        }
        let jac = want_j.then(|| stepper.step_jacobian(&x, &next, &dw));
        let view = StepView {
            index,
            dt: grid.dt(),
            x: &x,
            next: &next,
            dw: &dw,
            jacobian: jac.as_ref(),
            stepper,
        };
        functional.step(&mut acc, &view)?;
        std::mem::swap(&mut x, &mut next);
    }
    Ok(PathResult { terminal: x, acc })
}

/// Frozen per-path output of [`simulate`]. Arrays for accumulators that
/// were not requested are empty.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble<S> {
    pub n_paths: usize,
    pub dim: usize,
    pub horizon: S,
    pub scheme: Scheme,
    pub antithetic: bool,
    /// `n_paths × dim`, row-major.
    pub terminal_states: Vec<S>,
    pub discount_integrals: Vec<S>,
    pub score_integrals: Vec<S>,
    /// `n_paths × dim`.
    pub bel_integrals: Vec<S>,
    /// `n_paths × dim × dim`, each `Y_T` row-major.
    pub variation_terminal: Vec<S>,
    pub time_integrals: Vec<S>,
}

impl<S: Scalar> PathEnsemble<S> {
    pub fn terminal(&self, path: usize) -> &[S] {
        &self.terminal_states[path * self.dim..(path + 1) * self.dim]
    }

    pub fn bel(&self, path: usize) -> &[S] {
        &self.bel_integrals[path * self.dim..(path + 1) * self.dim]
    }

    pub fn variation(&self, path: usize) -> Matrix<S> {
        let dd = self.dim * self.dim;
        let block = &self.variation_terminal[path * dd..(path + 1) * dd];
        Matrix::from_fn(self.dim, self.dim, |i, j| block[i * self.dim + j])
    }
}

struct EnsembleAcc<S> {
    discount: S,
    score: S,
    bel: Vec<S>,
    y: Matrix<S>,
    time: S,
}

struct EnsembleFunctional<'a, S> {
    rate: &'a Rate<S>,
    acc: &'a Accumulators<S>,
    noise: usize,
}

impl<S: Scalar> PathFunctional<S> for EnsembleFunctional<'_, S> {
    type Acc = EnsembleAcc<S>;

    fn wants_jacobian(&self) -> bool {
        self.acc.bel || self.acc.variation
    }

    fn start(&self, x0: &[S]) -> EnsembleAcc<S> {
        let d = x0.len();
        EnsembleAcc {
            discount: S::zero(),
            score: S::zero(),
            bel: vec![S::zero(); d],
            y: Matrix::identity(d),
            time: S::zero(),
        }
    }

    fn step(&self, acc: &mut EnsembleAcc<S>, v: &StepView<'_, S>) -> Result<()> {
        let half_dt = S::half() * v.dt;
        if self.acc.discount {
            acc.discount += half_dt * (self.rate.eval(v.x) + self.rate.eval(v.next));
        }
        if let Some(g) = &self.acc.time_integral {
            acc.time += half_dt * (g(v.x) + g(v.next));
        }
        if let Some(score) = &self.acc.score {
            let mut k = vec![S::zero(); self.noise];
            score(v.x, &mut k)?;
            acc.score += k.iter().zip(v.dw).map(|(&ki, &wi)| ki * wi).sum::<S>();
        }
        if self.acc.bel {
            let weights = sigma_inverse_times(v.stepper.sde(), v.x, &acc.y)?;
            for (k, b) in acc.bel.iter_mut().enumerate() {
                for (i, &w) in v.dw.iter().enumerate() {
                    *b += weights[(i, k)] * w;
                }
            }
        }
        if let Some(j) = v.jacobian {
            acc.y = j * &acc.y;
        }
        Ok(())
    }
}

/// `σ(x)⁻¹ Y`.
pub(crate) fn sigma_inverse_times<S: Scalar>(sde: &Sde<S>, x: &[S], y: &Matrix<S>) -> Result<Matrix<S>> {
    let sigma = sde.diffusion(x);
    let singular = || Error::SingularDiffusion(format!("diffusion is not invertible at state {x:?}"));
    if sigma.rows() == 1 {
        let s = sigma[(0, 0)];
        if s == S::zero() || !s.is_finite() {
            return Err(singular());
        }
        return Ok(y.scale(S::one() / s));
    }
    let lu = Lu::new(&sigma).map_err(|_| singular())?;
    Ok(lu.solve(y))
}

/// Simulates `dynamics` and fills the requested accumulators.
pub fn simulate<S: Scalar>(
    dynamics: &Dynamics<S>,
    grid: &GridSpec<S>,
    mc: &McConfig,
    accumulators: &Accumulators<S>,
) -> Result<PathEnsemble<S>> {
    let d = dynamics.dim();
    let functional = EnsembleFunctional { rate: &dynamics.rate, acc: accumulators, noise: d };
    let results = run_paths(&dynamics.sde, &dynamics.xi, grid, mc, &functional)?;
    let n = results.len();
    let mut ens = PathEnsemble {
        n_paths: n,
        dim: d,
        horizon: grid.horizon(),
        scheme: mc.resolve_scheme(&dynamics.sde),
        antithetic: mc.antithetic,
        terminal_states: Vec::with_capacity(n * d),
        discount_integrals: Vec::new(),
        score_integrals: Vec::new(),
        bel_integrals: Vec::new(),
        variation_terminal: Vec::new(),
        time_integrals: Vec::new(),
    };
    for r in results {
        ens.terminal_states.extend_from_slice(&r.terminal);
        if accumulators.discount {
            ens.discount_integrals.push(r.acc.discount);
        }
        if accumulators.score.is_some() {
            ens.score_integrals.push(r.acc.score);
        }
        if accumulators.bel {
            ens.bel_integrals.extend_from_slice(&r.acc.bel);
        }
        if accumulators.variation {
            ens.variation_terminal.extend_from_slice(r.acc.y.as_slice());
        }
        if accumulators.time_integral.is_some() {
            ens.time_integrals.push(r.acc.time);
        }
    }
    Ok(ens)
}

/// State-dependent matrix field, such as a volatility perturbation `σ̄(x)`.
pub type MatrixFn<S> = Arc<dyn Fn(&[S]) -> Matrix<S> + Send + Sync>;

struct VegaFunctional<S> {
    sigma_bar: MatrixFn<S>,
}

impl<S: Scalar> PathFunctional<S> for VegaFunctional<S> {
    type Acc = Vec<S>;

    fn wants_jacobian(&self) -> bool {
        true
    }

    fn start(&self, x0: &[S]) -> Vec<S> {
        vec![S::zero(); x0.len()]
    }

    fn step(&self, z: &mut Vec<S>, v: &StepView<'_, S>) -> Result<()> {
        let j = v.jacobian.expect("jacobian requested");
        let mut forcing = (self.sigma_bar)(v.x).matvec(v.dw);
        if let Some(w) = v.stepper.forcing_weight() {
            forcing = w.matvec(&forcing);
        }
        let moved = j.matvec(z);
        for (zi, (m, f)) in z.iter_mut().zip(moved.into_iter().zip(forcing)) {
            *zi = m + f;
        }
        Ok(())
    }
}

/// Samples of `Z_T` for `dZ = (b+σϕ)'(X) Z dt + σ̄(X) dB + Σ σ_i'(X) Z dB_i`,
/// `Z₀ = 0`, along paths of the transformed dynamics. Row-major
/// `n_paths × dim`.
pub fn first_variation_vega<S: Scalar>(
    p_dynamics: &Dynamics<S>,
    sigma_bar: MatrixFn<S>,
    grid: &GridSpec<S>,
    mc: &McConfig,
) -> Result<Vec<S>> {
    let d = p_dynamics.dim();
    let probe = sigma_bar(&p_dynamics.xi);
    if probe.rows() != d || probe.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "volatility direction is {}x{} for a {d}-dimensional model",
            probe.rows(),
            probe.cols()
        )));
    }
    if matches!(p_dynamics.sde, Sde::Heston { .. }) && mc.resolve_scheme(&p_dynamics.sde) == Scheme::ExactCir {
        return Err(Error::UnsupportedModel(
            "variance paths from the exact transition carry no pathwise derivative".into(),
        ));
    }
    let f = VegaFunctional { sigma_bar };
    let results = run_paths(&p_dynamics.sde, &p_dynamics.xi, grid, mc, &f)?;
    Ok(results.into_iter().flat_map(|r| r.acc).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn gbm() -> Dynamics<f64> {
        Dynamics { sde: Sde::Gbm { drift: 0.08, vol: 0.2 }, rate: Rate::Const(0.05), xi: vec![100.0] }
    }

    #[test]
    fn exact_gbm_reproduces_the_lognormal_map() {
        let grid = GridSpec::new(1.0, 16).unwrap();
        let mc = McConfig::new(8, 42).with_scheme(Scheme::ExactGbm);
        let ens = simulate(&gbm(), &grid, &mc, &Accumulators::discount().with_score(Arc::new(
            |_: &[f64], k: &mut [f64]| {
                k[0] = 1.0;
                Ok(())
            },
        )))
        .unwrap();
        for p in 0..8 {
            let w = ens.score_integrals[p];
            let exact = 100.0 * ((0.08 - 0.02) * 1.0 + 0.2 * w).exp();
            assert!((ens.terminal(p)[0] - exact).abs() < 1e-10 * exact);
            assert!((ens.discount_integrals[p] - 0.05).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_integrand_gives_scaled_brownian_endpoint() {
        let grid = GridSpec::new(2.0, 50).unwrap();
        let mc = McConfig::new(4, 9).with_scheme(Scheme::ExactGbm);
        let run = |c: f64| {
            simulate(&gbm(), &grid, &mc, &Accumulators::none().with_score(Arc::new(
                move |_: &[f64], k: &mut [f64]| {
                    k[0] = c;
                    Ok(())
                },
            )))
            .unwrap()
        };
        let one = run(1.0);
        let three = run(3.0);
        for p in 0..4 {
            let w = (one.terminal(p)[0] / 100.0).ln() / 0.2 - 0.3 * 2.0;
            assert!((one.score_integrals[p] - w).abs() < 1e-10);
            assert!((three.score_integrals[p] - 3.0 * one.score_integrals[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let cir = Dynamics { sde: Sde::Cir { theta: 0.1, a: 0.5, sigma: 0.2 }, rate: Rate::Coordinate(0), xi: vec![0.04] };
        let grid = GridSpec::new(1.0, 32).unwrap();
        let mc = McConfig::new(200, 5);
        let acc = Accumulators::discount().with_bel().with_variation();
        let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        let a = pool(1).install(|| simulate(&cir, &grid, &mc, &acc).unwrap());
        let b = pool(3).install(|| simulate(&cir, &grid, &mc, &acc).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn variation_starts_at_identity_and_matches_bumped_flow() {
        let ou = Dynamics {
            sde: Sde::Ou {
                b: vec![0.1, 0.0],
                big_b: Matrix::from_rows(&[vec![-1.0, 0.2], vec![0.0, -0.4]]).unwrap(),
                sigma: Matrix::from_rows(&[vec![0.3, 0.0], vec![0.1, 0.2]]).unwrap(),
            },
            rate: Rate::Const(0.0),
            xi: vec![0.2, -0.1],
        };
        let grid = GridSpec::new(1.5, 20).unwrap();
        for scheme in [Scheme::ExactOu, Scheme::EulerMaruyama] {
            let mc = McConfig::new(3, 1).with_scheme(scheme);
            let base = simulate(&ou, &grid, &mc, &Accumulators::none().with_variation()).unwrap();
            let h = 1e-6;
            for k in 0..2 {
                let mut xi = ou.xi.clone();
                xi[k] += h;
                let bumped = simulate(&ou.with_xi(xi), &grid, &mc, &Accumulators::none()).unwrap();
                for p in 0..3 {
                    let y: Matrix<f64> = base.variation(p);
                    for i in 0..2 {
                        let fd = (bumped.terminal(p)[i] - base.terminal(p)[i]) / h;
                        assert!((fd - y[(i, k)]).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn blowup_is_reported_with_its_step() {
        let wild = Dynamics { sde: Sde::Gbm { drift: 400.0, vol: 0.1 }, rate: Rate::Const(0.0), xi: vec![1.0] };
        let grid = GridSpec::new(10.0, 10).unwrap();
        let mc = McConfig::new(2, 1).with_scheme(Scheme::ExactGbm);
        match simulate(&wild, &grid, &mc, &Accumulators::none()) {
            Err(Error::NumericalBlowup { step, path }) => {
                assert_eq!(path, 0);
                assert!((1..=10).contains(&step));
            }
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn antithetic_rules() {
        let cir = Dynamics { sde: Sde::Cir { theta: 0.1, a: 0.5, sigma: 0.2 }, rate: Rate::Coordinate(0), xi: vec![0.04] };
        let grid = GridSpec::new(1.0, 8).unwrap();
        let mc = McConfig::new(4, 1).with_scheme(Scheme::ExactCir).with_antithetic(true);
        assert_eq!(simulate(&cir, &grid, &mc, &Accumulators::none()).unwrap_err().name(), "InvalidParameter");
        let mc = McConfig::new(3, 1).with_antithetic(true);
        assert!(simulate(&gbm(), &grid, &mc, &Accumulators::none()).is_err());
        let mc = McConfig::new(4, 1).with_antithetic(true);
        let ens = simulate(&gbm(), &grid, &mc, &Accumulators::none()).unwrap();
        let l0 = (ens.terminal(0)[0] / 100.0).ln();
        let l1 = (ens.terminal(1)[0] / 100.0).ln();
        assert!((l0 + l1 - 2.0 * 0.06).abs() < 1e-12);
    }

    #[test]
    fn zero_volatility_direction_gives_zero_variation() {
        let grid = GridSpec::new(1.0, 16).unwrap();
        let mc = McConfig::new(16, 3);
        let z = first_variation_vega(&gbm(), Arc::new(|_: &[f64]| Matrix::zeros(1, 1)), &grid, &mc).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }
}
