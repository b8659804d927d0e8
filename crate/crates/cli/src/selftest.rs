//! Fast oracle checks behind the `selftest` subcommand.
//!
//! Each check returns a [`Criterion`] carrying the measured value and the
//! tolerance it was judged against. The Monte Carlo checks take the path
//! count as an argument.

use longgreeks::analytic::{cir_expectation, heston_limit, heston_limit_by_chain_rule, CirDensity, Measure};
use longgreeks::estimators::{price_p, price_q};
use longgreeks::extraction::{eigenpair, Extraction};
use longgreeks::linalg::Matrix;
use longgreeks::models::{Growth, ModelParams, Param, PayoffSpec};
use longgreeks::riccati::{lambda_prime_numeric, solve_care, CareProblem};
use longgreeks::sim::{simulate, Accumulators, GridSpec, McConfig, PathRng};
use longgreeks::Result;

use crate::fixtures::{self, mean_se, z_gap};
use crate::table::{Cell, Table};

#[derive(Clone, Debug, PartialEq)]
pub struct Criterion {
    pub id: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: String,
}

impl Criterion {
    fn at_most(id: &'static str, name: &'static str, measured: f64, limit: f64) -> Self {
        Self { id, name, pass: measured < limit, measured, tolerance: format!("< {limit:e}") }
    }

    fn within_se(id: &'static str, name: &'static str, z: f64, k: f64) -> Self {
        Self { id, name, pass: z <= k, measured: z, tolerance: format!("<= {k} SE") }
    }

    pub fn line(&self) -> String {
        format!(
            "{} criterion {:<3} {:<44} measured {:.6e}  tolerance {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

/// Worst `|ℒφ + λφ|/φ` over the catalog state grids, with `fault` added
/// to every eigenvalue first.
pub fn eigenpair_defect(fault: f64) -> Result<Criterion> {
    let mut worst = 0.0f64;
    for (m, pay) in fixtures::catalog() {
        let mut ext = eigenpair(&m, &pay)?;
        ext.lambda += fault;
        for x in fixtures::state_grid(m.kind()) {
            worst = worst.max(ext.generator_residual(&x).abs());
        }
    }
    Ok(Criterion::at_most("1", "eigenpair defect", worst, 1e-8))
}

fn martingale_samples(ext: &Extraction<f64>, horizon: f64, mc: &McConfig) -> Result<Vec<f64>> {
    let grid = GridSpec::with_default_steps(horizon)?;
    let ens = simulate(&ext.q, &grid, mc, &Accumulators::discount())?;
    let ln_phi0 = ext.phi.log_value(ext.xi());
    Ok((0..ens.n_paths)
        .map(|i| (ext.lambda * horizon - ens.discount_integrals[i] + ext.phi.log_value(ens.terminal(i)) - ln_phi0).exp())
        .collect())
}

/// Largest standardized gap between `E^Q[M_T]` and one over the catalog at
/// `T ∈ {1, 5}`.
pub fn martingale_mean(n_paths: usize, seed: u64) -> Result<Criterion> {
    let mut worst = 0.0f64;
    for (m, pay) in fixtures::catalog() {
        let ext = eigenpair(&m, &pay)?;
        for horizon in [1.0, 5.0] {
            let xs = martingale_samples(&ext, horizon, &fixtures::pricing_mc(m.kind(), n_paths, seed))?;
            let (mean, se) = mean_se(&xs);
            worst = worst.max(z_gap(mean, se, 1.0, 0.0));
        }
    }
    Ok(Criterion::within_se("2", "martingale mean", worst, 3.0))
}

/// Largest standardized gap between Q and P prices over the decomposition
/// cases at `T ∈ {1, 5}`.
pub fn decomposition(n_paths: usize, seed: u64) -> Result<Criterion> {
    let mut worst = 0.0f64;
    for (m, pay) in fixtures::decomposition_cases() {
        for horizon in [1.0, 5.0] {
            let grid = GridSpec::with_default_steps(horizon)?;
            let q = price_q(&m, &pay, &grid, &fixtures::pricing_mc(m.kind(), n_paths, seed))?;
            let p = price_p(&m, &pay, &grid, &fixtures::pricing_mc(m.kind(), n_paths, seed ^ 0x5A5A))?;
            worst = worst.max(z_gap(q.value, q.std_error, p.value, p.std_error));
        }
    }
    Ok(Criterion::within_se("3", "Q and P price decomposition", worst, 3.0))
}

/// Standardized gap of the GBM forward `E^Q[e^{-rT} S_T]` to `S₀e^{(μ-r)T}`.
pub fn exact_gbm(n_paths: usize, seed: u64) -> Result<Criterion> {
    let m = fixtures::gbm();
    let horizon = 5.0;
    let grid = GridSpec::with_default_steps(horizon)?;
    let e = price_q(&m, &PayoffSpec::power(1.0), &grid, &McConfig::new(n_paths, seed))?;
    let exact = 100.0 * (0.03f64 * horizon).exp();
    Ok(Criterion::within_se("4", "exact GBM forward", z_gap(e.value, e.std_error, exact, 0.0), 3.0))
}

/// Worst `|∫g - 1|` of the CIR transition density under both measures.
pub fn density_normalization() -> Result<Criterion> {
    let m = fixtures::cir();
    let ModelParams::Cir(cp) = &m.params else { unreachable!("CIR fixture") };
    let mut worst = 0.0f64;
    for measure in [Measure::Q, Measure::P] {
        for t in [0.1, 1.0, 5.0, 10.0] {
            let d = CirDensity::new(cp, measure, 0.04, t);
            let mass = cir_expectation(|_| 1.0, Growth::Bounded, &d)?;
            worst = worst.max((mass - 1.0).abs());
        }
    }
    Ok(Criterion::at_most("5a", "CIR density normalization", worst, 1e-8))
}

fn spd(rng: &mut PathRng, d: usize) -> Matrix<f64> {
    let r = Matrix::from_fn(d, d, |_, _| 2.0 * rng.uniform() - 1.0);
    let mut s = &r * &r.transpose();
    let delta = 0.1 + 0.9 * rng.uniform();
    for i in 0..d {
        s[(i, i)] += delta;
    }
    s.symmetrized()
}

/// Stabilizing root of `2aV² - 2BV - Γ = 0`.
fn scalar_root(a: f64, b: f64, g: f64) -> f64 {
    let s = (b * b + 2.0 * a * g).sqrt();
    if b >= 0.0 {
        (b + s) / (2.0 * a)
    } else {
        g / (s - b)
    }
}

/// Riccati solver on `instances` random problems of dimension one to
/// five: worst normalized residual, with stability and the scalar root as
/// hard requirements.
pub fn riccati_suite(instances: usize, seed: u64) -> Result<Criterion> {
    let mut worst = 0.0f64;
    let mut sound = true;
    for k in 0..instances {
        let mut rng = PathRng::new(seed, k as u64, false);
        let d = 1 + k % 5;
        let a = spd(&mut rng, d);
        let b = Matrix::from_fn(d, d, |_, _| 2.0 * rng.uniform() - 1.0);
        let gamma = spd(&mut rng, d);
        let gnorm = gamma.frobenius_norm();
        let sol = solve_care(&CareProblem::new(a.clone(), b.clone(), gamma.clone())?)?;
        worst = worst.max(sol.residual_norm / (1.0 + gnorm));
        sound &= sol.stable && sol.v.asymmetry() < 1e-12;
        if d == 1 {
            let root = scalar_root(a[(0, 0)], b[(0, 0)], gamma[(0, 0)]);
            sound &= (sol.v[(0, 0)] - root).abs() <= 1e-14 * root.abs().max(1.0);
        }
    }
    let mut c = Criterion::at_most("8a", "Riccati residual / (1 + |Γ|)", worst, 1e-10);
    c.pass &= sound;
    c.tolerance.push_str(", stable, scalar root to 1e-14");
    Ok(c)
}

/// `|∂λ/∂β - 1|` from the numerical Riccati derivative.
pub fn lambda_beta() -> Result<Criterion> {
    let lp = lambda_prime_numeric(&fixtures::qtsm_params(), Param::Beta, None)?;
    Ok(Criterion::at_most("8c", "numeric dλ/dβ - 1", (lp.value - 1.0).abs(), 1e-10))
}

/// Worst gap between the Heston limits and their chain-rule assembly from
/// the reduced CIR limits.
pub fn heston_chain_rule() -> Result<Criterion> {
    let m = fixtures::heston();
    let ModelParams::Heston(hp) = &m.params else { unreachable!("Heston fixture") };
    let params = [Param::Mu, Param::Gamma, Param::Beta, Param::Delta, Param::Rho, Param::Xi(0), Param::Xi(1)];
    let mut worst = 0.0f64;
    for alpha in [0.25, 0.5] {
        for p in params {
            let (_, direct) = heston_limit(hp, alpha, 1.0, p)?;
            let (_, chained) = heston_limit_by_chain_rule(hp, alpha, 1.0, 0.04, p)?;
            worst = worst.max((direct - chained).abs());
        }
    }
    Ok(Criterion::at_most("9b", "Heston chain-rule limits", worst, 1e-10))
}

/// Paths per Monte Carlo check in the fast subset.
pub const PATHS: usize = 20_000;

/// The fast subset run by `selftest`.
pub fn run(n_paths: usize, seed: u64, lambda_fault: f64) -> Result<Vec<Criterion>> {
    Ok(vec![
        eigenpair_defect(lambda_fault)?,
        martingale_mean(n_paths, seed)?,
        decomposition(n_paths, seed)?,
        exact_gbm(n_paths, seed)?,
        density_normalization()?,
        riccati_suite(100, seed)?,
        lambda_beta()?,
        heston_chain_rule()?,
    ])
}

pub fn table(criteria: &[Criterion]) -> Table {
    let mut t = Table::new(&["criterion", "name", "status", "measured", "tolerance"]);
    for c in criteria {
        t.push(vec![
            Cell::from(c.id),
            Cell::from(c.name),
            Cell::from(if c.pass { "pass" } else { "fail" }),
            Cell::from(c.measured),
            Cell::from(c.tolerance.as_str()),
        ]);
    }
    t
}
