mod common;

use std::sync::Arc;

use longgreeks::extraction::eigenpair;
use longgreeks::linalg::Matrix;
use longgreeks::models::{validate, ModelSpec, PayoffSpec, QtsmParams};
use longgreeks::sim::{
    first_variation_vega, increments, simulate, Accumulators, GridSpec, McConfig, Scheme,
};

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[test]
fn increments_have_zero_mean_and_independent_streams() {
    let n = 1_000_000;
    let dt = 0.01;
    let a: Vec<f64> = increments(2024, 0, n, 1, dt);
    let b: Vec<f64> = increments(2024, 1, n, 1, dt);
    let (ma, sa) = mean_sd(&a);
    assert!(ma.abs() < 4.0 * (dt / n as f64).sqrt(), "mean {ma}");
    assert!((sa * sa / dt - 1.0).abs() < 0.01, "variance ratio {}", sa * sa / dt);
    let (mb, sb) = mean_sd(&b);
    let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n as f64 - 1.0);
    let rho = cov / (sa * sb);
    assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "correlation {rho}");
    let again: Vec<f64> = increments(2024, 0, n, 1, dt);
    assert!(a.iter().zip(&again).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn exact_cir_one_step_mean() {
    let m = common::cir();
    let dt = 0.25;
    let grid = GridSpec::new(dt, 1).unwrap();
    let mc = McConfig::new(100_000, 31).with_scheme(Scheme::ExactCir);
    let ens = simulate(&m.q_dynamics(), &grid, &mc, &Accumulators::none()).unwrap();
    let (mean, sd) = mean_sd(&ens.terminal_states);
    let (theta, a, r0) = (0.1, 0.5, 0.04);
    let exact = theta / a + (r0 - theta / a) * (-a * dt).exp();
    let se = sd / (ens.n_paths as f64).sqrt();
    assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact} (se {se})");
    assert!(ens.terminal_states.iter().all(|&r| r >= 0.0));
}

#[test]
fn euler_weak_error_halves_with_the_step() {
    // dS = μS dt + σS dW with a large drift so the O(dt) bias dominates noise.
    let m = validate(ModelSpec::gbm(0.5, 0.2, 0.0, 1.0)).unwrap();
    let horizon: f64 = 2.0;
    let exact = (0.5 * horizon).exp();
    let bias = |steps: usize| {
        let grid = GridSpec::new(horizon, steps).unwrap();
        let mc = McConfig::new(100_000, 5).with_scheme(Scheme::EulerMaruyama);
        let ens = simulate(&m.q_dynamics(), &grid, &mc, &Accumulators::none()).unwrap();
        let (mean, sd) = mean_sd(&ens.terminal_states);
        (exact - mean, sd / (ens.n_paths as f64).sqrt())
    };
    let (e4, se4) = bias(4);
    let (e8, se8) = bias(8);
    assert!(e4 > 20.0 * se4 && e8 > 20.0 * se8, "bias must dominate: {e4} {e8}");
    let ratio = e8 / e4;
    assert!((0.25..=0.75).contains(&ratio), "error ratio {ratio}");
    // Exact stepping has no bias at all.
    let grid = GridSpec::new(horizon, 4).unwrap();
    let ens = simulate(&m.q_dynamics(), &grid, &McConfig::new(100_000, 5), &Accumulators::none()).unwrap();
    let (mean, sd) = mean_sd(&ens.terminal_states);
    assert!((mean - exact).abs() < 4.0 * sd / (ens.n_paths as f64).sqrt());
}

/// One-factor quadratic model whose transformed mean reversion `B - 2aV` is -1.
fn unit_ou_model() -> longgreeks::models::ValidatedModel<f64> {
    let p = QtsmParams {
        b: vec![0.0],
        big_b: Matrix::scalar(-0.5),
        sigma: Matrix::scalar(1.0),
        beta: 0.0,
        alpha: vec![0.0],
        gamma: Matrix::scalar(0.375),
    };
    validate(ModelSpec::qtsm(p, vec![0.3])).unwrap()
}

#[test]
fn variation_process_has_ou_variance() {
    let m = unit_ou_model();
    let ext = eigenpair(&m, &PayoffSpec::bump(vec![0.0], 1.0, 1.0)).unwrap();
    let closed_loop = ext.riccati.as_ref().unwrap().care.closed_loop[(0, 0)];
    assert!((closed_loop + 1.0).abs() < 1e-14);
    for (horizon, exact) in [(1.0, (1.0 - (-2.0f64).exp()) / 2.0), (10.0, (1.0 - (-20.0f64).exp()) / 2.0)] {
        let grid = GridSpec::with_default_steps(horizon).unwrap();
        let z = first_variation_vega(
            &ext.p,
            Arc::new(|_: &[f64]| Matrix::scalar(1.0)),
            &grid,
            &McConfig::new(100_000, 17),
        )
        .unwrap();
        let sq: Vec<f64> = z.iter().map(|v| v * v).collect();
        let (m2, sd) = mean_sd(&sq);
        let se = sd / (sq.len() as f64).sqrt();
        assert!((m2 - exact).abs() < 4.0 * se, "T = {horizon}: {m2} vs {exact} (se {se})");
    }
}

#[test]
fn zero_direction_gives_zero_variation() {
    let m = unit_ou_model();
    let ext = eigenpair(&m, &PayoffSpec::bump(vec![0.0], 1.0, 1.0)).unwrap();
    let grid = GridSpec::with_default_steps(2.0).unwrap();
    let z = first_variation_vega(&ext.p, Arc::new(|_: &[f64]| Matrix::scalar(0.0)), &grid, &McConfig::new(64, 1))
        .unwrap();
    assert!(z.iter().all(|&v| v == 0.0));
}

/// `(mean Y^p)^{1/p}` and `ln mean e^Y` with delta-method standard errors.
fn moment_sides(ys: &[f64], p: i32) -> (f64, f64, f64, f64) {
    let n = ys.len() as f64;
    let pow: Vec<f64> = ys.iter().map(|y| y.powi(p)).collect();
    let exp: Vec<f64> = ys.iter().map(|y| y.exp()).collect();
    let (mp, sp) = mean_sd(&pow);
    let (me, se) = mean_sd(&exp);
    let lhs = mp.powf(1.0 / p as f64);
    let lhs_se = lhs / (p as f64 * mp) * sp / n.sqrt();
    (lhs, lhs_se, me.ln(), se / me / n.sqrt())
}

#[test]
fn exponential_moment_bound_on_cir_functionals() {
    let m = common::cir();
    let ext = eigenpair(&m, &PayoffSpec::bond()).unwrap();
    let grid = GridSpec::with_default_steps(10.0).unwrap();
    let acc = Accumulators::none().with_time_integral(Arc::new(|x: &[f64]| x[0]));
    for dynamics in [m.q_dynamics(), ext.p.clone()] {
        let ens = simulate(&dynamics, &grid, &McConfig::new(50_000, 9), &acc).unwrap();
        let ys = &ens.time_integrals;
        assert!(ys.iter().all(|&y| y > 0.0));
        for p in [1, 2] {
            let (lhs, sl, rhs, sr) = moment_sides(ys, p);
            assert!(lhs <= rhs + 3.0 * (sl * sl + sr * sr).sqrt(), "p = {p}: {lhs} > {rhs}");
        }
    }
}

#[test]
fn second_moment_bound_fails_for_small_dispersed_variables() {
    // Y ∈ {0, y} with equal weight: √(E Y²) = y/√2 exceeds ln((1 + e^y)/2) for small y.
    let y = 0.1f64;
    let lhs = (y * y / 2.0).sqrt();
    let rhs = ((1.0 + y.exp()) / 2.0).ln();
    assert!(lhs > rhs);
    // The first-moment version is Jensen's inequality and always holds.
    assert!(y / 2.0 <= rhs);
}
