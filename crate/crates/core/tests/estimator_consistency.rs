mod common;

use longgreeks::analytic::{cir_bond_price, cir_expectation, heston_reduction, CirDensity, Measure};
use longgreeks::estimators::{
    fd_sensitivity, longterm_slope, price_p, price_q, rho_lr, FdOptions, Pricer, SlopeMethod, SlopeOptions,
};
use longgreeks::extraction::eigenpair;
use longgreeks::models::{validate, Growth, ModelParams, ModelSpec, Param, PayoffSpec, ValidatedModel};
use longgreeks::sim::{GridSpec, McConfig, Scheme};

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[test]
fn gbm_forward_matches_closed_form() {
    let m = validate(ModelSpec::<f64>::gbm(0.08, 0.2, 0.05, 100.0)).unwrap();
    let grid = GridSpec::with_default_steps(5.0).unwrap();
    let e = price_q(&m, &PayoffSpec::power(1.0), &grid, &McConfig::new(100_000, 1)).unwrap();
    let exact = 100.0 * (0.15f64).exp();
    assert!((exact - 116.1834).abs() < 1e-4);
    assert!(e.within(exact, 3.0), "{e} vs {exact}");
}

#[test]
fn cir_bond_matches_closed_form_and_quadrature() {
    let m = common::cir();
    let ModelParams::Cir(cp) = &m.params else { unreachable!() };
    let ext = eigenpair(&m, &PayoffSpec::bond()).unwrap();
    let kappa = -ext.phi.linear[0];
    for horizon in [1.0, 5.0] {
        let exact = cir_bond_price(cp, 0.04, horizon);
        let d = CirDensity::new(cp, Measure::P, 0.04, horizon);
        let e_p = cir_expectation(|r: f64| (kappa * r).exp(), Growth::Exponential(kappa), &d).unwrap();
        let via_density = ext.decompose_price(e_p, horizon);
        assert!((via_density - exact).abs() < 1e-8 * exact, "{via_density} vs {exact}");
        let grid = GridSpec::with_default_steps(horizon).unwrap();
        let mc = McConfig::new(100_000, 12).with_scheme(Scheme::ExactCir);
        let q = price_q(&m, &PayoffSpec::bond(), &grid, &mc).unwrap();
        let p = price_p(&m, &PayoffSpec::bond(), &grid, &mc).unwrap();
        assert!(q.within(exact, 3.0), "Q {q} vs {exact}");
        assert!(p.within(exact, 3.0), "P {p} vs {exact}");
    }
}

#[test]
fn heston_simulation_matches_reduced_bond() {
    let m = common::heston();
    let ModelParams::Heston(hp) = &m.params else { unreachable!() };
    let red = heston_reduction(hp, 0.5, 0.04).unwrap();
    let horizon = 2.0;
    let exact = red.price(cir_bond_price(&red.cir, red.r0, horizon), horizon, 1.0);
    let grid = GridSpec::with_default_steps(horizon).unwrap();
    let e = price_q(&m, &PayoffSpec::power(0.5), &grid, &McConfig::new(100_000, 21)).unwrap();
    assert!(common::agree(e.value, e.std_error, exact, 0.0, 3.0), "{e} vs {exact}");
}

/// `∂ ln p_T/∂S₀` for `f = (s^α - K)_+` under geometric Brownian motion.
fn power_call_log_delta(mu: f64, sigma: f64, s0: f64, alpha: f64, strike: f64, horizon: f64) -> f64 {
    let m = alpha * (s0.ln() + (mu - 0.5 * sigma * sigma) * horizon);
    let s = alpha * sigma * horizon.sqrt();
    let d2 = (m - strike.ln()) / s;
    let d1 = d2 + s;
    let forward = (m + 0.5 * s * s).exp();
    let undiscounted = forward * normal_cdf(d1) - strike * normal_cdf(d2);
    alpha / s0 * forward * normal_cdf(d1) / undiscounted
}

#[test]
fn gbm_call_delta_matches_closed_form() {
    let m = common::gbm();
    let pay = PayoffSpec::power_call(0.5, 5.0);
    let s = longterm_slope(
        &m,
        &pay,
        Param::Xi(0),
        &[5.0, 40.0],
        SlopeMethod::Bel,
        &SlopeOptions::default(),
        &McConfig::new(50_000, 77),
    )
    .unwrap();
    for row in &s.rows {
        let exact = power_call_log_delta(0.08, 0.2, 100.0, 0.5, 5.0, row.horizon);
        assert!(common::agree(row.slope, row.std_error, exact, 0.0, 3.0), "T = {}: {} ± {} vs {exact}", row.horizon, row.slope, row.std_error);
    }
    assert!((s.limit - 0.005).abs() < 1e-15);
    // The closed form itself is still 14% above α/S₀ at T = 40.
    let at_40 = power_call_log_delta(0.08, 0.2, 100.0, 0.5, 5.0, 40.0);
    assert!((at_40 / 0.005 - 1.0) > 0.1);
    let far = power_call_log_delta(0.08, 0.2, 100.0, 0.5, 5.0, 4000.0);
    assert!((far / 0.005 - 1.0).abs() < 0.01);
}

fn lr_fd_pairs() -> Vec<(ValidatedModel<f64>, PayoffSpec<f64>, Vec<Param>)> {
    vec![
        (common::gbm(), PayoffSpec::power_call(0.5, 5.0), vec![Param::Mu, Param::R]),
        (common::cir(), PayoffSpec::bond(), vec![Param::Theta, Param::A]),
        (common::qtsm(), common::bump(), vec![Param::B(0), Param::BigB(0, 1), Param::AlphaVec(1)]),
        (common::heston(), PayoffSpec::power(0.5), vec![Param::Mu, Param::Gamma, Param::Beta]),
        (common::three_halves(), PayoffSpec::letf_utility(0.5, 2.0), vec![Param::Theta, Param::A]),
    ]
}

#[test]
fn likelihood_ratio_agrees_with_finite_differences() {
    for (m, pay, params) in lr_fd_pairs() {
        for param in params {
            let opts = SlopeOptions::default();
            let lr = longterm_slope(&m, &pay, param, &[5.0], SlopeMethod::Lr, &opts, &McConfig::new(40_000, 5)).unwrap();
            let fd = longterm_slope(&m, &pay, param, &[5.0], SlopeMethod::Fd, &opts, &McConfig::new(40_000, 6)).unwrap();
            let (a, b) = (&lr.rows[0], &fd.rows[0]);
            assert!(
                common::agree(a.slope, a.std_error, b.slope, b.std_error, 3.0),
                "{} {param}: LR {} ± {} FD {} ± {}",
                m.kind(),
                a.slope,
                a.std_error,
                b.slope,
                b.std_error
            );
        }
    }
}

#[test]
fn rho_estimator_matches_difference_of_transformed_expectation() {
    // With the integrand held fixed, only the path law moves.
    let m = common::cir();
    let pay = PayoffSpec::bond();
    let grid = GridSpec::with_default_steps(5.0).unwrap();
    let mc = McConfig::new(100_000, 41);
    let lr = rho_lr(&m, &pay, Param::Theta, &grid, &mc).unwrap();
    let ext = eigenpair(&m, &pay).unwrap();
    let h = 1e-4;
    let mean_at = |eps: f64| {
        let moved = validate(m.spec().bumped(Param::Theta, eps).unwrap()).unwrap();
        let moved_ext = eigenpair(&moved, &pay).unwrap();
        let ens = longgreeks::sim::simulate(
            &moved_ext.p,
            &grid,
            &mc,
            &longgreeks::sim::Accumulators::none(),
        )
        .unwrap();
        (0..ens.n_paths).map(|i| ext.p_integrand(ens.terminal(i))).collect::<Vec<f64>>()
    };
    let plus = mean_at(h);
    let minus = mean_at(-h);
    let n = plus.len() as f64;
    let diffs: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let fd = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - fd) * (d - fd)).sum::<f64>() / (n - 1.0);
    let fd_se = (var / n).sqrt();
    assert!(common::agree(lr.value, lr.std_error, fd, fd_se, 3.0), "LR {lr} FD {fd} ± {fd_se}");
}

#[test]
fn slope_addends_sum_to_direct_difference_of_q_price() {
    let cases = [
        (common::cir(), PayoffSpec::bond(), Param::Theta),
        (common::qtsm(), common::bump(), Param::B(0)),
    ];
    for (m, pay, param) in cases {
        let horizon = 5.0;
        let s = longterm_slope(&m, &pay, param, &[horizon], SlopeMethod::Lr, &SlopeOptions::default(), &McConfig::new(100_000, 9))
            .unwrap();
        let row = &s.rows[0];
        let add = row.addends.unwrap();
        assert!((add.total() - row.slope).abs() < 1e-12 * (1.0 + row.slope.abs()));
        assert_eq!(add.lambda, s.limit);
        let grid = GridSpec::with_default_steps(horizon).unwrap();
        let pricer = Pricer::new(&m, &pay, grid, McConfig::new(100_000, 10)).with_measure(Measure::Q);
        let fd = fd_sensitivity(&pricer, param, FdOptions::default()).unwrap();
        let (direct, direct_se) = (fd.value / horizon, fd.std_error / horizon);
        assert!(
            common::agree(row.slope, row.std_error, direct, direct_se, 3.0),
            "{} {param}: assembled {} ± {} direct {direct} ± {direct_se}",
            m.kind(),
            row.slope,
            row.std_error
        );
    }
}

#[test]
fn central_difference_error_is_second_order() {
    let m = common::cir();
    let pay = PayoffSpec::bond();
    let grid = GridSpec::with_default_steps(5.0).unwrap();
    let pricer = Pricer::new(&m, &pay, grid, McConfig::new(20_000, 3)).with_measure(Measure::Q);
    let at = |h: f64| fd_sensitivity(&pricer, Param::Theta, FdOptions { h: Some(h), crn: true, richardson: false }).unwrap().value;
    let h = 0.005;
    let (d1, d2, d4) = (at(h), at(2.0 * h), at(4.0 * h));
    let ratio = (d4 - d2) / (d2 - d1);
    assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
}

#[test]
fn common_random_numbers_shrink_the_error() {
    let m = validate(ModelSpec::<f64>::gbm(0.08, 0.2, 0.05, 100.0)).unwrap();
    let pay = PayoffSpec::power(1.0);
    let grid = GridSpec::with_default_steps(5.0).unwrap();
    let pricer = Pricer::new(&m, &pay, grid, McConfig::new(10_000, 3)).with_measure(Measure::Q);
    let crn = fd_sensitivity(&pricer, Param::Mu, FdOptions::default()).unwrap();
    let ind = fd_sensitivity(&pricer, Param::Mu, FdOptions { crn: false, ..FdOptions::default() }).unwrap();
    assert!((crn.value - 5.0).abs() < 1e-8, "{crn}");
    assert!(ind.std_error >= 10.0 * crn.std_error.max(1e-300));
}

#[test]
fn single_precision_pricing_tracks_double() {
    let m32 = validate(ModelSpec::<f32>::cir(0.1, 0.5, 0.2, 0.04)).unwrap();
    let grid = GridSpec::<f32>::with_default_steps(1.0).unwrap();
    let e = price_q(&m32, &PayoffSpec::bond(), &grid, &McConfig::new(20_000, 2)).unwrap();
    let exact = cir_bond_price(&longgreeks::models::CirParams { theta: 0.1, a: 0.5, sigma: 0.2 }, 0.04, 1.0);
    assert!((e.value as f64 - exact).abs() < 4.0 * e.std_error as f64 + 1e-4);
}
