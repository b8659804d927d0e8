//! Reference models and payoffs shared by the self-test and the acceptance
//! suite.

use longgreeks::linalg::Matrix;
use longgreeks::models::{validate, ModelKind, ModelSpec, PayoffSpec, QtsmParams, ValidatedModel};
use longgreeks::sim::{McConfig, Scheme};

pub fn gbm() -> ValidatedModel<f64> {
    validate(ModelSpec::gbm(0.08, 0.2, 0.05, 100.0)).expect("valid reference model")
}

pub fn cir() -> ValidatedModel<f64> {
    validate(ModelSpec::cir(0.1, 0.5, 0.2, 0.04)).expect("valid reference model")
}

pub fn heston() -> ValidatedModel<f64> {
    validate(ModelSpec::heston(0.08, 0.09, 2.0, 0.3, -0.5, 1.0, 0.04)).expect("valid reference model")
}

pub fn three_halves() -> ValidatedModel<f64> {
    validate(ModelSpec::three_halves(2.0, 1.0, 0.5, 0.0, 2.0, 0.5, 1.0)).expect("valid reference model")
}

pub fn qtsm_params() -> QtsmParams<f64> {
    let m = |rows: &[Vec<f64>]| Matrix::from_rows(rows).expect("rectangular");
    QtsmParams {
        b: vec![0.1, -0.2],
        big_b: m(&[vec![-1.0, 0.2], vec![0.1, -0.7]]),
        sigma: m(&[vec![0.3, 0.0], vec![0.1, 0.4]]),
        beta: 0.01,
        alpha: vec![0.02, 0.01],
        gamma: m(&[vec![0.5, 0.1], vec![0.1, 0.3]]),
    }
}

pub fn qtsm() -> ValidatedModel<f64> {
    validate(ModelSpec::qtsm(qtsm_params(), vec![0.1, 0.2])).expect("valid reference model")
}

pub fn bump() -> PayoffSpec<f64> {
    PayoffSpec::bump(vec![0.0, 0.0], 1.0, 1.0)
}

/// Every catalog model with its reference payoff.
pub fn catalog() -> Vec<(ValidatedModel<f64>, PayoffSpec<f64>)> {
    vec![
        (gbm(), PayoffSpec::power(0.5)),
        (cir(), PayoffSpec::bond()),
        (qtsm(), bump()),
        (heston(), PayoffSpec::power(0.5)),
        (three_halves(), PayoffSpec::letf_utility(0.5, 2.0)),
    ]
}

/// The pairs on which the Q and P prices are compared.
pub fn decomposition_cases() -> Vec<(ValidatedModel<f64>, PayoffSpec<f64>)> {
    vec![
        (gbm(), PayoffSpec::power(0.5)),
        (cir(), PayoffSpec::bond()),
        (qtsm(), bump()),
        (three_halves(), PayoffSpec::letf_utility(0.5, 2.0)),
    ]
}

/// One hundred interior states per model; two-factor models use a 10 × 10
/// grid.
pub fn state_grid(kind: ModelKind) -> Vec<Vec<f64>> {
    let lin = |lo: f64, hi: f64, n: usize, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    match kind {
        ModelKind::Gbm => (0..100).map(|i| vec![lin(1.0, 400.0, 100, i)]).collect(),
        ModelKind::Cir => (0..100).map(|i| vec![lin(1e-3, 2.0, 100, i)]).collect(),
        ModelKind::ThreeHalves => (0..100).map(|i| vec![lin(0.05, 10.0, 100, i)]).collect(),
        ModelKind::Qtsm => (0..100).map(|i| vec![lin(-2.0, 2.0, 10, i / 10), lin(-2.0, 2.0, 10, i % 10)]).collect(),
        ModelKind::Heston => (0..100).map(|i| vec![lin(0.2, 5.0, 10, i / 10), lin(0.005, 0.5, 10, i % 10)]).collect(),
    }
}

/// Monte Carlo settings for pricing identities: exact square-root
/// transitions where the model has them, defaults elsewhere.
pub fn pricing_mc(kind: ModelKind, n_paths: usize, seed: u64) -> McConfig {
    let mc = McConfig::new(n_paths, seed);
    match kind {
        ModelKind::Cir | ModelKind::ThreeHalves => mc.with_scheme(Scheme::ExactCir),
        _ => mc,
    }
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// `|a - b| / √(sa² + sb²)`, zero when the values agree to rounding.
pub fn z_gap(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let gap = (a - b).abs() - 1e-10 * (1.0 + a.abs().max(b.abs()));
    if gap <= 0.0 {
        0.0
    } else {
        gap / (sa * sa + sb * sb).sqrt()
    }
}
