#![allow(dead_code)]

use longgreeks::linalg::Matrix;
use longgreeks::models::{validate, ModelSpec, PayoffSpec, QtsmParams, ValidatedModel};

pub fn gbm() -> ValidatedModel<f64> {
    validate(ModelSpec::gbm(0.08, 0.2, 0.05, 100.0)).unwrap()
}

pub fn cir() -> ValidatedModel<f64> {
    validate(ModelSpec::cir(0.1, 0.5, 0.2, 0.04)).unwrap()
}

pub fn heston() -> ValidatedModel<f64> {
    validate(ModelSpec::heston(0.08, 0.09, 2.0, 0.3, -0.5, 1.0, 0.04)).unwrap()
}

pub fn three_halves() -> ValidatedModel<f64> {
    validate(ModelSpec::three_halves(2.0, 1.0, 0.5, 0.0, 2.0, 0.5, 1.0)).unwrap()
}

pub fn qtsm_params() -> QtsmParams<f64> {
    QtsmParams {
        b: vec![0.1, -0.2],
        big_b: Matrix::from_rows(&[vec![-1.0, 0.2], vec![0.1, -0.7]]).unwrap(),
        sigma: Matrix::from_rows(&[vec![0.3, 0.0], vec![0.1, 0.4]]).unwrap(),
        beta: 0.01,
        alpha: vec![0.02, 0.01],
        gamma: Matrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.3]]).unwrap(),
    }
}

pub fn qtsm() -> ValidatedModel<f64> {
    validate(ModelSpec::qtsm(qtsm_params(), vec![0.1, 0.2])).unwrap()
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

/// `|a - b| <= k √(sa² + sb²)` with a floor for results that agree to
/// rounding.
pub fn agree(a: f64, sa: f64, b: f64, sb: f64, k: f64) -> bool {
    (a - b).abs() <= k * (sa * sa + sb * sb).sqrt() + 1e-10 * (1.0 + a.abs().max(b.abs()))
}
