//! Task execution: each task turns a resolved configuration into a result
//! table plus diagnostics.

use longgreeks::analytic::quadrature::{integrate_half_line, Tolerance};
use longgreeks::analytic::CirDensity;
use longgreeks::estimators::{longterm_slope, Pricer, SlopeMethod, SlopeOptions, SlopeSeries};
use longgreeks::extraction::{eigenpair, stabilization_check, Verdict};
use longgreeks::linalg::Matrix;
use longgreeks::models::{ModelParams, PayoffSpec, ValidatedModel};
use longgreeks::riccati::{solve_care, CareProblem};
use longgreeks::sim::{GridSpec, McConfig};
use longgreeks::Error;
use serde_json::{json, Map, Value};

use crate::config::{matrix, sensitivity_target, ExperimentConfig, FdBlock, MeasureTag, TaskConfig};
use crate::failure::Failure;
use crate::selftest;
use crate::table::{Cell, Table};

/// Paths used by the stabilization diagnostic attached to Monte Carlo tasks.
pub const DIAGNOSTIC_PATHS: usize = 20_000;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    pub diagnostics: Map<String, Value>,
    /// Printed on stdout instead of the CSV table.
    pub stdout_json: Option<Value>,
    /// Identifiers of failed self-test criteria.
    pub failed: Vec<String>,
}

impl Outcome {
    fn new(table: Table) -> Self {
        Self { table, diagnostics: Map::new(), stdout_json: None, failed: Vec::new() }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, Failure> {
    match &cfg.task {
        TaskConfig::Price { measure } => price(cfg, *measure),
        TaskConfig::Greeks { param, method, fd } => sensitivity(cfg, param, method.as_deref(), fd, false),
        TaskConfig::Convergence { param, method, fd } => sensitivity(cfg, param, method.as_deref(), fd, true),
        TaskConfig::Density { t, measure, r_max, points } => density(cfg, *t, *measure, *r_max, *points),
        TaskConfig::Riccati { a, big_b, gamma } => riccati(cfg, a.as_deref(), big_b.as_deref(), gamma.as_deref()),
        TaskConfig::Selftest { lambda_fault } => self_test(cfg, *lambda_fault),
    }
}

fn horizons(cfg: &ExperimentConfig) -> Result<Vec<f64>, Failure> {
    let hs = cfg.horizons();
    if hs.is_empty() || hs.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Failure::config("horizons must be positive and finite"));
    }
    Ok(hs)
}

fn model_and_payoff(cfg: &ExperimentConfig) -> Result<(ValidatedModel<f64>, PayoffSpec<f64>), Failure> {
    let model = cfg.model()?;
    let payoff = cfg.payoff()?;
    model.check_payoff(&payoff)?;
    Ok((model, payoff))
}

/// Row `i` gets its own stream family so rows are independent.
fn row_mc(mc: &McConfig, i: usize) -> McConfig {
    McConfig { seed: mc.seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)), ..mc.clone() }
}

/// Stabilization of `E^P[φ⁻¹f(X_T)]` over the run's horizons, or over
/// `[T, 2T]` for single-horizon runs. Failures are reported, not raised.
fn stabilization(
    model: &ValidatedModel<f64>,
    payoff: &PayoffSpec<f64>,
    hs: &[f64],
    mc: &McConfig,
) -> Value {
    let hs = if hs.len() >= 2 { hs.to_vec() } else { vec![hs[0], 2.0 * hs[0]] };
    let mc = McConfig { n_paths: mc.n_paths.min(DIAGNOSTIC_PATHS), ..mc.clone() };
    let result = eigenpair(model, payoff).and_then(|ext| stabilization_check(&ext, model, &hs, &mc));
    match result {
        Ok(d) => json!({
            "method": d.method.name(),
            "verdict": if d.verdict == Verdict::Pass { "pass" } else { "fail" },
            "measured": d.measured,
            "witness": d.witness,
            "limit": d.limit,
            "values": d.values.iter().map(|v| json!({"T": v.horizon, "value": v.value, "stderr": v.std_error})).collect::<Vec<_>>(),
        }),
        Err(e) => json!({"verdict": "unavailable", "error": e.name(), "message": e.to_string()}),
    }
}

fn price(cfg: &ExperimentConfig, measure: MeasureTag) -> Result<Outcome, Failure> {
    let (model, payoff) = model_and_payoff(cfg)?;
    let mc = cfg.mc()?;
    let hs = horizons(cfg)?;
    let mut table = Table::new(&["T", "estimate", "stderr"]);
    let mut schemes = Vec::new();
    for (i, &horizon) in hs.iter().enumerate() {
        let grid = GridSpec::with_steps_per_year(horizon, cfg.grid.steps_per_year)?;
        let e = Pricer::new(&model, &payoff, grid, row_mc(&mc, i)).with_measure(measure.into()).price()?;
        table.push(vec![horizon.into(), e.value.into(), e.std_error.into()]);
        schemes.push(e.scheme.to_string());
    }
    let mut out = Outcome::new(table);
    out.diagnostics.insert("schemes".into(), json!(schemes));
    out.diagnostics.insert("stabilization".into(), stabilization(&model, &payoff, &hs, &mc));
    Ok(out)
}

fn richardson_flag(series: &SlopeSeries<f64>, fd: &FdBlock) -> Value {
    if series.method != SlopeMethod::Fd {
        return json!({"enabled": false, "applies": false});
    }
    json!({"enabled": fd.richardson, "applies": true, "verdict": if fd.richardson { "consistent" } else { "not checked" }})
}

fn sensitivity(
    cfg: &ExperimentConfig,
    param: &str,
    method: Option<&str>,
    fd: &FdBlock,
    convergence: bool,
) -> Result<Outcome, Failure> {
    let (model, payoff) = model_and_payoff(cfg)?;
    let (param, method) = sensitivity_target(param, method)?;
    let mc = cfg.mc()?;
    let hs = horizons(cfg)?;
    let opts = SlopeOptions { steps_per_year: cfg.grid.steps_per_year, fd: fd.options() };
    let series = longterm_slope(&model, &payoff, param, &hs, method, &opts, &mc)?;
    let method_name = series.method.name();
    let table = if convergence {
        let mut t = Table::new(&["T", "slope", "stderr", "limit", "abs_gap", "method"]);
        for r in &series.rows {
            t.push(vec![
                r.horizon.into(),
                r.slope.into(),
                r.std_error.into(),
                r.limit.into(),
                r.abs_gap.into(),
                method_name.into(),
            ]);
        }
        t
    } else {
        let mut t = Table::new(&[
            "T",
            "param",
            "method",
            "slope",
            "stderr",
            "limit",
            "abs_gap",
            "eigenvalue_term",
            "eigenfunction_term",
            "payoff_term",
            "path_term",
            "n_paths",
            "scheme",
        ]);
        for r in &series.rows {
            let parts: Vec<Cell> = match &r.addends {
                Some(a) => vec![a.lambda.into(), a.phi.into(), a.payoff.into(), a.stochastic.into()],
                None => vec![Cell::from(""), Cell::from(""), Cell::from(""), Cell::from("")],
            };
            let mut row = vec![
                r.horizon.into(),
                param.to_string().into(),
                method_name.into(),
                r.slope.into(),
                r.std_error.into(),
                r.limit.into(),
                r.abs_gap.into(),
            ];
            row.extend(parts);
            row.push(r.n_paths.into());
            row.push(r.scheme.to_string().into());
            t.push(row);
        }
        t
    };
    let mut out = Outcome::new(table);
    out.diagnostics.insert("param".into(), json!(param.to_string()));
    out.diagnostics.insert("method".into(), json!(method_name));
    out.diagnostics.insert("limit_kind".into(), json!(format!("{:?}", series.kind)));
    out.diagnostics.insert("limit".into(), json!(series.limit));
    out.diagnostics.insert("richardson".into(), richardson_flag(&series, fd));
    out.diagnostics.insert("stabilization".into(), stabilization(&model, &payoff, &hs, &mc));
    Ok(out)
}

fn density(
    cfg: &ExperimentConfig,
    t: Option<f64>,
    measure: MeasureTag,
    r_max: f64,
    points: usize,
) -> Result<Outcome, Failure> {
    let model = cfg.model()?;
    let ModelParams::Cir(params) = &model.params else {
        return Err(Error::UnsupportedModel(format!("the density task needs a CIR model, got {}", model.kind())).into());
    };
    let t = t.unwrap_or(cfg.grid.horizon);
    if !(t.is_finite() && t > 0.0) || !(r_max.is_finite() && r_max > 0.0) || points == 0 {
        return Err(Failure::config("density needs t > 0, r_max > 0 and at least one point"));
    }
    let d = CirDensity::new(params, measure.into(), model.xi()[0], t);
    let mut table = Table::new(&["r", "density"]);
    for i in 1..=points {
        let r = r_max * i as f64 / points as f64;
        table.push(vec![r.into(), d.pdf(r).into()]);
    }
    let mass = integrate_half_line(|r: f64| d.pdf(r), Tolerance::default())?;
    let mut out = Outcome::new(table);
    out.diagnostics.insert("t".into(), json!(t));
    out.diagnostics.insert("measure".into(), json!(measure));
    out.diagnostics.insert("mass".into(), json!(mass.value));
    out.diagnostics.insert("mean".into(), json!(d.mean()));
    Ok(out)
}

fn riccati(
    cfg: &ExperimentConfig,
    a: Option<&[Vec<f64>]>,
    big_b: Option<&[Vec<f64>]>,
    gamma: Option<&[Vec<f64>]>,
) -> Result<Outcome, Failure> {
    let problem = match (a, big_b, gamma) {
        (Some(a), Some(b), Some(g)) => CareProblem::new(matrix(a, "a")?, matrix(b, "B")?, matrix(g, "Gamma")?)?,
        (None, None, None) => match &cfg.model()?.params {
            ModelParams::Qtsm(p) => CareProblem::from_qtsm(p)?,
            _ => return Err(Failure::config("riccati needs task.a, task.B and task.Gamma or a qtsm model")),
        },
        _ => return Err(Failure::config("riccati needs all of task.a, task.B and task.Gamma")),
    };
    let sol = solve_care(&problem)?;
    let d = problem.dim();
    let mut table = Table::new(&["i", "j", "V"]);
    for i in 0..d {
        for j in 0..d {
            table.push(vec![i.into(), j.into(), sol.v[(i, j)].into()]);
        }
    }
    let rows = |m: &Matrix<f64>| m.to_rows();
    let summary = json!({
        "V": rows(&sol.v),
        "residual": sol.residual_norm,
        "stable": sol.stable,
        "closed_loop": rows(&sol.closed_loop),
        "closed_loop_eigenvalues": sol.closed_loop_eigenvalues.iter().map(|(re, im)| [*re, *im]).collect::<Vec<_>>(),
    });
    let mut out = Outcome::new(table);
    if let Value::Object(m) = &summary {
        out.diagnostics = m.clone();
    }
    out.stdout_json = Some(summary);
    Ok(out)
}

fn self_test(cfg: &ExperimentConfig, lambda_fault: f64) -> Result<Outcome, Failure> {
    let criteria = selftest::run(selftest::PATHS, cfg.mc.seed, lambda_fault)?;
    let mut out = Outcome::new(selftest::table(&criteria));
    out.failed = criteria.iter().filter(|c| !c.pass).map(|c| c.id.to_string()).collect();
    out.diagnostics.insert("failed".into(), json!(out.failed));
    Ok(out)
}
