//! Experiment configuration: JSON schema, dotted overrides and conversion
//! into core types.

use std::path::Path;

use longgreeks::analytic::Measure;
use longgreeks::estimators::{FdOptions, SlopeMethod};
use longgreeks::linalg::Matrix;
use longgreeks::models::{validate, ModelSpec, Param, Payoff, PayoffSpec, QtsmParams, ValidatedModel};
use longgreeks::sim::{McConfig, Scheme};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::failure::Failure;

/// Environment variable that replaces `mc.seed`.
pub const SEED_ENV: &str = "LONGGREEKS_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub payoff: Option<PayoffConfig>,
    #[serde(default)]
    pub mc: McBlock,
    #[serde(default)]
    pub grid: GridBlock,
    pub task: TaskConfig,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Gbm {
        mu: f64,
        sigma: f64,
        r: f64,
        xi: Vec<f64>,
    },
    Cir {
        theta: f64,
        a: f64,
        sigma: f64,
        xi: Vec<f64>,
    },
    Qtsm {
        b: Vec<f64>,
        #[serde(rename = "B")]
        big_b: Vec<Vec<f64>>,
        sigma: Vec<Vec<f64>>,
        beta: f64,
        alpha: Vec<f64>,
        #[serde(rename = "Gamma")]
        gamma: Vec<Vec<f64>>,
        xi: Vec<f64>,
    },
    Heston {
        mu: f64,
        gamma: f64,
        beta: f64,
        delta: f64,
        rho: f64,
        xi: Vec<f64>,
    },
    ThreeHalves {
        theta: f64,
        a: f64,
        sigma: f64,
        #[serde(default)]
        r: f64,
        leverage: f64,
        alpha: f64,
        xi: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffConfig {
    Power { alpha: f64 },
    PowerCall { alpha: f64, strike: f64 },
    Bump { center: Vec<f64>, width: f64, height: f64 },
    Indicator { center: Vec<f64>, width: f64, height: f64 },
    Bond,
    LetfUtility { alpha: f64, leverage: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// `null` picks the model's default scheme.
    #[serde(default)]
    pub scheme: Option<String>,
    #[serde(default)]
    pub antithetic: bool,
}

fn default_paths() -> usize {
    100_000
}

fn default_seed() -> u64 {
    20_240_601
}

impl Default for McBlock {
    fn default() -> Self {
        Self { n_paths: default_paths(), seed: default_seed(), scheme: None, antithetic: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(rename = "T_grid", default)]
    pub horizons: Option<Vec<f64>>,
    #[serde(default = "default_steps_per_year")]
    pub steps_per_year: f64,
}

fn default_horizon() -> f64 {
    1.0
}

fn default_steps_per_year() -> f64 {
    32.0
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { horizon: default_horizon(), horizons: None, steps_per_year: default_steps_per_year() }
    }
}

/// Finite-difference settings of the `greeks` and `convergence` tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdBlock {
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default = "yes")]
    pub crn: bool,
    #[serde(default)]
    pub richardson: bool,
}

fn yes() -> bool {
    true
}

impl Default for FdBlock {
    fn default() -> Self {
        Self { h: None, crn: true, richardson: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureTag {
    Q,
    P,
}

impl From<MeasureTag> for Measure {
    fn from(m: MeasureTag) -> Self {
        match m {
            MeasureTag::Q => Measure::Q,
            MeasureTag::P => Measure::P,
        }
    }
}

fn measure_q() -> MeasureTag {
    MeasureTag::Q
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    Price {
        #[serde(default = "measure_q")]
        measure: MeasureTag,
    },
    Greeks {
        param: String,
        /// `null` picks BEL for initial-state coordinates, Lamperti for
        /// volatilities and LR otherwise.
        #[serde(default)]
        method: Option<String>,
        #[serde(default)]
        fd: FdBlock,
    },
    Convergence {
        param: String,
        #[serde(default)]
        method: Option<String>,
        #[serde(default)]
        fd: FdBlock,
    },
    Density {
        /// Horizon of the transition density; `null` uses `grid.T`.
        #[serde(default)]
        t: Option<f64>,
        #[serde(default = "measure_q")]
        measure: MeasureTag,
        #[serde(default = "default_r_max")]
        r_max: f64,
        #[serde(default = "default_points")]
        points: usize,
    },
    Riccati {
        #[serde(default)]
        a: Option<Vec<Vec<f64>>>,
        #[serde(rename = "B", default)]
        big_b: Option<Vec<Vec<f64>>>,
        #[serde(rename = "Gamma", alias = "Γ", default)]
        gamma: Option<Vec<Vec<f64>>>,
    },
    Selftest {
        /// Added to every extracted eigenvalue in the eigenpair criterion.
        #[serde(default)]
        lambda_fault: f64,
    },
}

fn default_r_max() -> f64 {
    0.5
}

fn default_points() -> usize {
    200
}

impl TaskConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskConfig::Price { .. } => "price",
            TaskConfig::Greeks { .. } => "greeks",
            TaskConfig::Convergence { .. } => "convergence",
            TaskConfig::Density { .. } => "density",
            TaskConfig::Riccati { .. } => "riccati",
            TaskConfig::Selftest { .. } => "selftest",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Relative paths are resolved against `--out-dir`.
    #[serde(default)]
    pub csv_path: Option<String>,
    #[serde(default)]
    pub json_path: Option<String>,
}

/// Builds the resolved configuration for `task` from an optional file, the
/// seed environment variable and `key=value` overrides, in that order.
pub fn load(
    task: &str,
    path: Option<&Path>,
    overrides: &[String],
    env_seed: Option<&str>,
) -> Result<ExperimentConfig, Failure> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    if !root.is_object() {
        return Err(Failure::config("configuration must be a JSON object"));
    }
    if let Some(raw) = env_seed {
        let seed: u64 = raw
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("{SEED_ENV}={raw} is not an unsigned 64-bit integer")))?;
        set_path(&mut root, "mc.seed", Value::from(seed))?;
    }
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("override '{item}' is not of the form key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(&mut root, key.trim(), value)?;
    }
    let obj = root.as_object_mut().expect("checked above");
    let block = obj.entry("task").or_insert_with(|| Value::Object(Map::new()));
    let block = block
        .as_object_mut()
        .ok_or_else(|| Failure::config("'task' must be an object"))?;
    match block.get("kind") {
        None => {
            block.insert("kind".into(), Value::String(task.into()));
        }
        Some(Value::String(k)) if k == task => {}
        Some(other) => {
            return Err(Failure::config(format!(
                "config task kind {other} does not match the '{task}' subcommand"
            )))
        }
    }
    serde_json::from_value(root).map_err(|e| Failure::config(e.to_string()))
}

/// Writes `value` at the dotted `key`, creating objects on the way.
/// Numeric segments index into existing arrays.
fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), Failure> {
    if key.is_empty() {
        return Err(Failure::config("empty override key"));
    }
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert((*part).to_string(), value);
                    return Ok(());
                }
                map.entry((*part).to_string()).or_insert_with(|| Value::Object(Map::new()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Failure::config(format!("'{part}' in '{key}' is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Failure::config(format!("index {idx} in '{key}' is out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Failure::config(format!("'{key}' descends into a non-container value"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

pub(crate) fn matrix(rows: &[Vec<f64>], name: &str) -> Result<Matrix<f64>, Failure> {
    Matrix::from_rows(rows).map_err(|e| Failure::config(format!("{name}: {e}")))
}

impl ModelConfig {
    pub fn to_spec(&self) -> Result<ModelSpec<f64>, Failure> {
        let xi = |v: &Vec<f64>, n: usize| -> Result<f64, Failure> {
            if v.len() != n {
                return Err(Failure::config(format!("xi must have {n} entries, got {}", v.len())));
            }
            Ok(v[0])
        };
        Ok(match self {
            ModelConfig::Gbm { mu, sigma, r, xi: x } => ModelSpec::gbm(*mu, *sigma, *r, xi(x, 1)?),
            ModelConfig::Cir { theta, a, sigma, xi: x } => ModelSpec::cir(*theta, *a, *sigma, xi(x, 1)?),
            ModelConfig::Heston { mu, gamma, beta, delta, rho, xi: x } => {
                xi(x, 2)?;
                ModelSpec::heston(*mu, *gamma, *beta, *delta, *rho, x[0], x[1])
            }
            ModelConfig::ThreeHalves { theta, a, sigma, r, leverage, alpha, xi: x } => {
                ModelSpec::three_halves(*theta, *a, *sigma, *r, *leverage, *alpha, xi(x, 1)?)
            }
            ModelConfig::Qtsm { b, big_b, sigma, beta, alpha, gamma, xi: x } => ModelSpec::qtsm(
                QtsmParams {
                    b: b.clone(),
                    big_b: matrix(big_b, "B")?,
                    sigma: matrix(sigma, "sigma")?,
                    beta: *beta,
                    alpha: alpha.clone(),
                    gamma: matrix(gamma, "Gamma")?,
                },
                x.clone(),
            ),
        })
    }
}

impl PayoffConfig {
    pub fn to_spec(&self) -> PayoffSpec<f64> {
        let payoff = match self {
            PayoffConfig::Power { alpha } => Payoff::Power { alpha: *alpha },
            PayoffConfig::PowerCall { alpha, strike } => Payoff::PowerCall { alpha: *alpha, strike: *strike },
            PayoffConfig::Bump { center, width, height } => {
                Payoff::Bump { center: center.clone(), width: *width, height: *height }
            }
            PayoffConfig::Indicator { center, width, height } => {
                Payoff::Indicator { center: center.clone(), width: *width, height: *height }
            }
            PayoffConfig::Bond => Payoff::Bond,
            PayoffConfig::LetfUtility { alpha, leverage } => Payoff::LetfUtility { alpha: *alpha, leverage: *leverage },
        };
        PayoffSpec::new(payoff)
    }
}

impl ExperimentConfig {
    pub fn model(&self) -> Result<ValidatedModel<f64>, Failure> {
        let m = self
            .model
            .as_ref()
            .ok_or_else(|| Failure::config(format!("the {} task needs a 'model' block", self.task.kind())))?;
        Ok(validate(m.to_spec()?)?)
    }

    pub fn payoff(&self) -> Result<PayoffSpec<f64>, Failure> {
        let p = self
            .payoff
            .as_ref()
            .ok_or_else(|| Failure::config(format!("the {} task needs a 'payoff' block", self.task.kind())))?;
        let spec = p.to_spec();
        spec.check()?;
        Ok(spec)
    }

    pub fn mc(&self) -> Result<McConfig, Failure> {
        let mut mc = McConfig::new(self.mc.n_paths, self.mc.seed).with_antithetic(self.mc.antithetic);
        if let Some(s) = &self.mc.scheme {
            mc = mc.with_scheme(s.parse::<Scheme>()?);
        }
        Ok(mc)
    }

    /// The horizons of the run: `grid.T_grid` when present, else `grid.T`.
    pub fn horizons(&self) -> Vec<f64> {
        self.grid.horizons.clone().unwrap_or_else(|| vec![self.grid.horizon])
    }

    pub fn csv_name(&self) -> String {
        self.output.csv_path.clone().unwrap_or_else(|| format!("{}.csv", self.task.kind()))
    }

    pub fn json_name(&self) -> String {
        self.output.json_path.clone().unwrap_or_else(|| format!("{}.json", self.task.kind()))
    }
}

/// Parameter and estimator of a sensitivity task.
pub fn sensitivity_target(param: &str, method: Option<&str>) -> Result<(Param, SlopeMethod), Failure> {
    let p: Param = param.parse()?;
    let m = match method {
        Some(s) => s.parse()?,
        None => match p {
            Param::Xi(_) => SlopeMethod::Bel,
            Param::Sigma | Param::SigmaEntry(..) => SlopeMethod::Lamperti,
            _ => SlopeMethod::Lr,
        },
    };
    Ok((p, m))
}

impl FdBlock {
    pub fn options(&self) -> FdOptions<f64> {
        FdOptions { h: self.h, crn: self.crn, richardson: self.richardson }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, task: &str, overrides: &[&str]) -> Result<ExperimentConfig, Failure> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, text).unwrap();
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        load(task, Some(&path), &o, None)
    }

    #[test]
    fn defaults_fill_missing_blocks() {
        let c = parse(r#"{"model": {"kind": "cir", "theta": 0.1, "a": 0.5, "sigma": 0.2, "xi": [0.04]}}"#, "price", &[])
            .unwrap();
        assert_eq!(c.task, TaskConfig::Price { measure: MeasureTag::Q });
        assert_eq!(c.mc, McBlock::default());
        assert_eq!(c.grid.steps_per_year, 32.0);
        assert_eq!(c.csv_name(), "price.csv");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = [
            r#"{"modle": {}}"#,
            r#"{"mc": {"n_path": 10}}"#,
            r#"{"model": {"kind": "gbm", "mu": 0.1, "sigma": 0.2, "r": 0.0, "xi": [1], "extra": 1}}"#,
            r#"{"task": {"kind": "price", "foo": 1}}"#,
        ];
        for text in bad {
            let err = parse(text, "price", &[]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn dotted_overrides() {
        let c = parse(
            r#"{"model": {"kind": "cir", "theta": 0.1, "a": 0.5, "sigma": 0.2, "xi": [0.04]}}"#,
            "convergence",
            &["task.param=theta", "grid.T_grid=[5,10]", "mc.n_paths=10", "model.xi.0=0.05", "mc.scheme=ExactCIR"],
        )
        .unwrap();
        assert_eq!(c.grid.horizons, Some(vec![5.0, 10.0]));
        assert_eq!(c.mc.n_paths, 10);
        assert_eq!(c.mc.scheme.as_deref(), Some("ExactCIR"));
        assert!(matches!(&c.model, Some(ModelConfig::Cir { xi, .. }) if xi == &vec![0.05]));
        assert!(matches!(&c.task, TaskConfig::Convergence { param, .. } if param == "theta"));
        let err = parse("{}", "price", &["model.xi.3=1"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn task_kind_must_match_subcommand() {
        let err = parse(r#"{"task": {"kind": "density"}}"#, "price", &[]).unwrap_err();
        assert!(err.to_string().contains("does not match"));
    }

    #[test]
    fn environment_seed_overrides_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"mc": {"seed": 1}}"#).unwrap();
        let c = load("selftest", Some(&path), &[], Some("99")).unwrap();
        assert_eq!(c.mc.seed, 99);
        assert!(load("selftest", Some(&path), &[], Some("x")).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = parse(
            r#"{"model": {"kind": "qtsm", "b": [0.1], "B": [[-1]], "sigma": [[0.3]], "beta": 0, "alpha": [0], "Gamma": [[0.5]], "xi": [0.1]},
                "payoff": {"kind": "bump", "center": [0], "width": 1, "height": 1},
                "task": {"kind": "greeks", "param": "b[0]"}}"#,
            "greeks",
            &[],
        )
        .unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn default_methods() {
        assert_eq!(sensitivity_target("xi[0]", None).unwrap().1, SlopeMethod::Bel);
        assert_eq!(sensitivity_target("sigma", None).unwrap().1, SlopeMethod::Lamperti);
        assert_eq!(sensitivity_target("theta", None).unwrap().1, SlopeMethod::Lr);
        assert_eq!(sensitivity_target("theta", Some("fd")).unwrap().1, SlopeMethod::Fd);
        assert!(sensitivity_target("nope", None).is_err());
    }
}
