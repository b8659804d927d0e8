//! The JSON experiment report.

use std::time::Duration;

use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::tasks::Outcome;

/// Keys appear in a fixed order; the resolved configuration under `config`
/// reproduces the run.
pub fn build(cfg: &ExperimentConfig, outcome: &Outcome, threads: usize, wall_time: Duration) -> Value {
    json!({
        "tool": "longgreeks",
        "version": env!("CARGO_PKG_VERSION"),
        "task": cfg.task.kind(),
        "seed": cfg.mc.seed,
        "config": serde_json::to_value(cfg).expect("configuration serializes"),
        "columns": outcome.table.columns,
        "rows": outcome.table.to_json(),
        "diagnostics": Value::Object(outcome.diagnostics.clone()),
        "versions": {
            "longgreeks-cli": env!("CARGO_PKG_VERSION"),
            "longgreeks": longgreeks::VERSION,
        },
        "wall_time": wall_time.as_secs_f64(),
        "threads": threads,
    })
}
