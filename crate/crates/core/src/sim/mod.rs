//! Path simulation: time grids, schemes, deterministic per-path random
//! streams, streaming path functionals and variation processes.

mod engine;
mod grid;
mod lamperti;
mod rng;
mod scheme;

pub use engine::{
    first_variation_vega, run_paths, simulate, Accumulators, MatrixFn, McConfig, PathEnsemble,
    PathFunctional, PathResult, ScoreFn, StateFn, StepView,
};
pub use grid::{default_steps, GridSpec};
pub use lamperti::{lamperti, Lamperti};
pub use rng::{increments, PathRng};
pub use scheme::{Scheme, Stepper};
