//! Small dense linear algebra, generic over [`Scalar`](crate::Scalar).

mod expm;
pub mod lu;
mod matrix;
pub mod schur;
mod sylvester;

pub use expm::expm;
pub use lu::{inverse, solve, Lu};
pub use matrix::{dot, norm2, Matrix};
pub use schur::RealSchur;
pub use sylvester::{lyapunov, sylvester};
