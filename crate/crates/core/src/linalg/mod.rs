//! Self-contained dense linear algebra and ODE kernel.
//!
//! Everything downstream works with matrices of dimension d ≤ 16 (states)
//! or d² ≤ 256 (superoperators), so the implementations here favour
//! robustness and determinism over large-scale performance: Higham-style
//! scaling-and-squaring for the matrix exponential, Hessenberg reduction
//! plus shifted QR for eigenvalues, and an embedded Dormand–Prince pair
//! as an independent integration oracle.

mod eig;
mod expm;
mod matrix;
mod ode;

pub use eig::{eigvals, eigvals_real, psd_check};
pub use expm::expm;
pub use matrix::{ComplexMatrix, RealMatrix};
pub use ode::{integrate_linear, integrate_rk, Trajectory};

use thiserror::Error;

/// Errors produced by the linear-algebra kernel.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian within {tol:e} (max deviation {deviation:e})")]
    NotHermitian { tol: f64, deviation: f64 },
    #[error("eigenvalue iteration did not converge after {iterations} iterations (residual {residual:e})")]
    EigNonConvergence { iterations: usize, residual: f64 },
    #[error("linear solve failed: matrix is singular to working precision")]
    Singular,
    #[error("time grid must be strictly increasing and start at t >= 0")]
    BadTimeGrid,
    #[error("trajectory times and states have different lengths ({times} vs {states})")]
    TrajectoryMismatch { times: usize, states: usize },
    #[error("step size underflow at t = {t:e}: system too stiff for the requested tolerance")]
    StepUnderflow { t: f64 },
}
