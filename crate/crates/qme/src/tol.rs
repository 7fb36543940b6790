//! Numerical tolerances used across the crate.
//!
//! These are deliberately centralized: validation gates and integrator
//! guards must agree between modules, and tests reference the same values.

/// Hermiticity gate for matrices handed to the eigensolver.
pub const HERM_INPUT: f64 = 1e-10;

/// Hermiticity and unit-trace gate for density operators.
pub const STATE: f64 = 1e-12;

/// Eigenvalues above this floor count as nonnegative for positivity checks.
pub const EIG_FLOOR: f64 = -1e-10;

/// Residual below which a generator output is accepted as traceless.
pub const TRACELESS: f64 = 1e-14;

/// Allowed trace drift over a full integrated trajectory.
pub const TRACE_DRIFT: f64 = 1e-9;

/// Stability guard: dt times the fastest rate in the generator must stay
/// below this for the fixed-step integrator to accept the step size.
pub const RK4_GUARD: f64 = 0.1;
