//! Simulator for bipartite quantum measurement engines driven by non-ideal
//! (finite-temperature, full-rank) measurements.
//!
//! The crate builds up from dense complex linear algebra ([`qmath`]) through
//! physical specifications and states ([`model`]), correlating measurement
//! unitaries and their diagnostics ([`measurement`]), the engine cycle and
//! its energy ledger ([`engine`]), to ready-made two-qubit scenarios and
//! parameter sweeps ([`scenario`]).

pub mod engine;
pub mod error;
pub mod measurement;
pub mod model;
pub mod qmath;
pub mod scenario;
pub mod tol;

pub use error::{Error, Result};
