//! Individualism–collectivism society model.
//!
//! Individuals are born at mass-rate `λ_b` with quality `Q = ±1` (fair coin)
//! and welfare 0. Welfare drifts at `(1-w)Q + w·Q̄`, where `Q̄` is the mean
//! quality of the living population and `w ∈ [0, 1]` is the collectivism
//! weight. Individuals die at hazard `λ_d` or when welfare reaches `-r`.
//!
//! - [`steady_state`]: parameter validation and the fixed point for `Q̄`.
//! - [`metrics`]: closed-form population, welfare, lifetime and inequality metrics.
//! - [`simulator`]: exact finite-agent event simulation used as an oracle.
//! - [`validation`]: comparative-statics sweeps and claim checks.
//! - [`cli`]: the `coevo` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod metrics;
pub mod simulator;
pub mod steady_state;
pub mod validation;

pub use error::{CoevoError, Result};
pub use metrics::{evaluate, SocietyMetrics};
pub use simulator::{run_simulation, SimConfig, SimResult};
pub use steady_state::{steady_state, Quality, SocietyParams, SteadyState};
