//! Multistage estimation of binomial and Poisson parameters with
//! prescribed absolute, relative or mixed precision.
//!
//! The crate is layered bottom-up: tail-probability kernels, schedule
//! construction, the sequential stopping executor, an exact coverage
//! evaluator, a coverage tuner for the risk-allocation factor and a seeded
//! Monte Carlo harness.

// `!(x > 0.0)` style checks are meant to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coverage;
pub mod error;
pub mod kernels;
pub mod plan;
pub mod sim;
pub mod stopping;
pub mod tuner;

pub use coverage::{
    brute_force_enumerate, exact_coverage, exact_coverage_fixed, exact_coverage_inverse,
    exact_coverage_open, sweep, CoverageReport,
};
pub use error::{Error, Result};
pub use kernels::{m_b, m_i, m_p, s_b, s_p, UpperIndex};
pub use plan::{build, Criterion, Mode, PrecisionGoal, Stage, StageSchedule};
pub use sim::{simulate_coverage, MonteCarloReport};
pub use stopping::{run, EstimationResult, RunLimits, StageRecord};
pub use tuner::{tune_zeta, TuningOutcome, VerificationGrid};
