//! The transpose-free zeroth-order solver and the two baselines it is
//! compared against.
//!
//! The solver only touches `A` and `B` through [`OperatorPair`]. The
//! baselines need `A^T` (Riemannian gradient ascent) or norm estimates of the
//! dense matrices (step sizes of both baselines), so they take [`Matrix`]
//! arguments directly.
//!
//! [`OperatorPair`]: crate::linalg::OperatorPair
//! [`Matrix`]: crate::linalg::Matrix

mod baselines;
mod runner;
mod step_size;
mod szo;

pub use baselines::{rga_run, rga_run_from, zo_gradient_estimate, zo_gradient_estimate_along, zorga_run, zorga_run_from, ZorgaVariant};
pub use step_size::{optimal_step_size, stationarity_residual};
pub use szo::{szo_run, szo_run_from, szo_step, szo_step_along, IterateState, StopSignal};

use crate::error::{Error, Result};

/// Stopping and recording parameters shared by all solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Directions sampled per iteration.
    pub m: usize,
    pub max_iters: usize,
    /// Stop once the mean of `b_k²` over the last `b_window` steps is below this.
    pub b_tol_sq: f64,
    pub b_window: usize,
    /// Stop once the relative quotient error is at most this (needs a monitor
    /// that knows the maximal quotient).
    pub target_rqe: Option<f64>,
    pub record_every: usize,
    /// Wall-clock budget in seconds of solver time.
    pub time_budget_s: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { m: 1, max_iters: 1000, b_tol_sq: 1e-24, b_window: 50, target_rqe: None, record_every: 1, time_budget_s: None }
    }
}

impl SolverConfig {
    pub fn with_m(m: usize, max_iters: usize) -> Self {
        Self { m, max_iters, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.b_window < 1 || self.record_every < 1 {
            return Err(Error::InvalidConfig("b_window and record_every must be positive".into()));
        }
        if !(self.b_tol_sq >= 0.0) {
            return Err(Error::InvalidConfig("b_tol_sq must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    /// The sampled coefficient `b` was exactly zero.
    ExactTermination,
    BWindowBelowTol,
    MaxIters,
    TargetReached,
    TimeBudget,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::ExactTermination => "exact-termination",
            StopReason::BWindowBelowTol => "b-window-below-tol",
            StopReason::MaxIters => "max-iters",
            StopReason::TargetReached => "target-reached",
            StopReason::TimeBudget => "time-budget",
        }
    }
}
