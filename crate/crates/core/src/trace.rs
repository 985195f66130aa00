//! Per-iteration run records and the hook through which diagnostics are
//! attached to a solver without the solver seeing any dense data.

/// One recorded iterate `v^k`.
///
/// `abs_b` and `tau` describe the step taken *from* `v^k`; they are `None`
/// for the last iterate of a run (no step was taken) and for solvers that do
/// not produce them.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// Cumulative solver time (diagnostics excluded) to reach `v^k`.
    pub wall_s: f64,
    pub a: f64,
    pub abs_b: Option<f64>,
    pub tau: Option<f64>,
    pub rqe: Option<f64>,
    pub msqr: Option<f64>,
    pub grad_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub trial: usize,
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new(trial: usize) -> Self {
        Self { trial, records: Vec::new() }
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Objective values are nondecreasing (up to `tol` relative to `max(1, |a|)`).
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.records.windows(2).all(|w| w[1].a >= w[0].a - tol * w[0].a.abs().max(1.0))
    }
}

/// Extra quantities a monitor can attach to a recorded iterate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Observation {
    pub rqe: Option<f64>,
    /// Squared eigen-residual of this iterate; the run keeps the running minimum.
    pub residual_sq: Option<f64>,
    pub grad_norm: Option<f64>,
}

/// Diagnostics hook for solver runs.
pub trait Monitor {
    /// The maximal quotient, if known; enables target-based stopping.
    fn reference_value(&self) -> Option<f64> {
        None
    }

    fn observe(&mut self, _v: &[f64], _a: f64) -> Observation {
        Observation::default()
    }
}

/// Records only what the solver computes itself.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoMonitor;

impl Monitor for NoMonitor {}

/// Monitor that knows the maximal quotient and reports relative error only.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceMonitor {
    pub max_value: f64,
}

impl Monitor for ReferenceMonitor {
    fn reference_value(&self) -> Option<f64> {
        Some(self.max_value)
    }

    fn observe(&mut self, _v: &[f64], a: f64) -> Observation {
        Observation { rqe: relative_error(self.max_value, a), ..Default::default() }
    }
}

/// `(R − a) / R`, or `None` when `R = 0`.
pub(crate) fn relative_error(max_value: f64, a: f64) -> Option<f64> {
    (max_value != 0.0).then(|| (max_value - a) / max_value)
}
